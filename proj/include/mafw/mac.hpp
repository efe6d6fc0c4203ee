#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mafw/rng.hpp"

/// Slotted contention abstraction of a CSMA/CA MAC. Each agent contends with
/// a fixed per-round access probability derived from its contention window
/// and sends aggregated frames drained from a saturated queue.
namespace mafw::mac {

struct MacParams {
  int cw_min = 15;
  int cw_max = 1023;
  double frame_len_max_bits = 524280.0;  // 65535-byte aggregate
  double queue_capacity_bits = 4e8;
  double mini_slot_s = 9e-6;
  double frame_overhead_s = 100e-6;  // preamble + IFS + block ack per exchange

  void validate() const;
};

struct MacAction {
  int cw = 15;
  double frame_len_bits = 0.0;
};

struct TxQueue {
  double backlog_bits = 0.0;
  double capacity_bits = 0.0;

  void refill() { backlog_bits = capacity_bits; }
};

struct SlotOutcome {
  double delivered_bits = 0.0;
  std::int64_t frames_sent = 0;
  std::int64_t frames_acked = 0;
  double busy_time_s = 0.0;
  double slot_len_s = 0.0;
};

/// Channel-level round counters for one slot.
struct RoundCounters {
  std::int64_t idle = 0;
  std::int64_t success = 0;
  std::int64_t collision = 0;

  std::int64_t total() const { return idle + success + collision; }
};

struct SlotResult {
  std::vector<SlotOutcome> agents;
  RoundCounters rounds;
};

/// Access probability of a contender with window cw.
inline double access_probability(int cw) { return 2.0 / (static_cast<double>(cw) + 1.0); }

/// Runs one slot of contention. Queues are drained in place; they are not
/// refilled here. Throws std::invalid_argument on an empty agent list, size
/// mismatches, non-positive slot length, or cw outside [cw_min, cw_max].
SlotResult simulate_slot(std::span<const MacAction> actions, std::span<const double> rates_bps,
                         std::span<TxQueue> queues, double slot_len_s, const MacParams& params,
                         Rng& rng);

double throughput(double delivered_bits, double slot_len_s);

/// (sent - acked) / sent, or 0 when nothing was sent.
double packet_loss_rate(const SlotOutcome& outcome);

/// (slot_len - busy) / slot_len.
double idle_fraction(const SlotOutcome& outcome);

}  // namespace mafw::mac

#include "mafw/mac.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mafw::mac {

void MacParams::validate() const {
  if (cw_min < 1 || cw_max < cw_min) throw std::invalid_argument("mac: need 1 <= cw_min <= cw_max");
  if (!(frame_len_max_bits > 0.0)) throw std::invalid_argument("mac: frame_len_max must be > 0");
  if (!(queue_capacity_bits >= frame_len_max_bits)) {
    throw std::invalid_argument("mac: queue capacity must hold at least one maximal frame");
  }
  if (!(mini_slot_s > 0.0)) throw std::invalid_argument("mac: mini_slot must be > 0");
  if (!(frame_overhead_s >= 0.0)) throw std::invalid_argument("mac: frame_overhead must be >= 0");
}

namespace {

// Number of empty rounds before the first non-empty one when each round is
// empty with probability q.
std::int64_t draw_idle_run(double q, Rng& rng) {
  if (q <= 0.0) return 0;
  const double u = rng.uniform_open0();
  const double n = std::floor(std::log(u) / std::log(q));
  return n > 9e15 ? static_cast<std::int64_t>(9e15) : static_cast<std::int64_t>(n);
}

}  // namespace

SlotResult simulate_slot(std::span<const MacAction> actions, std::span<const double> rates_bps,
                         std::span<TxQueue> queues, double slot_len_s, const MacParams& params,
                         Rng& rng) {
  const std::size_t n = actions.size();
  if (n == 0) throw std::invalid_argument("simulate_slot: empty agent list");
  if (rates_bps.size() != n || queues.size() != n) {
    throw std::invalid_argument("simulate_slot: actions, rates and queues differ in length");
  }
  if (!(slot_len_s > 0.0)) throw std::invalid_argument("simulate_slot: slot length must be > 0");
  for (std::size_t k = 0; k < n; ++k) {
    if (actions[k].cw < params.cw_min || actions[k].cw > params.cw_max) {
      throw std::invalid_argument("simulate_slot: cw " + std::to_string(actions[k].cw) +
                                  " outside [cw_min, cw_max]");
    }
    if (!(rates_bps[k] >= 0.0)) throw std::invalid_argument("simulate_slot: negative rate");
  }

  SlotResult result;
  result.agents.assign(n, SlotOutcome{});
  for (auto& o : result.agents) o.slot_len_s = slot_len_s;

  std::vector<double> frame_bits(n);
  std::vector<double> access(n);
  auto refresh = [&](std::size_t k) {
    frame_bits[k] = std::min(std::max(actions[k].frame_len_bits, 0.0), queues[k].backlog_bits);
    access[k] = (frame_bits[k] > 0.0 && rates_bps[k] > 0.0) ? access_probability(actions[k].cw) : 0.0;
  };
  for (std::size_t k = 0; k < n; ++k) refresh(k);

  std::vector<std::size_t> senders;
  senders.reserve(n);
  double remaining = slot_len_s;
  while (remaining > 0.0) {
    double q = 1.0;
    for (double p : access) q *= 1.0 - p;
    if (q >= 1.0) {
      result.rounds.idle += static_cast<std::int64_t>(remaining / params.mini_slot_s);
      break;
    }

    const std::int64_t idle_run = draw_idle_run(q, rng);
    const double idle_time = static_cast<double>(idle_run) * params.mini_slot_s;
    if (idle_time >= remaining) {
      result.rounds.idle += static_cast<std::int64_t>(remaining / params.mini_slot_s);
      break;
    }
    result.rounds.idle += idle_run;
    remaining -= idle_time;

    // Transmitter set conditioned on being non-empty: pick the lowest-index
    // transmitter from its conditional law, then the rest independently.
    senders.clear();
    double target = rng.uniform() * (1.0 - q);
    double none_before = 1.0;
    std::size_t first = n;
    for (std::size_t k = 0; k < n; ++k) {
      const double mass = none_before * access[k];
      if (target < mass) {
        first = k;
        break;
      }
      target -= mass;
      none_before *= 1.0 - access[k];
    }
    if (first == n) {
      // Rounding residue: fall back to the last eligible contender.
      for (std::size_t k = n; k-- > 0;) {
        if (access[k] > 0.0) {
          first = k;
          break;
        }
      }
    }
    senders.push_back(first);
    for (std::size_t k = first + 1; k < n; ++k) {
      if (access[k] > 0.0 && rng.bernoulli(access[k])) senders.push_back(k);
    }

    if (senders.size() == 1) {
      const std::size_t k = senders.front();
      const double full_airtime = frame_bits[k] / rates_bps[k] + params.frame_overhead_s;
      const double duration = std::min(full_airtime, remaining);
      const double payload_time = std::max(0.0, duration - params.frame_overhead_s);
      const double bits = std::min(frame_bits[k], payload_time * rates_bps[k]);
      auto& out = result.agents[k];
      out.frames_sent += 1;
      if (bits > 0.0) out.frames_acked += 1;
      out.delivered_bits += bits;
      out.busy_time_s += duration;
      queues[k].backlog_bits -= bits;
      refresh(k);
      result.rounds.success += 1;
      remaining -= duration;
    } else {
      double longest = 0.0;
      for (std::size_t k : senders) longest = std::max(longest, frame_bits[k] / rates_bps[k]);
      const double duration = std::min(longest + params.frame_overhead_s, remaining);
      for (std::size_t k : senders) {
        auto& out = result.agents[k];
        out.frames_sent += 1;
        out.busy_time_s += std::min(frame_bits[k] / rates_bps[k] + params.frame_overhead_s, duration);
      }
      result.rounds.collision += 1;
      remaining -= duration;
    }
  }
  return result;
}

double throughput(double delivered_bits, double slot_len_s) { return delivered_bits / slot_len_s; }

double packet_loss_rate(const SlotOutcome& outcome) {
  if (outcome.frames_sent <= 0) return 0.0;
  return static_cast<double>(outcome.frames_sent - outcome.frames_acked) /
         static_cast<double>(outcome.frames_sent);
}

double idle_fraction(const SlotOutcome& outcome) {
  const double f = (outcome.slot_len_s - outcome.busy_time_s) / outcome.slot_len_s;
  return std::clamp(f, 0.0, 1.0);
}

}  // namespace mafw::mac

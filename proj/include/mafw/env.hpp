#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mafw/channel.hpp"
#include "mafw/energy.hpp"
#include "mafw/mac.hpp"
#include "mafw/rng.hpp"

/// Multi-agent wireless environment: agents move, links are re-drawn, the MAC
/// runs one slot, and each agent is charged compute energy and latency for its
/// privacy class. Rewards squash throughput/latency or throughput/energy
/// through z(x) = (2/pi) atan(x).
namespace mafw::env {

inline constexpr std::size_t kObservationDim = 3;
inline constexpr std::size_t kActionDim = 4;

enum class RewardScheme { kThroughputLatency = 1, kThroughputEnergy = 2 };

enum class Placement { kUniformDisc, kRadialSpread };

struct RewardConfig {
  RewardScheme scheme = RewardScheme::kThroughputEnergy;
  double t_max_sensitive_s = 0.5;
  double t_max_insensitive_s = 0.5;
  // Ratios are formed in these units before squashing.
  double throughput_unit_bps = 1e6;  // Mbps
  double latency_unit_s = 1e-3;      // ms
  double energy_unit_j = 1e-3;       // mJ
};

struct ScenarioConfig {
  std::size_t sensitive_agents = 8;
  std::size_t insensitive_agents = 8;

  Placement placement = Placement::kUniformDisc;
  double area_radius_m = 7.5;
  double spread_min_radius_m = 1.0;  // kRadialSpread only
  double max_radius_m = 20.0;
  double speed_mps = 1.0;
  double slot_s = 0.2;

  std::size_t bs_antennas = 4;
  std::size_t ue_antennas = 2;
  channel::PathLossParams path_loss;
  channel::RadioParams radio;
  mac::MacParams mac;

  energy::ComputeProfile sta_compute;     // freq_hz is overwritten by actions
  energy::ComputeProfile server_compute{1e-26, 2e9, 2e9, 330.0, 8.0, 1e3, 1e3, 0.0};
  double server_task_bits = 1e4;          // d_s
  double task_bits_per_delivered_bit = 0.05;
  double batch_samples = 8.0;
  std::vector<std::size_t> hidden_layers{8, 8, 8};
  double infeasible_latency_s = 10.0;  // latency charged for nonzero work at f = 0

  RewardConfig reward;

  std::size_t agent_count() const { return sensitive_agents + insensitive_agents; }
  /// Agents [0, sensitive) are privacy-sensitive, the rest insensitive.
  bool is_sensitive(std::size_t k) const { return k < sensitive_agents; }

  /// Throws std::invalid_argument listing every violated bound.
  void validate() const;
};

struct AgentSpec {
  bool privacy_sensitive = false;
  std::size_t antennas = 2;
  energy::ComputeProfile compute;
  int cw_min = 15;
  int cw_max = 1023;
  double frame_len_max_bits = 0.0;
  double server_freq_max_hz = 0.0;
  double t_max_s = 0.5;
};

struct Observation {
  double snr_db = 0.0;
  double loss_rate = 0.0;
  double idle = 1.0;

  std::array<double, kObservationDim> as_array() const { return {snr_db, loss_rate, idle}; }
};

struct DecodedAction {
  int cw = 15;
  double frame_len_bits = 0.0;
  double server_freq_hz = 0.0;
  double client_freq_hz = 0.0;
};

/// Affine map of clamp(raw, -1, 1) onto the action bounds, cw rounded.
DecodedAction decode_action(std::span<const double> raw, const AgentSpec& spec);
/// Inverse of decode_action up to cw rounding.
std::array<double, kActionDim> encode_action(const DecodedAction& action, const AgentSpec& spec);

/// z(x) = (2/pi) atan(x).
double squash(double x);

/// Per-agent reward. Ratios with a zero denominator evaluate to 0.
double reward(double throughput_bps, double energy_j, double latency_s, bool privacy_sensitive,
              const RewardConfig& cfg);

struct AgentInfo {
  double throughput_bps = 0.0;
  double latency_s = 0.0;
  double energy_j = 0.0;
  double rate_bps = 0.0;
  bool latency_violation = false;
  bool infeasible = false;
  DecodedAction action;
};

struct StepResult {
  std::vector<Observation> observations;
  std::vector<double> rewards;
  std::vector<AgentInfo> agents;
  double system_reward = 0.0;  // mean of per-agent rewards
  double system_throughput_bps = 0.0;
  double system_energy_j = 0.0;
  double mean_latency_s = 0.0;
  mac::RoundCounters rounds;
};

class WirelessEnv {
 public:
  explicit WirelessEnv(ScenarioConfig config);

  /// Places agents from `seed` and runs one warm-up slot with midpoint actions.
  std::vector<Observation> reset(std::uint64_t seed) { return reset(seed, 0); }
  /// Same placement as reset(seed); channel and MAC randomness drawn from an
  /// independent stream per episode.
  std::vector<Observation> reset(std::uint64_t seed, std::uint64_t episode);
  /// One raw action (length kActionDim) per agent. Throws std::invalid_argument
  /// on a count mismatch or a non-finite entry.
  StepResult step(std::span<const std::array<double, kActionDim>> raw_actions);

  const ScenarioConfig& config() const { return config_; }
  const AgentSpec& spec(std::size_t k) const { return specs_[k]; }
  std::size_t agent_count() const { return specs_.size(); }
  const std::vector<channel::Position>& positions() const { return positions_; }
  const std::vector<channel::LinkState>& links() const { return links_; }

  /// Overrides an agent's position (and anchor); used by tests and fixed layouts.
  void place(std::size_t k, channel::Point at);

  /// Flops per training step for the actor and critic of agent k.
  energy::TrainingLoad training_load(std::size_t k) const;

 private:
  void sample_links();
  StepResult run_slot(std::span<const DecodedAction> actions);

  ScenarioConfig config_;
  std::vector<AgentSpec> specs_;
  std::vector<channel::Position> positions_;
  std::vector<channel::LinkState> links_;
  std::vector<mac::TxQueue> queues_;
  Rng rng_;
};

}  // namespace mafw::env

#include "mafw/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace mafw::env {

void ScenarioConfig::validate() const {
  std::vector<std::string> problems;
  auto check = [&](bool ok, const char* what) {
    if (!ok) problems.emplace_back(what);
  };
  check(agent_count() >= 1, "at least one agent required (sensitive + insensitive >= 1)");
  check(area_radius_m > 0.0, "area_radius must be > 0");
  check(spread_min_radius_m >= 0.0 && spread_min_radius_m <= area_radius_m,
        "spread_min_radius must lie in [0, area_radius]");
  check(max_radius_m > 0.0, "max_radius must be > 0");
  check(speed_mps >= 0.0, "speed must be >= 0");
  check(slot_s > 0.0, "slot must be > 0");
  check(ue_antennas >= 1 && ue_antennas <= bs_antennas, "need 1 <= ue_antennas <= bs_antennas");
  check(server_task_bits >= 0.0, "server_task_bits must be >= 0");
  check(task_bits_per_delivered_bit >= 0.0, "task_bits_per_delivered_bit must be >= 0");
  check(batch_samples >= 1.0, "batch_samples must be >= 1");
  check(!hidden_layers.empty(), "at least one hidden layer required");
  check(std::all_of(hidden_layers.begin(), hidden_layers.end(), [](std::size_t w) { return w > 0; }),
        "hidden layer widths must be > 0");
  check(infeasible_latency_s > 0.0, "infeasible_latency must be > 0");
  check(reward.t_max_sensitive_s > 0.0 && reward.t_max_insensitive_s > 0.0, "T_max must be > 0");
  check(reward.throughput_unit_bps > 0.0 && reward.latency_unit_s > 0.0 && reward.energy_unit_j > 0.0,
        "reward units must be > 0");
  auto nested = [&](auto&& fn, const char* prefix) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      problems.push_back(std::string(prefix) + e.what());
    }
  };
  nested([&] { path_loss.validate(); }, "");
  nested([&] { radio.validate(); }, "");
  nested([&] { mac.validate(); }, "");
  nested([&] { sta_compute.validate(); }, "sta ");
  nested([&] { server_compute.validate(); }, "server ");
  if (!problems.empty()) {
    std::ostringstream os;
    os << "invalid scenario:";
    for (const auto& p : problems) os << "\n  - " << p;
    throw std::invalid_argument(os.str());
  }
}

DecodedAction decode_action(std::span<const double> raw, const AgentSpec& spec) {
  if (raw.size() != kActionDim) throw std::invalid_argument("decode_action: expected 4 entries");
  auto unit = [&](std::size_t i) { return (std::clamp(raw[i], -1.0, 1.0) + 1.0) / 2.0; };
  DecodedAction a;
  a.cw = static_cast<int>(std::lround(spec.cw_min + unit(0) * (spec.cw_max - spec.cw_min)));
  a.frame_len_bits = unit(1) * spec.frame_len_max_bits;
  a.server_freq_hz = unit(2) * spec.server_freq_max_hz;
  a.client_freq_hz = unit(3) * spec.compute.freq_max_hz;
  return a;
}

std::array<double, kActionDim> encode_action(const DecodedAction& action, const AgentSpec& spec) {
  auto raw = [](double value, double lo, double hi) {
    return hi > lo ? 2.0 * (value - lo) / (hi - lo) - 1.0 : -1.0;
  };
  return {raw(action.cw, spec.cw_min, spec.cw_max), raw(action.frame_len_bits, 0.0, spec.frame_len_max_bits),
          raw(action.server_freq_hz, 0.0, spec.server_freq_max_hz),
          raw(action.client_freq_hz, 0.0, spec.compute.freq_max_hz)};
}

double squash(double x) { return 2.0 / std::numbers::pi * std::atan(x); }

double reward(double throughput_bps, double energy_j, double latency_s, bool privacy_sensitive,
              const RewardConfig& cfg) {
  const double t = throughput_bps / cfg.throughput_unit_bps;
  const double lat = latency_s / cfg.latency_unit_s;
  const double e = energy_j / cfg.energy_unit_j;
  if (cfg.scheme == RewardScheme::kThroughputLatency) {
    return lat > 0.0 ? squash(t / lat) : 0.0;
  }
  const double cap = privacy_sensitive ? cfg.t_max_sensitive_s : cfg.t_max_insensitive_s;
  if (latency_s <= cap) return e > 0.0 ? squash(t / e) : 0.0;
  return squash(-lat);
}

WirelessEnv::WirelessEnv(ScenarioConfig config) : config_(std::move(config)) {
  config_.validate();
  const std::size_t n = config_.agent_count();
  specs_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    AgentSpec& s = specs_[k];
    s.privacy_sensitive = config_.is_sensitive(k);
    s.antennas = config_.ue_antennas;
    s.compute = config_.sta_compute;
    s.cw_min = config_.mac.cw_min;
    s.cw_max = config_.mac.cw_max;
    s.frame_len_max_bits = config_.mac.frame_len_max_bits;
    s.server_freq_max_hz = config_.server_compute.freq_max_hz;
    s.t_max_s = s.privacy_sensitive ? config_.reward.t_max_sensitive_s : config_.reward.t_max_insensitive_s;
  }
  positions_.resize(n);
  links_.resize(n);
  queues_.assign(n, mac::TxQueue{0.0, config_.mac.queue_capacity_bits});
}

energy::TrainingLoad WirelessEnv::training_load(std::size_t k) const {
  std::vector<std::size_t> actor{kObservationDim};
  actor.insert(actor.end(), config_.hidden_layers.begin(), config_.hidden_layers.end());
  actor.push_back(kActionDim);
  const std::size_t critic_in = specs_[k].privacy_sensitive
                                    ? kObservationDim + kActionDim
                                    : config_.insensitive_agents * (kObservationDim + kActionDim);
  std::vector<std::size_t> critic{critic_in};
  critic.insert(critic.end(), config_.hidden_layers.begin(), config_.hidden_layers.end());
  critic.push_back(1);
  const double eps = config_.batch_samples;
  return {eps, energy::mlp_flops(actor) * eps, energy::mlp_flops(critic) * eps};
}

void WirelessEnv::place(std::size_t k, channel::Point at) {
  positions_.at(k).at = at;
  positions_[k].anchor = at;
}

void WirelessEnv::sample_links() {
  const channel::Point ap{0.0, 0.0};
  for (std::size_t k = 0; k < specs_.size(); ++k) {
    links_[k] = channel::evaluate_link(config_.path_loss, config_.radio, positions_[k].at, ap,
                                       config_.bs_antennas, specs_[k].antennas, rng_);
  }
}

std::vector<Observation> WirelessEnv::reset(std::uint64_t seed, std::uint64_t episode) {
  rng_ = Rng(seed);
  const std::size_t n = specs_.size();
  std::vector<double> radii(n);
  if (config_.placement == Placement::kRadialSpread) {
    for (std::size_t k = 0; k < n; ++k) {
      const double frac = n > 1 ? static_cast<double>(k) / static_cast<double>(n - 1) : 0.0;
      radii[k] = config_.spread_min_radius_m + frac * (config_.area_radius_m - config_.spread_min_radius_m);
    }
    // Shuffle so neither privacy class owns the near or far ring.
    for (std::size_t k = n; k > 1; --k) std::swap(radii[k - 1], radii[rng_.below(k)]);
  } else {
    for (auto& r : radii) r = config_.area_radius_m * std::sqrt(rng_.uniform());
  }
  for (std::size_t k = 0; k < n; ++k) {
    const double angle = rng_.uniform(0.0, 2.0 * std::numbers::pi);
    channel::Position& p = positions_[k];
    p.at = {radii[k] * std::cos(angle), radii[k] * std::sin(angle)};
    p.anchor = p.at;
    p.max_radius_m = config_.max_radius_m;
  }
  rng_ = rng_.split(episode);
  sample_links();
  std::vector<DecodedAction> defaults;
  defaults.reserve(n);
  const std::array<double, kActionDim> mid{0.0, 0.0, 0.0, 0.0};
  for (const auto& s : specs_) defaults.push_back(decode_action(mid, s));
  return run_slot(defaults).observations;
}

StepResult WirelessEnv::step(std::span<const std::array<double, kActionDim>> raw_actions) {
  if (raw_actions.size() != specs_.size()) {
    throw std::invalid_argument("step: expected one action per agent");
  }
  std::vector<DecodedAction> actions;
  actions.reserve(raw_actions.size());
  for (std::size_t k = 0; k < raw_actions.size(); ++k) {
    for (double v : raw_actions[k]) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("step: non-finite action for agent " + std::to_string(k));
      }
    }
    actions.push_back(decode_action(raw_actions[k], specs_[k]));
  }
  for (auto& p : positions_) p = channel::mobility_step(p, config_.speed_mps, config_.slot_s, rng_);
  sample_links();
  return run_slot(actions);
}

StepResult WirelessEnv::run_slot(std::span<const DecodedAction> actions) {
  const std::size_t n = specs_.size();
  std::vector<mac::MacAction> mac_actions(n);
  std::vector<double> rates(n);
  for (std::size_t k = 0; k < n; ++k) {
    mac_actions[k] = {actions[k].cw, actions[k].frame_len_bits};
    rates[k] = links_[k].rate_bps;
    queues_[k].refill();
  }
  const std::vector<mac::TxQueue> before = queues_;
  mac::SlotResult slot = mac::simulate_slot(mac_actions, rates, queues_, config_.slot_s, config_.mac, rng_);

  StepResult out;
  out.rounds = slot.rounds;
  out.observations.resize(n);
  out.rewards.resize(n);
  out.agents.resize(n);
  std::vector<energy::AgentCost> costs(n);
  for (std::size_t k = 0; k < n; ++k) {
    const mac::SlotOutcome& o = slot.agents[k];
    if (o.delivered_bits > rates[k] * config_.slot_s * (1.0 + 1e-12) ||
        o.frames_acked > o.frames_sent ||
        std::abs(before[k].backlog_bits - o.delivered_bits - queues_[k].backlog_bits) >
            1e-6 * before[k].capacity_bits) {
      throw std::logic_error("MAC invariant violated for agent " + std::to_string(k));
    }
    const AgentSpec& spec = specs_[k];
    AgentInfo& info = out.agents[k];
    info.action = actions[k];
    info.rate_bps = rates[k];
    info.throughput_bps = mac::throughput(o.delivered_bits, config_.slot_s);

    energy::ComputeProfile local = spec.compute;
    local.freq_hz = actions[k].client_freq_hz;
    local.task_bits = spec.compute.task_bits + config_.task_bits_per_delivered_bit * o.delivered_bits;
    energy::ComputeProfile server = config_.server_compute;
    server.freq_hz = actions[k].server_freq_hz;
    const energy::TrainingLoad load = training_load(k);
    energy::EnergyLatency cost;
    try {
      cost = spec.privacy_sensitive ? energy::sensitive_local(local, load)
                                    : energy::insensitive_total(local, server, load, config_.server_task_bits);
    } catch (const std::domain_error&) {
      info.infeasible = true;
      cost = {0.0, config_.infeasible_latency_s};
    }
    info.energy_j = cost.energy_j;
    info.latency_s = cost.latency_s;
    info.latency_violation = cost.latency_s > spec.t_max_s;
    costs[k] = {spec.privacy_sensitive, cost};

    out.rewards[k] = reward(info.throughput_bps, info.energy_j, info.latency_s, spec.privacy_sensitive,
                            config_.reward);
    out.observations[k] = {channel::to_db(links_[k].snr_linear), mac::packet_loss_rate(o),
                           mac::idle_fraction(o)};
    out.system_throughput_bps += info.throughput_bps;
    out.mean_latency_s += info.latency_s;
    out.system_reward += out.rewards[k];
  }
  out.system_energy_j = energy::system_energy(costs);
  out.mean_latency_s /= static_cast<double>(n);
  out.system_reward /= static_cast<double>(n);
  return out;
}

}  // namespace mafw::env

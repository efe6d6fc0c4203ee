#include <array>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mafw/env.hpp"

using namespace mafw;
using namespace mafw::env;

namespace {

using Raw = std::array<double, kActionDim>;

std::vector<Raw> constant_actions(std::size_t n, Raw a) { return std::vector<Raw>(n, a); }

}  // namespace

TEST_CASE("observation shape") {
  WirelessEnv e(ScenarioConfig{});
  const auto obs = e.reset(1);
  CHECK(obs.size() == 16);
  CHECK(obs[0].as_array().size() == 3);
  for (const auto& o : obs) {
    CHECK(o.loss_rate >= 0.0);
    CHECK(o.loss_rate <= 1.0);
    CHECK(o.idle >= 0.0);
    CHECK(o.idle <= 1.0);
  }
}

TEST_CASE("resets and steps are deterministic") {
  WirelessEnv a(ScenarioConfig{});
  WirelessEnv b(ScenarioConfig{});
  const auto oa = a.reset(5, 3);
  const auto ob = b.reset(5, 3);
  for (std::size_t k = 0; k < oa.size(); ++k) {
    CHECK(oa[k].snr_db == ob[k].snr_db);
    CHECK(oa[k].idle == ob[k].idle);
  }
  const auto acts = constant_actions(16, {0.2, 0.5, -0.1, 0.3});
  for (int s = 0; s < 5; ++s) {
    const StepResult ra = a.step(acts);
    const StepResult rb = b.step(acts);
    for (std::size_t k = 0; k < 16; ++k) {
      CHECK(ra.rewards[k] == rb.rewards[k]);
      CHECK(ra.agents[k].energy_j == rb.agents[k].energy_j);
      CHECK(ra.observations[k].snr_db == rb.observations[k].snr_db);
    }
  }
}

TEST_CASE("episodes keep placement but change dynamics") {
  WirelessEnv e(ScenarioConfig{});
  e.reset(5, 0);
  const auto p0 = e.positions();
  const auto l0 = e.links();
  e.reset(5, 1);
  const auto p1 = e.positions();
  CHECK(p0[3].at.x == p1[3].at.x);
  CHECK(l0[3].fading_gain != e.links()[3].fading_gain);
}

TEST_CASE("single agent snr follows the channel pipeline") {
  ScenarioConfig cfg;
  cfg.sensitive_agents = 1;
  cfg.insensitive_agents = 0;
  cfg.speed_mps = 0.0;
  WirelessEnv e(cfg);
  e.reset(2);
  e.place(0, {6.0, 0.0});
  const StepResult r = e.step(constant_actions(1, {0.0, 0.0, 0.0, 0.0}));
  const double pl = channel::path_loss(cfg.path_loss, 6.0, 0.0);
  CHECK(r.observations[0].snr_db == doctest::Approx(channel::to_db(channel::snr(cfg.radio, pl))).epsilon(1e-12));
}

TEST_CASE("action decoding bounds") {
  WirelessEnv e(ScenarioConfig{});
  const AgentSpec& s = e.spec(0);
  const Raw lo{-1, -1, -1, -1};
  const DecodedAction a = decode_action(lo, s);
  CHECK(a.cw == s.cw_min);
  CHECK(a.frame_len_bits == 0.0);
  CHECK(a.server_freq_hz == 0.0);
  CHECK(a.client_freq_hz == 0.0);
  const Raw hi{1, 1, 1, 1};
  const DecodedAction b = decode_action(hi, s);
  CHECK(b.cw == s.cw_max);
  CHECK(b.frame_len_bits == s.frame_len_max_bits);
  CHECK(b.server_freq_hz == s.server_freq_max_hz);
  CHECK(b.client_freq_hz == s.compute.freq_max_hz);
  const Raw mid{0, 0, 0, 0};
  const DecodedAction c = decode_action(mid, s);
  CHECK(c.cw == 519);
  CHECK(c.frame_len_bits == 0.5 * s.frame_len_max_bits);
  const Raw over{5, 5, 5, 5};
  CHECK(decode_action(over, s).cw == s.cw_max);
  const auto round = encode_action(b, s);
  for (double v : round) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("reward shaping") {
  CHECK(squash(1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(squash(2.4142135623730951) == doctest::Approx(0.75).epsilon(1e-12));
  RewardConfig cfg;
  CHECK(reward(1e6, 1.0, 0.4, true, cfg) > 0.0);
  CHECK(reward(1e6, 1.0, 0.6, true, cfg) < 0.0);
  CHECK(reward(1e6, 1.0, 0.6, true, cfg) == doctest::Approx(squash(-600.0)));
  RewardConfig one = cfg;
  one.scheme = RewardScheme::kThroughputLatency;
  CHECK(reward(0.0, 0.0, 0.0, false, one) == 0.0);
  CHECK(reward(5e6, 0.0, 5e-3, false, one) == doctest::Approx(0.5));
}

TEST_CASE("zero client frequency is infeasible and penalized") {
  WirelessEnv e(ScenarioConfig{});
  e.reset(4);
  const StepResult r = e.step(constant_actions(16, {0.0, 0.0, 0.0, -1.0}));
  for (std::size_t k = 0; k < 16; ++k) {
    CHECK(r.agents[k].infeasible);
    CHECK(r.agents[k].latency_violation);
    CHECK(r.rewards[k] < 0.0);
  }
}

TEST_CASE("system totals are sums of agent values") {
  WirelessEnv e(ScenarioConfig{});
  e.reset(8);
  const StepResult r = e.step(constant_actions(16, {-0.5, 0.8, 0.5, 0.9}));
  double thr = 0.0;
  double energy = 0.0;
  double reward_sum = 0.0;
  for (std::size_t k = 0; k < 16; ++k) {
    thr += r.agents[k].throughput_bps;
    energy += r.agents[k].energy_j;
    reward_sum += r.rewards[k];
  }
  CHECK(r.system_throughput_bps == doctest::Approx(thr).epsilon(1e-12));
  CHECK(r.system_energy_j == doctest::Approx(energy).epsilon(1e-12));
  CHECK(r.system_reward == doctest::Approx(reward_sum / 16.0).epsilon(1e-12));
  CHECK(r.system_throughput_bps > 0.0);
}

TEST_CASE("radial spread places agents across the ring") {
  ScenarioConfig cfg;
  cfg.placement = Placement::kRadialSpread;
  WirelessEnv e(cfg);
  e.reset(3);
  double lo = 1e9;
  double hi = 0.0;
  for (const auto& p : e.positions()) {
    const double r = channel::distance(p.at, {0.0, 0.0});
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  CHECK(lo == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(hi == doctest::Approx(7.5).epsilon(1e-9));
}

TEST_CASE("invalid input") {
  ScenarioConfig none;
  none.sensitive_agents = 0;
  none.insensitive_agents = 0;
  CHECK_THROWS_AS(WirelessEnv{none}, std::invalid_argument);
  WirelessEnv e(ScenarioConfig{});
  e.reset(1);
  CHECK_THROWS_AS(e.step(constant_actions(3, {0, 0, 0, 0})), std::invalid_argument);
  auto acts = constant_actions(16, {0, 0, 0, 0});
  acts[2][1] = std::nan("");
  CHECK_THROWS_AS(e.step(acts), std::invalid_argument);
}

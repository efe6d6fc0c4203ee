#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mafw/energy.hpp"
#include "mafw/rng.hpp"

using namespace mafw::energy;

TEST_CASE("cycle cost hand values") {
  const EnergyLatency c = cycle_cost(1e-26, 1e6, 330.0, 5e8);
  CHECK(c.energy_j == doctest::Approx(0.825).epsilon(1e-12));
  CHECK(c.latency_s == doctest::Approx(0.66).epsilon(1e-12));
  const EnergyLatency zero = cycle_cost(1e-26, 0.0, 330.0, 5e8);
  CHECK(zero.energy_j == 0.0);
  CHECK(zero.latency_s == 0.0);
  const EnergyLatency fast = cycle_cost(1e-26, 1e6, 330.0, 1e9);
  CHECK(fast.energy_j == doctest::Approx(4.0 * c.energy_j).epsilon(1e-12));
  CHECK(fast.latency_s == doctest::Approx(0.5 * c.latency_s).epsilon(1e-12));
  CHECK_THROWS_AS(cycle_cost(1e-26, 1.0, 330.0, 0.0), std::domain_error);
}

TEST_CASE("training cost") {
  ComputeProfile sta;
  CHECK(nn_training_cost(sta, 1e6).energy_j == doctest::Approx(3.125e-4).epsilon(1e-12));
  CHECK(nn_training_cost(sta, 0.0).energy_j == 0.0);
  CHECK(nn_training_cost(sta, 0.0).latency_s == 0.0);
  ComputeProfile ap = sta;
  ap.freq_hz = 2e9;
  const EnergyLatency c = nn_training_cost(ap, 1e6);
  CHECK(c.energy_j == doctest::Approx(5e-3).epsilon(1e-12));
  CHECK(c.latency_s == doctest::Approx(6.25e-5).epsilon(1e-12));
}

TEST_CASE("server critic cost") {
  ComputeProfile server{1e-26, 2e9, 2e9, 330.0, 8.0, 1e3, 1e3, 0.0};
  const EnergyLatency c = critic_server_cost(server, 1e3, 8.0, 1e6 - 8e3);
  CHECK(c.energy_j == doctest::Approx(13.2).epsilon(1e-12));
  CHECK(critic_server_cost(server, 1e3, 0.0, 0.0).energy_j == 0.0);
  server.freq_hz = 1e9;
  CHECK(critic_server_cost(server, 1e3, 8.0, 1e6 - 8e3).energy_j == doctest::Approx(0.25 * 13.2).epsilon(1e-12));
}

TEST_CASE("class totals") {
  ComputeProfile sta;
  const TrainingLoad load{8.0, 5e5, 5e5};
  // Sensitive: local work (2 zeta eps + d) plus both trainings on the STA.
  const EnergyLatency s = sensitive_local(sta, load);
  const double bits = 2.0 * 1e3 * 8.0 + 1e5;
  const double expect_e = 1e-26 * bits * 330.0 * 5e8 * 5e8 + 1e-26 * (1e6 / 8.0) * 5e8 * 5e8;
  const double expect_t = bits * 330.0 / 5e8 + (1e6 / 8.0) / 5e8;
  CHECK(s.energy_j == doctest::Approx(expect_e).epsilon(1e-12));
  CHECK(s.latency_s == doctest::Approx(expect_t).epsilon(1e-12));

  const TrainingLoad split{1.0, 5e5, 5e5};
  const EnergyLatency trained = sensitive_local(sta, split);
  const EnergyLatency work = cycle_cost(sta.kappa, 2.0 * 1e3 + 1e5, 330.0, 5e8);
  CHECK(trained.energy_j - work.energy_j == doctest::Approx(nn_training_cost(sta, 1e6).energy_j).epsilon(1e-9));

  const std::vector<AgentCost> agents{{true, s}, {false, {2.0, 0.1}}};
  CHECK(system_energy(agents) == doctest::Approx(s.energy_j + 2.0).epsilon(1e-15));
  CHECK(system_energy(std::vector<AgentCost>{}) == 0.0);
}

TEST_CASE("sixteen agents sum") {
  ComputeProfile sta;
  ComputeProfile server{1e-26, 2e9, 2e9, 330.0, 8.0, 1e3, 1e3, 0.0};
  const TrainingLoad sl{8.0, 1104.0, 6.0 * (7 * 8 + 64 + 64 + 8)};
  const TrainingLoad il{8.0, 1104.0, 6.0 * (56 * 8 + 64 + 64 + 8)};
  std::vector<AgentCost> agents;
  double oracle = 0.0;
  for (int k = 0; k < 16; ++k) {
    const bool sens = k < 8;
    const EnergyLatency c = sens ? sensitive_local(sta, sl) : insensitive_total(sta, server, il, 1e4);
    agents.push_back({sens, c});
    oracle += c.energy_j;
  }
  CHECK(system_energy(agents) == doctest::Approx(oracle).epsilon(1e-14));
}

TEST_CASE("flop counting") {
  const std::array<std::size_t, 5> actor{3, 8, 8, 8, 4};
  CHECK(mlp_flops(actor) == 1104.0);
  const std::array<std::size_t, 2> unit{1, 1};
  CHECK(mlp_flops(unit) == 6.0);
  const std::array<std::size_t, 1> one{3};
  CHECK_THROWS_AS(mlp_flops(one), std::invalid_argument);
}

TEST_CASE("energy equals power times latency") {
  mafw::Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double kappa = std::pow(10.0, rng.uniform(-28.0, -25.0));
    const double f = rng.uniform(1e7, 3e9);
    const EnergyLatency c = cycle_cost(kappa, rng.uniform(1.0, 1e7), rng.uniform(1.0, 1000.0), f);
    const double power = kappa * f * f * f;
    REQUIRE(std::abs(c.energy_j - power * c.latency_s) <= 1e-12 * c.energy_j);
  }
}

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mafw/marl.hpp"

using namespace mafw;
using namespace mafw::marl;

namespace {

// Sets an MLP to output the constant c.
void make_constant(nn::Mlp& net, double c) {
  for (double& p : net.params()) p = 0.0;
  net.params()[net.bias_offset(net.layer_count() - 1)] = c;
}

std::vector<ObsVec> random_obs(std::size_t n, Rng& rng) {
  std::vector<ObsVec> out(n);
  for (auto& o : out) o = {rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)};
  return out;
}

}  // namespace

TEST_CASE("replay buffer evicts oldest first and samples distinct items") {
  ReplayBuffer<int> buf(3);
  for (int i = 0; i < 5; ++i) buf.push(i);
  CHECK(buf.size() == 3);
  CHECK(buf[0] == 2);
  CHECK(buf[2] == 4);
  Rng rng(1);
  auto s = buf.sample(3, rng);
  std::sort(s.begin(), s.end());
  CHECK(s == std::vector<int>{2, 3, 4});
  CHECK_THROWS_AS(buf.sample(4, rng), std::invalid_argument);
  CHECK_THROWS_AS(ReplayBuffer<int>(0), std::invalid_argument);
}

TEST_CASE("action selection") {
  Rng rng(2);
  Hyperparams hp;
  ActorCritic a = make_sensitive_agent(hp, rng);
  const ObsVec o{0.5, 0.1, 0.9};
  const auto mu = nn::forward(a.actor, o);
  const ActionSample det = select_action(a.actor, o, 0.0, rng);
  for (std::size_t i = 0; i < kAct; ++i) CHECK(det.action[i] == mu[i]);

  nn::Mlp zero = a.actor;
  for (double& p : zero.params()) p = 0.0;
  const ActionSample noisy = select_action(zero, o, 0.7, rng);
  for (std::size_t i = 0; i < kAct; ++i) CHECK(noisy.action[i] == std::clamp(noisy.perturbation[i], -1.0, 1.0));

  double sum = 0.0;
  double sq = 0.0;
  constexpr int kDraws = 10000;
  for (int i = 0; i < kDraws; ++i) {
    const double p = select_action(zero, o, 1.0, rng).perturbation[0];
    sum += p;
    sq += p * p;
  }
  const double mean = sum / kDraws;
  CHECK(std::sqrt(sq / kDraws - mean * mean) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("network shapes") {
  Rng rng(3);
  Hyperparams hp;
  const ActorCritic s = make_sensitive_agent(hp, rng);
  CHECK(s.actor.layer_sizes() == std::vector<std::size_t>{3, 8, 8, 8, 4});
  CHECK(s.critic.layer_sizes() == std::vector<std::size_t>{7, 8, 8, 8, 1});
  const ActorCritic c = make_insensitive_agent(8, hp, rng);
  CHECK(c.critic.input_size() == 56);
  CHECK(s.target_actor.params()[0] == s.actor.params()[0]);
}

TEST_CASE("bootstrapped target") {
  Rng rng(4);
  Hyperparams hp;
  ActorCritic a = make_sensitive_agent(hp, rng);
  make_constant(a.target_critic, 2.0);
  std::vector<Transition> batch{{{0.1, 0.2, 0.3}, {}, 1.0, {0.4, 0.5, 0.6}}};
  CHECK(sensitive_targets(a, batch, 0.1)[0] == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(sensitive_targets(a, batch, 0.0)[0] == 1.0);
}

TEST_CASE("critic at its fixed point stays put") {
  Rng rng(5);
  Hyperparams hp;
  hp.gamma = 0.0;
  ActorCritic a = make_sensitive_agent(hp, rng);
  make_constant(a.critic, 0.5);
  std::vector<Transition> batch(hp.batch);
  for (auto& t : batch) t = {{0.1, 0.2, 0.3}, {0.1, 0.1, 0.1, 0.1}, 0.5, {0.1, 0.2, 0.3}};
  const std::vector<double> before(a.critic.params().begin(), a.critic.params().end());
  const auto loss = update_sensitive_critic(a, batch, hp);
  REQUIRE(loss.has_value());
  CHECK(*loss == 0.0);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(a.critic.params()[i] == before[i]);
  std::vector<Transition> small(hp.batch - 1, batch[0]);
  CHECK_FALSE(update_sensitive_critic(a, small, hp).has_value());
}

TEST_CASE("critic blind to actions leaves the actor unchanged") {
  Rng rng(6);
  Hyperparams hp;
  ActorCritic a = make_sensitive_agent(hp, rng);
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = kObs; c < kObs + kAct; ++c) a.critic.params()[r * (kObs + kAct) + c] = 0.0;
  }
  std::vector<Transition> batch(hp.batch);
  for (auto& t : batch) t.obs = {rng.uniform(), rng.uniform(), rng.uniform()};
  const std::vector<double> before(a.actor.params().begin(), a.actor.params().end());
  update_sensitive_actor(a, batch, hp);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(a.actor.params()[i] == before[i]);
}

TEST_CASE("one actor step does not lower the batch Q") {
  Rng rng(7);
  Hyperparams hp;
  hp.lr_actor = 1e-4;
  for (int trial = 0; trial < 10; ++trial) {
    ActorCritic a = make_sensitive_agent(hp, rng);
    std::vector<Transition> batch(hp.batch);
    for (auto& t : batch) t.obs = {rng.uniform(), rng.uniform(), rng.uniform()};
    auto mean_q = [&] {
      double s = 0.0;
      for (const auto& t : batch) {
        const auto mu = nn::forward(a.actor, t.obs);
        std::vector<double> in(t.obs.begin(), t.obs.end());
        in.insert(in.end(), mu.begin(), mu.end());
        s += nn::forward(a.critic, in)[0];
      }
      return s / batch.size();
    };
    const double before = mean_q();
    update_sensitive_actor(a, batch, hp);
    CHECK(mean_q() >= before - 1e-6);
  }
}

TEST_CASE("single-action probe converges to 0.3") {
  Rng rng(8);
  const Hyperparams hp;
  ActorCritic a = make_sensitive_agent(hp, rng);
  const CriticProbe q = [](std::span<const double> in, std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    grad[kObs] = -2.0 * (in[kObs] - 0.3);
    return -(in[kObs] - 0.3) * (in[kObs] - 0.3);
  };
  const auto obs = random_obs(hp.batch, rng);
  std::vector<std::vector<double>> inputs;
  for (const auto& o : obs) {
    std::vector<double> in(o.begin(), o.end());
    in.resize(kObs + kAct, 0.0);
    inputs.push_back(in);
  }
  for (int it = 0; it < 2000; ++it) ascend_policy(a.actor, a.actor_opt, obs, inputs, kObs, q, hp.grad_clip);
  for (const auto& o : obs) CHECK(nn::forward(a.actor, o)[0] == doctest::Approx(0.3).epsilon(0.01 / 0.3));
}

TEST_CASE("two-agent centralized probe converges to (0.5, -0.5)") {
  Rng rng(9);
  const Hyperparams hp;
  std::vector<ActorCritic> agents;
  for (int k = 0; k < 2; ++k) agents.push_back(make_insensitive_agent(2, hp, rng));
  const std::size_t base = 2 * kObs;
  const CriticProbe q = [base](std::span<const double> in, std::span<double> grad) {
    std::fill(grad.begin(), grad.end(), 0.0);
    const double a1 = in[base];
    const double a2 = in[base + kAct];
    grad[base] = -2.0 * (a1 - 0.5);
    grad[base + kAct] = -2.0 * (a2 + 0.5);
    return -(a1 - 0.5) * (a1 - 0.5) - (a2 + 0.5) * (a2 + 0.5);
  };
  const auto o1 = random_obs(hp.batch, rng);
  const auto o2 = random_obs(hp.batch, rng);
  std::vector<std::vector<double>> inputs;
  for (std::size_t i = 0; i < hp.batch; ++i) {
    std::vector<double> in(o1[i].begin(), o1[i].end());
    in.insert(in.end(), o2[i].begin(), o2[i].end());
    in.resize(base + 2 * kAct, 0.0);
    inputs.push_back(in);
  }
  for (int it = 0; it < 2000; ++it) {
    ascend_policy(agents[0].actor, agents[0].actor_opt, o1, inputs, base, q, hp.grad_clip);
    ascend_policy(agents[1].actor, agents[1].actor_opt, o2, inputs, base + kAct, q, hp.grad_clip);
  }
  for (std::size_t i = 0; i < hp.batch; ++i) {
    CHECK(nn::forward(agents[0].actor, o1[i])[0] == doctest::Approx(0.5).epsilon(0.02 / 0.5));
    CHECK(nn::forward(agents[1].actor, o2[i])[0] == doctest::Approx(-0.5).epsilon(0.02 / 0.5));
  }
}

TEST_CASE("one-agent centralized update equals the local update") {
  Rng rng(10);
  Hyperparams hp;
  ActorCritic local = make_insensitive_agent(1, hp, rng);
  std::vector<ActorCritic> group{local};
  std::vector<Transition> batch(hp.batch);
  std::vector<JointTransition> joint(hp.batch);
  for (std::size_t i = 0; i < hp.batch; ++i) {
    Transition& t = batch[i];
    t.obs = {rng.uniform(), rng.uniform(), rng.uniform()};
    t.next_obs = {rng.uniform(), rng.uniform(), rng.uniform()};
    for (double& v : t.action) v = rng.uniform(-1.0, 1.0);
    t.reward = rng.uniform(-1.0, 1.0);
    joint[i] = {{t.obs.begin(), t.obs.end()}, {t.action.begin(), t.action.end()}, {t.reward},
                {t.next_obs.begin(), t.next_obs.end()}};
  }
  CHECK(insensitive_targets(group, joint, 0, hp.gamma) == sensitive_targets(local, batch, hp.gamma));
  update_sensitive_critic(local, batch, hp);
  update_insensitive_critic(group, joint, 0, hp);
  update_sensitive_actor(local, batch, hp);
  update_insensitive_actor(group, joint, 0, hp);
  for (std::size_t i = 0; i < local.critic.param_count(); ++i) CHECK(local.critic.params()[i] == group[0].critic.params()[i]);
  for (std::size_t i = 0; i < local.actor.param_count(); ++i) CHECK(local.actor.params()[i] == group[0].actor.params()[i]);
}

TEST_CASE("two-agent targets match a straight-line computation") {
  Rng rng(11);
  Hyperparams hp;
  std::vector<ActorCritic> group{make_insensitive_agent(2, hp, rng), make_insensitive_agent(2, hp, rng)};
  std::vector<JointTransition> batch(2);
  for (auto& t : batch) {
    t.obs.resize(6);
    t.next_obs.resize(6);
    t.actions.resize(8);
    t.rewards = {rng.uniform(), rng.uniform()};
    for (double& v : t.next_obs) v = rng.uniform();
  }
  for (std::size_t k = 0; k < 2; ++k) {
    const auto y = insensitive_targets(group, batch, k, 0.1);
    for (std::size_t i = 0; i < 2; ++i) {
      std::vector<double> in(batch[i].next_obs);
      for (std::size_t j = 0; j < 2; ++j) {
        const ObsVec o{batch[i].next_obs[3 * j], batch[i].next_obs[3 * j + 1], batch[i].next_obs[3 * j + 2]};
        const auto mu = nn::forward(group[j].target_actor, o);
        in.insert(in.end(), mu.begin(), mu.end());
      }
      const double expect = batch[i].rewards[k] + 0.1 * nn::forward(group[k].target_critic, in)[0];
      CHECK(y[i] == doctest::Approx(expect).epsilon(1e-14));
    }
  }
  std::vector<JointTransition> bad(1);
  CHECK_THROWS_AS(check_joint_batch(bad, 2), std::invalid_argument);
}

TEST_CASE("actor update ignores a critic that does not see its slot") {
  Rng rng(12);
  Hyperparams hp;
  std::vector<ActorCritic> group{make_insensitive_agent(2, hp, rng), make_insensitive_agent(2, hp, rng)};
  nn::Mlp& critic = group[1].critic;
  for (std::size_t r = 0; r < 8; ++r) {
    for (std::size_t c = 10; c < 14; ++c) critic.params()[r * 14 + c] = 0.0;
  }
  std::vector<JointTransition> batch(hp.batch, JointTransition{std::vector<double>(6, 0.3), std::vector<double>(8, 0.1),
                                                                {0.0, 0.0}, std::vector<double>(6, 0.3)});
  const std::vector<double> before(group[1].actor.params().begin(), group[1].actor.params().end());
  update_insensitive_actor(group, batch, 1, hp);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(group[1].actor.params()[i] == before[i]);
}

TEST_CASE("trainer operation counts") {
  auto ops_for = [](std::size_t m, std::size_t n) {
    Hyperparams hp;
    Trainer t(m, n, hp, 3);
    Rng rng(4);
    const std::size_t total = m + n;
    for (std::size_t s = 0; s < hp.batch; ++s) {
      const auto obs = random_obs(total, rng);
      const auto acts = t.act(obs, 0.3);
      t.store(obs, acts, std::vector<double>(total, 0.1), obs);
    }
    return t.train_iteration(std::vector<double>(total, 1.0 / static_cast<double>(total)), fed::Strategy::kFedWgt).ops;
  };
  CHECK(ops_for(1, 0).sensitive == 4);
  CHECK(ops_for(2, 0).sensitive == 8);
  CHECK(ops_for(0, 2).insensitive == 8);
  CHECK(ops_for(2, 3).federation == 2);
  CHECK(ops_for(4, 0).sensitive == 2 * ops_for(2, 0).sensitive);

  Hyperparams hp;
  Trainer empty(1, 1, hp, 1);
  const auto report = empty.train_iteration(std::vector<double>{0.5, 0.5}, fed::Strategy::kFedWgt);
  CHECK_FALSE(report.updated);
  CHECK(report.ops.total() == 0);
}

TEST_CASE("trainer phases and federation") {
  Hyperparams hp;
  Trainer t(2, 2, hp, 5);
  Rng rng(6);
  for (std::size_t s = 0; s < hp.batch; ++s) {
    const auto obs = random_obs(4, rng);
    t.store(obs, t.act(obs, 0.5), std::vector<double>{0.1, 0.2, 0.3, 0.4}, obs);
  }
  CHECK(t.sensitive_buffer_size(0) == hp.batch);
  CHECK(t.joint_buffer_size() == hp.batch);
  const auto r = t.train_iteration(std::vector<double>{0.25, 0.25, 0.25, 0.25}, fed::Strategy::kFedAvg);
  CHECK(r.phases == std::vector<Phase>{Phase::kSensitive, Phase::kInsensitive, Phase::kFederation, Phase::kTargets});
  for (std::size_t i = 0; i < t.agent(0).critic.param_count(); ++i) {
    CHECK(t.agent(0).critic.params()[i] == t.agent(1).critic.params()[i]);
  }
  for (std::size_t i = 0; i < t.agent(2).critic.param_count(); ++i) {
    CHECK(t.agent(2).critic.params()[i] == t.agent(3).critic.params()[i]);
  }
  CHECK(t.cumulative_ops().total() == r.ops.total());
}

TEST_CASE("hyperparameter validation") {
  Hyperparams hp;
  hp.batch = 0;
  CHECK_THROWS_AS(hp.validate(), std::invalid_argument);
  Hyperparams hp2;
  hp2.phi = 2.0;
  CHECK_THROWS_AS(hp2.validate(), std::invalid_argument);
}

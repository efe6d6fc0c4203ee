#include "mafw/marl.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mafw::marl {

void Hyperparams::validate() const {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("hyperparams: gamma must lie in [0, 1)");
  if (!(phi > 0.0 && phi <= 1.0)) throw std::invalid_argument("hyperparams: phi must lie in (0, 1]");
  if (batch < 1) throw std::invalid_argument("hyperparams: batch must be >= 1");
  if (!(lr_actor > 0.0) || !(lr_critic > 0.0)) throw std::invalid_argument("hyperparams: learning rates must be > 0");
  if (buffer_capacity < batch) throw std::invalid_argument("hyperparams: buffer capacity must be >= batch");
  if (!(grad_clip > 0.0)) throw std::invalid_argument("hyperparams: grad_clip must be > 0");
  if (hidden.empty()) throw std::invalid_argument("hyperparams: at least one hidden layer");
}

ObsVec features(const env::Observation& obs) { return {obs.snr_db / 50.0, obs.loss_rate, obs.idle}; }

namespace {

std::vector<std::size_t> layout(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

ActorCritic make_agent(std::size_t critic_inputs, const Hyperparams& hp, Rng& rng) {
  ActorCritic a;
  a.actor = nn::Mlp(layout(kObs, hp.hidden, kAct), nn::OutputActivation::kTanh);
  a.critic = nn::Mlp(layout(critic_inputs, hp.hidden, 1), nn::OutputActivation::kIdentity);
  a.actor.initialize(rng);
  a.critic.initialize(rng);
  a.target_actor = a.actor;
  a.target_critic = a.critic;
  a.actor_opt = nn::Sgd{hp.lr_actor};
  a.critic_opt = nn::Sgd{hp.lr_critic};
  return a;
}

}  // namespace

ActorCritic make_sensitive_agent(const Hyperparams& hp, Rng& rng) { return make_agent(kObs + kAct, hp, rng); }

ActorCritic make_insensitive_agent(std::size_t insensitive_count, const Hyperparams& hp, Rng& rng) {
  if (insensitive_count == 0) throw std::invalid_argument("make_insensitive_agent: empty group");
  return make_agent(insensitive_count * (kObs + kAct), hp, rng);
}

ActionSample select_action(const nn::Mlp& actor, const ObsVec& obs, double noise_scale, Rng& rng) {
  const std::vector<double> mu = nn::forward(actor, obs);
  ActionSample s;
  for (std::size_t i = 0; i < kAct; ++i) {
    s.perturbation[i] = noise_scale > 0.0 ? rng.normal(0.0, noise_scale) : 0.0;
    s.action[i] = std::clamp(mu[i] + s.perturbation[i], -1.0, 1.0);
  }
  return s;
}

CriticProbe mlp_probe(const nn::Mlp& critic) {
  return [&critic](std::span<const double> input, std::span<double> grad) {
    const nn::Tape tape = nn::forward_tape(critic, input);
    const double one = 1.0;
    const nn::GradientSet g = nn::backward(critic, tape, std::span<const double>(&one, 1));
    std::copy(g.input.begin(), g.input.end(), grad.begin());
    return tape.output()[0];
  };
}

double regress_critic(nn::Mlp& critic, const nn::Sgd& opt, std::span<const std::vector<double>> inputs,
                      std::span<const double> targets, double grad_clip) {
  if (inputs.size() != targets.size() || inputs.empty()) {
    throw std::invalid_argument("regress_critic: inputs and targets differ in length");
  }
  const double s = static_cast<double>(inputs.size());
  nn::GradientSet grads(critic.param_count(), critic.input_size());
  double loss = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const nn::Tape tape = nn::forward_tape(critic, inputs[i]);
    const double err = targets[i] - tape.output()[0];
    loss += err * err / s;
    const double upstream = -2.0 * err / s;
    nn::backward_into(critic, tape, std::span<const double>(&upstream, 1), grads);
  }
  nn::clip_global_norm(grads, grad_clip);
  opt.step(critic, grads);
  return loss;
}

double ascend_policy(nn::Mlp& actor, const nn::Sgd& opt, std::span<const ObsVec> actor_obs,
                     std::span<const std::vector<double>> critic_inputs, std::size_t action_offset,
                     const CriticProbe& q, double grad_clip) {
  if (actor_obs.size() != critic_inputs.size() || actor_obs.empty()) {
    throw std::invalid_argument("ascend_policy: batch size mismatch");
  }
  const std::size_t act = actor.output_size();
  const double s = static_cast<double>(actor_obs.size());
  nn::GradientSet grads(actor.param_count(), actor.input_size());
  double mean_q = 0.0;
  std::vector<double> input;
  std::vector<double> dq;
  std::vector<double> upstream(act);
  for (std::size_t i = 0; i < actor_obs.size(); ++i) {
    const nn::Tape tape = nn::forward_tape(actor, actor_obs[i]);
    input = critic_inputs[i];
    if (action_offset + act > input.size()) throw std::invalid_argument("ascend_policy: action slot out of range");
    std::copy(tape.output().begin(), tape.output().end(), input.begin() + static_cast<std::ptrdiff_t>(action_offset));
    dq.assign(input.size(), 0.0);
    mean_q += q(input, dq) / s;
    // Descend on -Q.
    for (std::size_t a = 0; a < act; ++a) upstream[a] = -dq[action_offset + a] / s;
    nn::backward_into(actor, tape, upstream, grads);
  }
  nn::clip_global_norm(grads, grad_clip);
  opt.step(actor, grads);
  return mean_q;
}

namespace {

std::vector<double> concat(const ObsVec& o, const ActVec& a) {
  std::vector<double> v(o.begin(), o.end());
  v.insert(v.end(), a.begin(), a.end());
  return v;
}

std::vector<double> joint_input(std::span<const double> obs, std::span<const double> actions) {
  std::vector<double> v(obs.begin(), obs.end());
  v.insert(v.end(), actions.begin(), actions.end());
  return v;
}

// Target actions of the whole group at each transition's next observation.
std::vector<std::vector<double>> target_joint_actions(std::span<const ActorCritic> agents,
                                                      std::span<const JointTransition> batch) {
  std::vector<std::vector<double>> out;
  out.reserve(batch.size());
  for (const auto& t : batch) {
    std::vector<double> acts;
    acts.reserve(agents.size() * kAct);
    for (std::size_t c = 0; c < agents.size(); ++c) {
      const std::span<const double> o(t.next_obs.data() + c * kObs, kObs);
      const auto mu = nn::forward(agents[c].target_actor, o);
      acts.insert(acts.end(), mu.begin(), mu.end());
    }
    out.push_back(std::move(acts));
  }
  return out;
}

std::vector<double> targets_from(const ActorCritic& agent, std::span<const JointTransition> batch,
                                 const std::vector<std::vector<double>>& next_actions, std::size_t k,
                                 double gamma) {
  std::vector<double> y;
  y.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto q_next = nn::forward(agent.target_critic, joint_input(batch[i].next_obs, next_actions[i]));
    y.push_back(batch[i].rewards[k] + gamma * q_next[0]);
  }
  return y;
}

std::optional<double> critic_step_from(ActorCritic& agent, std::span<const JointTransition> batch,
                                       const std::vector<std::vector<double>>& next_actions, std::size_t k,
                                       const Hyperparams& hp) {
  const std::vector<double> y = targets_from(agent, batch, next_actions, k, hp.gamma);
  std::vector<std::vector<double>> inputs;
  inputs.reserve(batch.size());
  for (const auto& t : batch) inputs.push_back(joint_input(t.obs, t.actions));
  return regress_critic(agent.critic, agent.critic_opt, inputs, y, hp.grad_clip);
}

}  // namespace

std::vector<double> sensitive_targets(const ActorCritic& agent, std::span<const Transition> batch,
                                      double gamma) {
  std::vector<double> y;
  y.reserve(batch.size());
  for (const auto& t : batch) {
    const auto a_next = nn::forward(agent.target_actor, t.next_obs);
    ActVec a{};
    std::copy(a_next.begin(), a_next.end(), a.begin());
    const auto q_next = nn::forward(agent.target_critic, concat(t.next_obs, a));
    y.push_back(t.reward + gamma * q_next[0]);
  }
  return y;
}

std::optional<double> update_sensitive_critic(ActorCritic& agent, std::span<const Transition> batch,
                                              const Hyperparams& hp) {
  if (batch.size() < hp.batch) return std::nullopt;
  const std::vector<double> y = sensitive_targets(agent, batch, hp.gamma);
  std::vector<std::vector<double>> inputs;
  inputs.reserve(batch.size());
  for (const auto& t : batch) inputs.push_back(concat(t.obs, t.action));
  return regress_critic(agent.critic, agent.critic_opt, inputs, y, hp.grad_clip);
}

std::optional<double> update_sensitive_actor(ActorCritic& agent, std::span<const Transition> batch,
                                             const Hyperparams& hp) {
  if (batch.size() < hp.batch) return std::nullopt;
  std::vector<ObsVec> obs;
  std::vector<std::vector<double>> inputs;
  obs.reserve(batch.size());
  inputs.reserve(batch.size());
  for (const auto& t : batch) {
    obs.push_back(t.obs);
    inputs.push_back(concat(t.obs, t.action));
  }
  return ascend_policy(agent.actor, agent.actor_opt, obs, inputs, kObs, mlp_probe(agent.critic), hp.grad_clip);
}

void check_joint_batch(std::span<const JointTransition> batch, std::size_t agents) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = batch[i];
    if (t.obs.size() != agents * kObs || t.next_obs.size() != agents * kObs ||
        t.actions.size() != agents * kAct || t.rewards.size() != agents) {
      throw std::invalid_argument("joint batch entry " + std::to_string(i) + " is not aligned with " +
                                  std::to_string(agents) + " agents");
    }
  }
}

std::vector<double> insensitive_targets(std::span<const ActorCritic> agents,
                                        std::span<const JointTransition> batch, std::size_t k,
                                        double gamma) {
  check_joint_batch(batch, agents.size());
  return targets_from(agents[k], batch, target_joint_actions(agents, batch), k, gamma);
}

std::optional<double> update_insensitive_critic(std::span<ActorCritic> agents,
                                                std::span<const JointTransition> batch, std::size_t k,
                                                const Hyperparams& hp) {
  if (k >= agents.size()) throw std::out_of_range("update_insensitive_critic: agent index");
  check_joint_batch(batch, agents.size());
  if (batch.size() < hp.batch) return std::nullopt;
  return critic_step_from(agents[k], batch, target_joint_actions(agents, batch), k, hp);
}

std::optional<std::vector<double>> update_insensitive_critics(std::span<ActorCritic> agents,
                                                              std::span<const JointTransition> batch,
                                                              const Hyperparams& hp) {
  check_joint_batch(batch, agents.size());
  if (batch.size() < hp.batch) return std::nullopt;
  // Target actions depend only on target actors, which no critic step touches.
  const auto next_actions = target_joint_actions(agents, batch);
  std::vector<double> losses;
  for (std::size_t k = 0; k < agents.size(); ++k) {
    losses.push_back(*critic_step_from(agents[k], batch, next_actions, k, hp));
  }
  return losses;
}

std::optional<double> update_insensitive_actor(std::span<ActorCritic> agents,
                                               std::span<const JointTransition> batch, std::size_t k,
                                               const Hyperparams& hp) {
  if (k >= agents.size()) throw std::out_of_range("update_insensitive_actor: agent index");
  check_joint_batch(batch, agents.size());
  if (batch.size() < hp.batch) return std::nullopt;
  const std::size_t n = agents.size();
  std::vector<ObsVec> obs;
  std::vector<std::vector<double>> inputs;
  for (const auto& t : batch) {
    ObsVec o{};
    std::copy_n(t.obs.begin() + static_cast<std::ptrdiff_t>(k * kObs), kObs, o.begin());
    obs.push_back(o);
    inputs.push_back(joint_input(t.obs, t.actions));
  }
  return ascend_policy(agents[k].actor, agents[k].actor_opt, obs, inputs, n * kObs + k * kAct,
                       mlp_probe(agents[k].critic), hp.grad_clip);
}

void update_targets(ActorCritic& agent, double phi) {
  nn::soft_update(agent.target_critic, agent.critic, phi);
  nn::soft_update(agent.target_actor, agent.actor, phi);
}

Trainer::Trainer(std::size_t sensitive, std::size_t insensitive, Hyperparams hp, std::uint64_t seed)
    : hp_(std::move(hp)), rng_(seed) {
  hp_.validate();
  Rng init = rng_.split(0x1417);
  for (std::size_t j = 0; j < sensitive; ++j) {
    sensitive_.push_back(make_sensitive_agent(hp_, init));
    sensitive_buffers_.emplace_back(hp_.buffer_capacity);
  }
  for (std::size_t l = 0; l < insensitive; ++l) insensitive_.push_back(make_insensitive_agent(insensitive, hp_, init));
  if (insensitive > 0) joint_buffer_.emplace(hp_.buffer_capacity);
}

std::vector<ActVec> Trainer::act(std::span<const ObsVec> obs, double noise_scale) {
  if (obs.size() != agent_count()) throw std::invalid_argument("Trainer::act: one observation per agent");
  std::vector<ActVec> out;
  out.reserve(obs.size());
  for (std::size_t k = 0; k < obs.size(); ++k) out.push_back(select_action(agent(k).actor, obs[k], noise_scale, rng_).action);
  return out;
}

void Trainer::store(std::span<const ObsVec> obs, std::span<const ActVec> actions, std::span<const double> rewards,
                    std::span<const ObsVec> next_obs) {
  const std::size_t n = agent_count();
  if (obs.size() != n || actions.size() != n || rewards.size() != n || next_obs.size() != n) {
    throw std::invalid_argument("Trainer::store: one entry per agent required");
  }
  const std::size_t m = sensitive_.size();
  for (std::size_t j = 0; j < m; ++j) sensitive_buffers_[j].push({obs[j], actions[j], rewards[j], next_obs[j]});
  if (joint_buffer_) {
    JointTransition t;
    for (std::size_t k = m; k < n; ++k) {
      t.obs.insert(t.obs.end(), obs[k].begin(), obs[k].end());
      t.actions.insert(t.actions.end(), actions[k].begin(), actions[k].end());
      t.rewards.push_back(rewards[k]);
      t.next_obs.insert(t.next_obs.end(), next_obs[k].begin(), next_obs[k].end());
    }
    joint_buffer_->push(std::move(t));
  }
}

IterationReport Trainer::train_iteration(std::span<const double> weights, fed::Strategy strategy) {
  const std::size_t m = sensitive_.size();
  const std::size_t n = agent_count();
  if (weights.size() != n) throw std::invalid_argument("train_iteration: one weight per agent required");

  IterationReport report;
  report.critic_loss.assign(n, std::nullopt);
  report.actor_q.assign(n, std::nullopt);

  std::vector<bool> updated(n, false);
  report.phases.push_back(Phase::kSensitive);
  for (std::size_t j = 0; j < m; ++j) {
    if (sensitive_buffers_[j].size() < hp_.batch) continue;
    const auto batch = sensitive_buffers_[j].sample(hp_.batch, rng_);
    report.critic_loss[j] = update_sensitive_critic(sensitive_[j], batch, hp_);
    report.actor_q[j] = update_sensitive_actor(sensitive_[j], batch, hp_);
    report.ops.sensitive += 2;
    updated[j] = true;
  }

  report.phases.push_back(Phase::kInsensitive);
  if (joint_buffer_ && joint_buffer_->size() >= hp_.batch) {
    for (std::size_t l = 0; l < insensitive_.size(); ++l) {
      const auto batch = joint_buffer_->sample(hp_.batch, rng_);
      report.critic_loss[m + l] = update_insensitive_critic(insensitive_, batch, l, hp_);
      report.actor_q[m + l] = update_insensitive_actor(insensitive_, batch, l, hp_);
      report.ops.insensitive += 2;
      updated[m + l] = true;
    }
  }

  report.phases.push_back(Phase::kFederation);
  if (strategy != fed::Strategy::kNone) {
    auto fuse = [&](std::vector<ActorCritic>& group, std::size_t offset) {
      if (group.empty() || !updated[offset]) return;
      std::vector<nn::Mlp*> members;
      for (auto& a : group) members.push_back(&a.critic);
      fed::aggregate(members, weights.subspan(offset, group.size()), strategy);
      report.ops.federation += 1;
    };
    fuse(sensitive_, 0);
    fuse(insensitive_, m);
  }

  report.phases.push_back(Phase::kTargets);
  for (std::size_t k = 0; k < n; ++k) {
    if (!updated[k]) continue;
    update_targets(agent(k), hp_.phi);
    (k < m ? report.ops.sensitive : report.ops.insensitive) += 2;
  }

  report.updated = std::any_of(updated.begin(), updated.end(), [](bool u) { return u; });
  last_ops_ = report.ops;
  total_ops_ += report.ops;
  return report;
}

}  // namespace mafw::marl

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mafw/env.hpp"
#include "mafw/fedwgt.hpp"
#include "mafw/mlp.hpp"
#include "mafw/rng.hpp"

/// MADDPG-style training for two regimes: privacy-sensitive agents train actor
/// and critic purely on local transitions; privacy-insensitive agents share a
/// joint buffer and each trains a centralized critic over all insensitive
/// observations and actions.
namespace mafw::marl {

inline constexpr std::size_t kObs = env::kObservationDim;
inline constexpr std::size_t kAct = env::kActionDim;

using ObsVec = std::array<double, kObs>;
using ActVec = std::array<double, kAct>;

struct Hyperparams {
  double gamma = 0.1;
  double phi = 0.1;
  std::size_t batch = 8;
  double lr_actor = 0.002;
  double lr_critic = 0.02;
  std::size_t buffer_capacity = 100;
  double grad_clip = 1.0;
  std::vector<std::size_t> hidden{8, 8, 8};

  void validate() const;
};

/// Network input features of an observation (SNR scaled to order one).
ObsVec features(const env::Observation& obs);

struct Transition {
  ObsVec obs{};
  ActVec action{};
  double reward = 0.0;
  ObsVec next_obs{};
};

/// One step of the insensitive group, agent-major: obs/next_obs hold N*3
/// entries, actions N*4, rewards N.
struct JointTransition {
  std::vector<double> obs;
  std::vector<double> actions;
  std::vector<double> rewards;
  std::vector<double> next_obs;
};

/// Fixed-capacity FIFO replay memory.
template <class T>
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be >= 1");
  }

  void push(T item) {
    if (items_.size() == capacity_) items_.pop_front();
    items_.push_back(std::move(item));
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  const T& operator[](std::size_t i) const { return items_[i]; }

  /// `count` distinct items drawn uniformly; requires size() >= count.
  std::vector<T> sample(std::size_t count, Rng& rng) const {
    if (count > items_.size()) throw std::invalid_argument("ReplayBuffer: not enough samples");
    std::vector<std::size_t> idx(items_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::vector<T> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t j = i + rng.below(idx.size() - i);
      std::swap(idx[i], idx[j]);
      out.push_back(items_[idx[i]]);
    }
    return out;
  }

 private:
  std::size_t capacity_;
  std::deque<T> items_;
};

/// Online and target networks of one agent.
struct ActorCritic {
  nn::Mlp actor;
  nn::Mlp critic;
  nn::Mlp target_actor;
  nn::Mlp target_critic;
  nn::Sgd actor_opt;
  nn::Sgd critic_opt;
};

/// Actor 3 -> hidden -> 4 (tanh), critic 7 -> hidden -> 1.
ActorCritic make_sensitive_agent(const Hyperparams& hp, Rng& rng);
/// Actor 3 -> hidden -> 4 (tanh), critic N*(3+4) -> hidden -> 1.
ActorCritic make_insensitive_agent(std::size_t insensitive_count, const Hyperparams& hp, Rng& rng);

struct ActionSample {
  ActVec action{};        // clamp(mu(o) + perturbation, -1, 1)
  ActVec perturbation{};  // before clamping
};

ActionSample select_action(const nn::Mlp& actor, const ObsVec& obs, double noise_scale, Rng& rng);

/// Q value at `input`; writes dQ/d(input) into `grad`.
using CriticProbe = std::function<double(std::span<const double> input, std::span<double> grad)>;

/// Probe backed by an MLP critic with a single output.
CriticProbe mlp_probe(const nn::Mlp& critic);

/// One descent step on (1/S) sum (y - Q(x))^2. Returns the loss before the step.
double regress_critic(nn::Mlp& critic, const nn::Sgd& opt, std::span<const std::vector<double>> inputs,
                      std::span<const double> targets, double grad_clip);

/// One ascent step on (1/S) sum Q(x_i with mu(o_i) substituted at
/// action_offset). Returns the batch mean of Q before the step.
double ascend_policy(nn::Mlp& actor, const nn::Sgd& opt, std::span<const ObsVec> actor_obs,
                     std::span<const std::vector<double>> critic_inputs, std::size_t action_offset,
                     const CriticProbe& q, double grad_clip);

/// Bootstrapped targets r + gamma * Qt(o', mut(o')) of a sensitive batch.
std::vector<double> sensitive_targets(const ActorCritic& agent, std::span<const Transition> batch,
                                      double gamma);

/// Returns std::nullopt (no update) when batch.size() < hp.batch.
std::optional<double> update_sensitive_critic(ActorCritic& agent, std::span<const Transition> batch,
                                              const Hyperparams& hp);
std::optional<double> update_sensitive_actor(ActorCritic& agent, std::span<const Transition> batch,
                                             const Hyperparams& hp);

/// Throws std::invalid_argument if any transition's sizes disagree with the group size.
void check_joint_batch(std::span<const JointTransition> batch, std::size_t agents);

/// Targets r_k + gamma * Qbar_k(O', mubar_1(o'_1), ..., mubar_N(o'_N)).
std::vector<double> insensitive_targets(std::span<const ActorCritic> agents,
                                        std::span<const JointTransition> batch, std::size_t k,
                                        double gamma);

std::optional<double> update_insensitive_critic(std::span<ActorCritic> agents,
                                                std::span<const JointTransition> batch, std::size_t k,
                                                const Hyperparams& hp);
/// Critic step for every agent of the group; one loss per agent.
std::optional<std::vector<double>> update_insensitive_critics(std::span<ActorCritic> agents,
                                                              std::span<const JointTransition> batch,
                                                              const Hyperparams& hp);
/// Actor step for agent k: only slot k carries mu_k(o_k); other slots keep the
/// batch actions.
std::optional<double> update_insensitive_actor(std::span<ActorCritic> agents,
                                               std::span<const JointTransition> batch, std::size_t k,
                                               const Hyperparams& hp);

/// Soft-updates both target networks of an agent.
void update_targets(ActorCritic& agent, double phi);

/// Training operations per privacy class: each agent counts one critic step,
/// one actor step and two target syncs; federation counts one per fused class.
struct OpCounts {
  std::uint64_t sensitive = 0;
  std::uint64_t insensitive = 0;
  std::uint64_t federation = 0;

  std::uint64_t total() const { return sensitive + insensitive + federation; }
  OpCounts& operator+=(const OpCounts& o) {
    sensitive += o.sensitive;
    insensitive += o.insensitive;
    federation += o.federation;
    return *this;
  }
};

enum class Phase { kSensitive, kInsensitive, kFederation, kTargets };

struct IterationReport {
  std::vector<std::optional<double>> critic_loss;  // per agent, global order
  std::vector<std::optional<double>> actor_q;
  std::vector<Phase> phases;
  OpCounts ops;
  bool updated = false;
};

/// The learning side of the training loop: action selection, replay storage
/// and one update iteration (sensitive loop, insensitive loop, federation,
/// target updates, in that order).
class Trainer {
 public:
  Trainer(std::size_t sensitive, std::size_t insensitive, Hyperparams hp, std::uint64_t seed);

  std::size_t sensitive_count() const { return sensitive_.size(); }
  std::size_t insensitive_count() const { return insensitive_.size(); }
  std::size_t agent_count() const { return sensitive_.size() + insensitive_.size(); }
  const Hyperparams& hyperparams() const { return hp_; }

  /// One action per agent (sensitive first).
  std::vector<ActVec> act(std::span<const ObsVec> obs, double noise_scale);

  void store(std::span<const ObsVec> obs, std::span<const ActVec> actions, std::span<const double> rewards,
             std::span<const ObsVec> next_obs);

  /// `weights` holds one federation weight per agent (sensitive first); it is
  /// renormalized inside each privacy class.
  IterationReport train_iteration(std::span<const double> weights, fed::Strategy strategy);

  /// Per-iteration counts of the most recent train_iteration and the running total.
  const OpCounts& training_op_counter() const { return last_ops_; }
  const OpCounts& cumulative_ops() const { return total_ops_; }

  ActorCritic& agent(std::size_t k) { return k < sensitive_.size() ? sensitive_[k] : insensitive_[k - sensitive_.size()]; }
  const ActorCritic& agent(std::size_t k) const {
    return k < sensitive_.size() ? sensitive_[k] : insensitive_[k - sensitive_.size()];
  }
  std::size_t sensitive_buffer_size(std::size_t j) const { return sensitive_buffers_.at(j).size(); }
  std::size_t joint_buffer_size() const { return joint_buffer_ ? joint_buffer_->size() : 0; }

  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

 private:
  Hyperparams hp_;
  Rng rng_;
  std::vector<ActorCritic> sensitive_;
  std::vector<ActorCritic> insensitive_;
  std::vector<ReplayBuffer<Transition>> sensitive_buffers_;
  std::optional<ReplayBuffer<JointTransition>> joint_buffer_;
  OpCounts last_ops_;
  OpCounts total_ops_;
};

}  // namespace mafw::marl

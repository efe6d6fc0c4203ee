#pragma once

#include <cstddef>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "mafw/mlp.hpp"

/// Federated weighting of critic parameters. Each agent's divergence psi is
/// the gap between its mean reward and the global mean reward; weights are
/// inverse-square normalized divergences.
namespace mafw::fed {

inline constexpr double kPsiFloor = 1e-8;

enum class Strategy { kFedWgt, kFedAvg, kNone };

std::string to_string(Strategy s);
/// Accepts "fedwgt", "fedavg" or "none" (case-insensitive).
Strategy parse_strategy(const std::string& text);

/// Rolling per-agent reward means over the last `window` slots.
class RewardStats {
 public:
  RewardStats(std::size_t agents, std::size_t window);

  void record(std::span<const double> rewards);
  void clear();

  std::size_t agents() const { return history_.size(); }
  std::size_t samples() const { return history_.empty() ? 0 : history_.front().size(); }

  /// Throws std::logic_error when no samples have been recorded.
  std::vector<double> agent_means() const;
  double global_mean() const;

 private:
  std::size_t window_;
  std::vector<std::deque<double>> history_;
};

struct FedWeights {
  std::vector<double> psi;
  std::vector<double> w;
};

/// psi_k = |mean_k - global mean|. Throws std::logic_error without samples.
std::vector<double> estimate_divergence(const RewardStats& stats);

/// Same estimator from explicit means.
std::vector<double> estimate_divergence(std::span<const double> agent_means, double global_mean);

/// w_k = psi_k^-2 / sum_n psi_n^-2 with psi floored at kPsiFloor.
/// Throws std::invalid_argument on empty input or negative psi.
FedWeights fed_weights(std::span<const double> psi);

struct BoundParams {
  double learning_rate = 0.02;
  double lipschitz = 1.0;   // beta
  double smoothness = 1.0;  // lambda
  double rounds = 1.0;      // exponent
};

/// eta * (1 - r^rounds) / (1 - r) with r = sqrt(1 + eta^2 beta^2 - 2 eta lambda).
/// Throws std::domain_error when the radicand is <= 0 or r == 1.
double bound_factor(const BoundParams& params);

/// bound_factor * sum_k w_k psi_k.
double loss_bound(const BoundParams& params, std::span<const double> w, std::span<const double> psi);

/// Fuses one shape class of critics in place and returns the fused
/// parameters. Weights are renormalized over the class; kFedAvg uses uniform
/// weights; kNone leaves members untouched and returns an empty vector.
/// Throws std::invalid_argument for mixed shapes, a weight count mismatch or
/// a class whose weights sum to zero.
std::vector<double> aggregate(std::span<nn::Mlp* const> members, std::span<const double> weights,
                              Strategy strategy);

}  // namespace mafw::fed

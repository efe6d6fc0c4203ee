#include "mafw/fedwgt.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mafw::fed {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kFedWgt: return "fedwgt";
    case Strategy::kFedAvg: return "fedavg";
    case Strategy::kNone: return "none";
  }
  return "none";
}

Strategy parse_strategy(const std::string& text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "fedwgt") return Strategy::kFedWgt;
  if (lower == "fedavg") return Strategy::kFedAvg;
  if (lower == "none") return Strategy::kNone;
  throw std::invalid_argument("unknown federation strategy '" + text + "'");
}

RewardStats::RewardStats(std::size_t agents, std::size_t window)
    : window_(window), history_(agents) {
  if (window == 0) throw std::invalid_argument("RewardStats: window must be >= 1");
}

void RewardStats::record(std::span<const double> rewards) {
  if (rewards.size() != history_.size()) throw std::invalid_argument("RewardStats: agent count mismatch");
  for (std::size_t k = 0; k < rewards.size(); ++k) {
    history_[k].push_back(rewards[k]);
    if (history_[k].size() > window_) history_[k].pop_front();
  }
}

void RewardStats::clear() {
  for (auto& h : history_) h.clear();
}

std::vector<double> RewardStats::agent_means() const {
  if (samples() == 0) throw std::logic_error("RewardStats: no samples in the current round");
  std::vector<double> means;
  means.reserve(history_.size());
  for (const auto& h : history_) {
    means.push_back(std::accumulate(h.begin(), h.end(), 0.0) / static_cast<double>(h.size()));
  }
  return means;
}

double RewardStats::global_mean() const {
  const auto means = agent_means();
  return std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
}

std::vector<double> estimate_divergence(std::span<const double> agent_means, double global_mean) {
  std::vector<double> psi;
  psi.reserve(agent_means.size());
  for (double m : agent_means) psi.push_back(std::abs(m - global_mean));
  return psi;
}

std::vector<double> estimate_divergence(const RewardStats& stats) {
  const auto means = stats.agent_means();
  const double global =
      std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(means.size());
  return estimate_divergence(means, global);
}

FedWeights fed_weights(std::span<const double> psi) {
  if (psi.empty()) throw std::invalid_argument("fed_weights: empty divergence vector");
  FedWeights out;
  out.psi.assign(psi.begin(), psi.end());
  out.w.resize(psi.size());
  // Equal divergences give exactly the FedAvg weights.
  const bool uniform = std::all_of(psi.begin(), psi.end(), [&](double p) {
    return std::max(p, kPsiFloor) == std::max(psi.front(), kPsiFloor);
  });
  if (uniform && psi.front() >= 0.0) {
    std::fill(out.w.begin(), out.w.end(), 1.0 / static_cast<double>(psi.size()));
    return out;
  }
  double total = 0.0;
  for (std::size_t k = 0; k < psi.size(); ++k) {
    if (!(psi[k] >= 0.0)) throw std::invalid_argument("fed_weights: negative divergence");
    const double p = std::max(psi[k], kPsiFloor);
    out.w[k] = 1.0 / (p * p);
    total += out.w[k];
  }
  for (double& w : out.w) w /= total;
  return out;
}

double bound_factor(const BoundParams& params) {
  const double eta = params.learning_rate;
  const double radicand = 1.0 + eta * eta * params.lipschitz * params.lipschitz -
                          2.0 * eta * params.smoothness;
  if (!(radicand > 0.0)) throw std::domain_error("loss bound undefined: radicand <= 0");
  const double r = std::sqrt(radicand);
  if (r == 1.0) throw std::domain_error("loss bound undefined: contraction factor equals 1");
  return eta * (1.0 - std::pow(r, params.rounds)) / (1.0 - r);
}

double loss_bound(const BoundParams& params, std::span<const double> w, std::span<const double> psi) {
  if (w.size() != psi.size()) throw std::invalid_argument("loss_bound: size mismatch");
  double weighted = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) weighted += w[k] * psi[k];
  return bound_factor(params) * weighted;
}

std::vector<double> aggregate(std::span<nn::Mlp* const> members, std::span<const double> weights,
                              Strategy strategy) {
  if (strategy == Strategy::kNone || members.empty()) return {};
  if (weights.size() != members.size()) throw std::invalid_argument("aggregate: weight count mismatch");
  const nn::Mlp& first = *members.front();
  for (const nn::Mlp* m : members) {
    if (!m->same_shape(first)) throw std::invalid_argument("aggregate: mixed shapes in one class");
  }

  std::vector<double> w(members.size());
  const bool equal_weights =
      std::all_of(weights.begin(), weights.end(), [&](double x) { return x == weights.front(); });
  if (strategy == Strategy::kFedAvg || (equal_weights && weights.front() > 0.0)) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(members.size()));
  } else {
    double total = 0.0;
    for (double x : weights) {
      if (!(x >= 0.0)) throw std::invalid_argument("aggregate: negative weight");
      total += x;
    }
    if (!(total > 0.0)) throw std::invalid_argument("aggregate: weights sum to zero");
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = weights[k] / total;
  }

  std::vector<double> fused(first.param_count(), 0.0);
  for (std::size_t k = 0; k < members.size(); ++k) {
    const auto p = members[k]->params();
    for (std::size_t i = 0; i < fused.size(); ++i) fused[i] += w[k] * p[i];
  }
  for (nn::Mlp* m : members) std::copy(fused.begin(), fused.end(), m->params().begin());
  return fused;
}

}  // namespace mafw::fed

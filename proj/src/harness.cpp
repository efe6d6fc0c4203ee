#include "mafw/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "mafw/env.hpp"
#include "mafw/fedwgt.hpp"
#include "mafw/marl.hpp"

namespace mafw::harness {

namespace fs = std::filesystem;

std::size_t convergence_iteration(const std::vector<double>& rewards, std::size_t window, double tolerance) {
  if (rewards.empty()) return 0;
  const std::size_t w = std::min(window, rewards.size());
  std::vector<double> avg(rewards.size() - w + 1);
  double acc = std::accumulate(rewards.begin(), rewards.begin() + static_cast<std::ptrdiff_t>(w), 0.0);
  avg[0] = acc / static_cast<double>(w);
  for (std::size_t i = w; i < rewards.size(); ++i) {
    acc += rewards[i] - rewards[i - w];
    avg[i - w + 1] = acc / static_cast<double>(w);
  }
  const double final_value = avg.back();
  for (std::size_t i = 0; i < avg.size(); ++i) {
    if (std::abs(avg[i] - final_value) <= tolerance * std::abs(final_value)) return i + w;
  }
  return rewards.size();
}

namespace {

// Fixed-format number rendering so reruns produce identical bytes.
std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

bool all_finite(const marl::Trainer& trainer) {
  for (std::size_t k = 0; k < trainer.agent_count(); ++k) {
    const auto& a = trainer.agent(k);
    for (const nn::Mlp* net : {&a.actor, &a.critic}) {
      for (double p : net->params()) {
        if (!std::isfinite(p)) return false;
      }
    }
  }
  return true;
}

void write_checkpoint(const marl::Trainer& trainer, const fs::path& dir, std::size_t iteration,
                      std::size_t episode, std::uint64_t seed) {
  fs::create_directories(dir);
  for (std::size_t k = 0; k < trainer.agent_count(); ++k) {
    const auto& a = trainer.agent(k);
    const std::string stem = "agent" + std::to_string(k) + "_";
    nn::save_file(a.actor, (dir / (stem + "actor.txt")).string());
    nn::save_file(a.critic, (dir / (stem + "critic.txt")).string());
    nn::save_file(a.target_actor, (dir / (stem + "target_actor.txt")).string());
    nn::save_file(a.target_critic, (dir / (stem + "target_critic.txt")).string());
  }
  nlohmann::json manifest;
  manifest["format"] = "mafw-checkpoint 1";
  manifest["seed"] = seed;
  manifest["iteration"] = iteration;
  manifest["episode"] = episode;
  manifest["sensitive_agents"] = trainer.sensitive_count();
  manifest["insensitive_agents"] = trainer.insensitive_count();
  manifest["trainer_rng"] = trainer.rng().state();
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
}

double window_mean(const std::vector<double>& v, std::size_t begin, std::size_t end) {
  if (begin >= end) return 0.0;
  return std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(begin), v.begin() + static_cast<std::ptrdiff_t>(end), 0.0) /
         static_cast<double>(end - begin);
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& config, std::uint64_t seed, const fs::path& out_dir) {
  config.validate();
  env::WirelessEnv environment(config.scenario);
  marl::Trainer trainer(config.scenario.sensitive_agents, config.scenario.insensitive_agents, config.training,
                        seed ^ 0x9e3779b97f4a7c15ULL);
  const std::size_t n = environment.agent_count();
  fed::RewardStats stats(n, config.reward_window);
  fed::BoundParams bound = config.bound;

  std::ofstream csv;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    csv.open(out_dir / "metrics.csv");
    if (!csv) throw std::runtime_error("cannot write " + (out_dir / "metrics.csv").string());
    csv << "iteration,episode,step,scope,agent,privacy,reward,throughput_mbps,latency_s,energy_j,violation,"
           "psi,weight,noise_scale,critic_loss,actor_q,loss_bound\n";
  }

  RunSummary summary;
  summary.seed = seed;
  std::vector<double> step_rewards;
  step_rewards.reserve(config.episodes * config.steps_per_episode);
  double throughput_sum = 0.0;
  double latency_sum = 0.0;
  std::size_t iteration = 0;

  auto to_features = [](const std::vector<env::Observation>& obs) {
    std::vector<marl::ObsVec> f;
    f.reserve(obs.size());
    for (const auto& o : obs) f.push_back(marl::features(o));
    return f;
  };

  for (std::size_t episode = 0; episode < config.episodes; ++episode) {
    const double noise_scale = config.noise.value(static_cast<double>(episode));
    std::vector<marl::ObsVec> obs = to_features(environment.reset(seed, episode));
    double ep_reward = 0.0;
    double ep_violations = 0.0;
    double ep_throughput = 0.0;

    for (std::size_t step = 0; step < config.steps_per_episode; ++step) {
      ++iteration;
      const std::vector<marl::ActVec> actions = trainer.act(obs, noise_scale);
      const env::StepResult result = environment.step(actions);
      const std::vector<marl::ObsVec> next = to_features(result.observations);
      trainer.store(obs, actions, result.rewards, next);

      stats.record(result.rewards);
      const fed::FedWeights weights = fed::fed_weights(fed::estimate_divergence(stats));
      bound.rounds = static_cast<double>(iteration);
      const double z = fed::loss_bound(bound, weights.w, weights.psi);
      const marl::IterationReport report = trainer.train_iteration(weights.w, config.strategy);
      if (!all_finite(trainer)) {
        if (!out_dir.empty()) write_checkpoint(trainer, out_dir / "weights", iteration, episode, seed);
        throw std::runtime_error("non-finite network parameters at iteration " + std::to_string(iteration));
      }

      std::size_t violations = 0;
      for (const auto& a : result.agents) violations += a.latency_violation ? 1 : 0;
      const double violation_fraction = static_cast<double>(violations) / static_cast<double>(n);
      step_rewards.push_back(result.system_reward);
      ep_reward += result.system_reward;
      ep_violations += violation_fraction;
      ep_throughput += result.system_throughput_bps / 1e6;
      throughput_sum += result.system_throughput_bps / 1e6;
      latency_sum += result.mean_latency_s;
      summary.total_energy_j += result.system_energy_j;

      if (csv.is_open()) {
        const std::string prefix = std::to_string(iteration) + "," + std::to_string(episode) + "," + std::to_string(step) + ",";
        csv << prefix << "system,-1,," << num(result.system_reward) << ',' << num(result.system_throughput_bps / 1e6) << ','
            << num(result.mean_latency_s) << ',' << num(result.system_energy_j) << ',' << num(violation_fraction) << ",,,"
            << num(noise_scale) << ",,," << num(z) << '\n';
        for (std::size_t k = 0; k < n; ++k) {
          const env::AgentInfo& a = result.agents[k];
          csv << prefix << "agent," << k << ',' << (environment.spec(k).privacy_sensitive ? "sensitive" : "insensitive") << ','
              << num(result.rewards[k]) << ',' << num(a.throughput_bps / 1e6) << ',' << num(a.latency_s) << ','
              << num(a.energy_j) << ',' << (a.latency_violation ? 1 : 0) << ',' << num(weights.psi[k]) << ','
              << num(weights.w[k]) << ',' << num(noise_scale) << ',' << opt_num(report.critic_loss[k]) << ','
              << opt_num(report.actor_q[k]) << ",\n";
        }
      }
      obs = next;
    }
    const double steps = static_cast<double>(config.steps_per_episode);
    summary.episode_rewards.push_back(ep_reward / steps);
    summary.episode_violation_fraction.push_back(ep_violations / steps);
    summary.episode_throughput_mbps.push_back(ep_throughput / steps);
    spdlog::debug("seed {} episode {} reward {:.4f} throughput {:.1f} Mbps noise {:.3f}", seed, episode,
                  ep_reward / steps, ep_throughput / steps, noise_scale);
  }

  const std::size_t episodes = summary.episode_rewards.size();
  const std::size_t w = std::min(config.summary_window, episodes);
  summary.iterations = iteration;
  summary.final_mean_reward = window_mean(summary.episode_rewards, episodes - w, episodes);
  summary.first_mean_reward = window_mean(summary.episode_rewards, 0, w);
  summary.final_violation_fraction = window_mean(summary.episode_violation_fraction, episodes - w, episodes);
  summary.final_throughput_mbps = window_mean(summary.episode_throughput_mbps, episodes - w, episodes);
  summary.mean_throughput_mbps = throughput_sum / static_cast<double>(iteration);
  summary.mean_latency_s = latency_sum / static_cast<double>(iteration);
  summary.convergence_iteration = convergence_iteration(step_rewards);

  if (!out_dir.empty()) {
    nlohmann::json js;
    js["seed"] = seed;
    js["iterations"] = summary.iterations;
    for (const auto& [name, value] : summary_metrics(summary)) js[name] = value;
    js["episode_rewards"] = summary.episode_rewards;
    js["episode_violation_fraction"] = summary.episode_violation_fraction;
    js["episode_throughput_mbps"] = summary.episode_throughput_mbps;
    std::ofstream(out_dir / "summary.json") << js.dump(2) << '\n';
    if (config.checkpoints) write_checkpoint(trainer, out_dir / "weights", iteration, episodes, seed);
  }
  spdlog::info("seed {}: final reward {:.4f} (first {:.4f}), throughput {:.1f} Mbps, violations {:.3f}", seed,
               summary.final_mean_reward, summary.first_mean_reward, summary.final_throughput_mbps,
               summary.final_violation_fraction);
  return summary;
}

std::vector<std::pair<std::string, double>> summary_metrics(const RunSummary& s) {
  return {{"final_mean_reward", s.final_mean_reward},
          {"first_mean_reward", s.first_mean_reward},
          {"mean_throughput_mbps", s.mean_throughput_mbps},
          {"mean_latency_s", s.mean_latency_s},
          {"total_energy_j", s.total_energy_j},
          {"final_violation_fraction", s.final_violation_fraction},
          {"final_throughput_mbps", s.final_throughput_mbps},
          {"convergence_iteration", static_cast<double>(s.convergence_iteration)}};
}

Axis parse_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size()) {
    throw std::invalid_argument("axis must look like section.key=v1,v2 (got '" + text + "')");
  }
  Axis axis;
  axis.key = text.substr(0, eq);
  std::stringstream ss(text.substr(eq + 1));
  std::string v;
  while (std::getline(ss, v, ',')) {
    if (!v.empty()) axis.values.push_back(v);
  }
  if (axis.values.empty()) throw std::invalid_argument("axis '" + axis.key + "' has no values");
  return axis;
}

std::vector<MatrixCell> run_matrix(const ExperimentConfig& base, const std::vector<Axis>& axes,
                                   const std::vector<std::uint64_t>& seeds, const fs::path& out_dir,
                                   unsigned threads) {
  if (axes.empty()) throw std::invalid_argument("run_matrix: no axes given");
  if (seeds.empty()) throw std::invalid_argument("run_matrix: no seeds given");

  // Enumerate assignments, last axis fastest, and build each cell's config up front.
  struct Job {
    std::size_t index;
    std::map<std::string, std::string> assignment;
    ExperimentConfig config;
    std::uint64_t seed;
  };
  const boost::property_tree::ptree base_tree = config_to_tree(base);
  std::vector<Job> jobs;
  std::vector<std::size_t> cursor(axes.size(), 0);
  std::size_t cell = 0;
  while (true) {
    boost::property_tree::ptree tree = base_tree;
    std::map<std::string, std::string> assignment;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      apply_override(tree, axes[a].key, axes[a].values[cursor[a]]);
      assignment[axes[a].key] = axes[a].values[cursor[a]];
    }
    const ExperimentConfig cfg = config_from_tree(tree);
    for (std::uint64_t seed : seeds) jobs.push_back({cell, assignment, cfg, seed});
    ++cell;
    std::size_t a = axes.size();
    while (a > 0) {
      --a;
      if (++cursor[a] < axes[a].values.size()) break;
      cursor[a] = 0;
      if (a == 0) {
        a = axes.size() + 1;
        break;
      }
    }
    if (a == axes.size() + 1) break;
  }

  std::vector<MatrixCell> cells(jobs.size());
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    while (true) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= jobs.size()) return;
        i = next++;
      }
      const Job& job = jobs[i];
      const fs::path dir = out_dir.empty() ? fs::path()
                                           : out_dir / ("cell_" + std::to_string(job.index) + "_seed_" + std::to_string(job.seed));
      cells[i] = {job.assignment, job.seed, run_experiment(job.config, job.seed, dir)};
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned count = std::max(1u, std::min<unsigned>(threads ? threads : hw, static_cast<unsigned>(jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream table(out_dir / "matrix.csv");
    for (const auto& axis : axes) table << axis.key << ',';
    table << "seed,metric,value\n";
    for (const auto& c : cells) {
      for (const auto& [metric, value] : summary_metrics(c.summary)) {
        for (const auto& axis : axes) table << c.assignment.at(axis.key) << ',';
        table << c.seed << ',' << metric << ',' << num(value) << '\n';
      }
    }
  }
  return cells;
}

}  // namespace mafw::harness

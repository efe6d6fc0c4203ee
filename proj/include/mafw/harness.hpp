#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mafw/config.hpp"

/// End-to-end training runs and comparison matrices.
namespace mafw::harness {

struct RunSummary {
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  double final_mean_reward = 0.0;  // mean system reward over the last summary_window episodes
  double first_mean_reward = 0.0;  // same over the first summary_window episodes
  double mean_throughput_mbps = 0.0;
  double mean_latency_s = 0.0;
  double total_energy_j = 0.0;
  double final_violation_fraction = 0.0;  // agent-steps over T_max in the final window
  double final_throughput_mbps = 0.0;
  std::size_t convergence_iteration = 0;
  std::vector<double> episode_rewards;
  std::vector<double> episode_violation_fraction;
  std::vector<double> episode_throughput_mbps;
};

/// First iteration (1-based) whose 20-step moving average of `rewards` is
/// within 5% of the final moving average; rewards.size() if none is.
std::size_t convergence_iteration(const std::vector<double>& rewards, std::size_t window = 20,
                                  double tolerance = 0.05);

/// Runs the full training loop for one seed. When out_dir is non-empty,
/// writes metrics.csv, summary.json and (if enabled) weights/ under it.
/// Throws std::invalid_argument for invalid configs and std::runtime_error
/// when parameters become non-finite (after writing a checkpoint).
RunSummary run_experiment(const ExperimentConfig& config, std::uint64_t seed,
                          const std::filesystem::path& out_dir);

struct Axis {
  std::string key;  // config key "section.name"
  std::vector<std::string> values;
};

/// Parses "section.key=v1,v2,..."; throws std::invalid_argument if malformed.
Axis parse_axis(const std::string& text);

struct MatrixCell {
  std::map<std::string, std::string> assignment;
  std::uint64_t seed = 0;
  RunSummary summary;
};

/// Runs the Cartesian product of axis values for every seed. Each cell writes
/// into out_dir/cell_<index>_seed_<seed>/ and the tidy table goes to
/// out_dir/matrix.csv (axis columns, seed, metric, value). Throws
/// std::invalid_argument for an empty axis list or seed list.
std::vector<MatrixCell> run_matrix(const ExperimentConfig& base, const std::vector<Axis>& axes,
                                   const std::vector<std::uint64_t>& seeds,
                                   const std::filesystem::path& out_dir, unsigned threads = 0);

/// Scalar metrics of a summary in a fixed order (used for matrix.csv).
std::vector<std::pair<std::string, double>> summary_metrics(const RunSummary& s);

}  // namespace mafw::harness

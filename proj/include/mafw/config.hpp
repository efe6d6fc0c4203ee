#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "mafw/env.hpp"
#include "mafw/fedwgt.hpp"
#include "mafw/marl.hpp"
#include "mafw/noise.hpp"

namespace mafw {

struct ExperimentConfig {
  env::ScenarioConfig scenario;
  marl::Hyperparams training;
  noise::NoiseSchedule noise;
  fed::Strategy strategy = fed::Strategy::kFedWgt;
  std::size_t reward_window = 10;  // slots per divergence estimate
  fed::BoundParams bound;          // learning_rate follows training.lr_critic
  std::size_t episodes = 120;
  std::size_t steps_per_episode = 50;
  std::size_t summary_window = 20;  // episodes in the "final" window
  std::vector<std::uint64_t> seeds{1};
  std::string output_dir = "out";
  bool checkpoints = true;

  /// Throws std::invalid_argument describing every violated bound.
  void validate() const;
};

/// Defaults: 8 + 8 agents and the published simulation parameter set.
ExperimentConfig default_config();

/// INI-style tree (sections scenario, channel, mac, compute, reward, training,
/// noise, federation, experiment). Missing keys keep their defaults; unknown
/// keys are rejected.
ExperimentConfig config_from_tree(const boost::property_tree::ptree& tree);
boost::property_tree::ptree config_to_tree(const ExperimentConfig& config);

ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& config, const std::string& path);

/// Sets "section.key" = value in a config tree; throws on unknown keys.
void apply_override(boost::property_tree::ptree& tree, const std::string& key, const std::string& value);

}  // namespace mafw

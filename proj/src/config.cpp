#include "mafw/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <algorithm>
#include <charconv>
#include <sstream>
#include <type_traits>
#include <stdexcept>

namespace mafw {

namespace pt = boost::property_tree;

void ExperimentConfig::validate() const {
  std::vector<std::string> problems;
  auto capture = [&](auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      problems.emplace_back(e.what());
    }
  };
  capture([&] { scenario.validate(); });
  capture([&] { training.validate(); });
  capture([&] { noise.validate(); });
  if (training.batch != static_cast<std::size_t>(scenario.batch_samples)) {
    problems.emplace_back("training.batch must equal compute.batch_samples");
  }
  if (training.hidden != scenario.hidden_layers) {
    problems.emplace_back("training.hidden must equal the scenario's hidden layers");
  }
  if (reward_window < 1) problems.emplace_back("federation.window must be >= 1");
  if (episodes < 1) problems.emplace_back("experiment.episodes must be >= 1");
  if (steps_per_episode < 1) problems.emplace_back("experiment.steps_per_episode must be >= 1");
  if (summary_window < 1) problems.emplace_back("experiment.summary_window must be >= 1");
  if (seeds.empty()) problems.emplace_back("experiment.seeds must not be empty");
  if (!problems.empty()) {
    std::ostringstream os;
    os << "invalid configuration:";
    for (const auto& p : problems) os << "\n  " << p;
    throw std::invalid_argument(os.str());
  }
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.scenario.radio.tx_power_dbm = 20.0;
  c.bound.learning_rate = c.training.lr_critic;
  return c;
}

namespace {

template <class T>
std::string join(const std::vector<T>& values) {
  std::ostringstream os;
  for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << values[i];
  return os.str();
}

template <class T>
std::vector<T> split_list(const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream is(item);
    T v{};
    is >> v;
    if (!is) throw std::invalid_argument("malformed list entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::string placement_name(env::Placement p) { return p == env::Placement::kRadialSpread ? "spread" : "uniform"; }

env::Placement parse_placement(const std::string& s) {
  if (s == "uniform") return env::Placement::kUniformDisc;
  if (s == "spread") return env::Placement::kRadialSpread;
  throw std::invalid_argument("scenario.placement must be uniform or spread, got '" + s + "'");
}

// Visits every config field with (section.key, reference) so reading and
// writing share one schema.
template <class Visitor>
void visit(ExperimentConfig& c, Visitor&& v) {
  auto& s = c.scenario;
  v("scenario.sensitive_agents", s.sensitive_agents);
  v("scenario.insensitive_agents", s.insensitive_agents);
  v.custom("scenario.placement", [&] { return placement_name(s.placement); },
           [&](const std::string& x) { s.placement = parse_placement(x); });
  v("scenario.area_radius", s.area_radius_m);
  v("scenario.spread_min_radius", s.spread_min_radius_m);
  v("scenario.max_radius", s.max_radius_m);
  v("scenario.speed", s.speed_mps);
  v("scenario.slot", s.slot_s);
  v("scenario.bs_antennas", s.bs_antennas);
  v("scenario.ue_antennas", s.ue_antennas);

  v("channel.carrier_frequency", s.path_loss.carrier_frequency_hz);
  v("channel.reference_distance", s.path_loss.reference_distance_m);
  v("channel.path_loss_exponent", s.path_loss.path_loss_exponent);
  v("channel.shadowing_sigma", s.path_loss.shadowing_sigma_db);
  v("channel.tx_gain", s.path_loss.tx_gain_dbi);
  v("channel.rx_gain", s.path_loss.rx_gain_dbi);
  v("channel.tx_power", s.radio.tx_power_dbm);
  v("channel.noise_psd", s.radio.noise_psd_dbm_hz);
  v("channel.bandwidth", s.radio.bandwidth_hz);

  v("mac.cw_min", s.mac.cw_min);
  v("mac.cw_max", s.mac.cw_max);
  v("mac.frame_len_max", s.mac.frame_len_max_bits);
  v("mac.queue_capacity", s.mac.queue_capacity_bits);
  v("mac.mini_slot", s.mac.mini_slot_s);
  v("mac.frame_overhead", s.mac.frame_overhead_s);

  v("compute.sta_kappa", s.sta_compute.kappa);
  v("compute.sta_freq_max", s.sta_compute.freq_max_hz);
  v("compute.sta_cycles_per_bit", s.sta_compute.cycles_per_bit);
  v("compute.server_kappa", s.server_compute.kappa);
  v("compute.server_freq_max", s.server_compute.freq_max_hz);
  v("compute.server_cycles_per_bit", s.server_compute.cycles_per_bit);
  v("compute.flops_per_cycle", s.sta_compute.flops_per_cycle);
  v("compute.gradient_bits", s.sta_compute.gradient_bits);
  v("compute.state_bits", s.sta_compute.state_bits);
  v("compute.task_bits", s.sta_compute.task_bits);
  v("compute.server_task_bits", s.server_task_bits);
  v("compute.task_bits_per_delivered_bit", s.task_bits_per_delivered_bit);
  v("compute.batch_samples", s.batch_samples);
  v("compute.infeasible_latency", s.infeasible_latency_s);

  v.custom("reward.scheme", [&] { return std::to_string(static_cast<int>(s.reward.scheme)); },
           [&](const std::string& x) {
             if (x == "1") {
               s.reward.scheme = env::RewardScheme::kThroughputLatency;
             } else if (x == "2") {
               s.reward.scheme = env::RewardScheme::kThroughputEnergy;
             } else {
               throw std::invalid_argument("reward.scheme must be 1 or 2, got '" + x + "'");
             }
           });
  v("reward.t_max_sensitive", s.reward.t_max_sensitive_s);
  v("reward.t_max_insensitive", s.reward.t_max_insensitive_s);
  v("reward.throughput_unit", s.reward.throughput_unit_bps);
  v("reward.latency_unit", s.reward.latency_unit_s);
  v("reward.energy_unit", s.reward.energy_unit_j);

  auto& t = c.training;
  v("training.gamma", t.gamma);
  v("training.phi", t.phi);
  v("training.batch", t.batch);
  v("training.lr_actor", t.lr_actor);
  v("training.lr_critic", t.lr_critic);
  v("training.buffer_capacity", t.buffer_capacity);
  v("training.grad_clip", t.grad_clip);
  v.custom("training.hidden", [&] { return join(t.hidden); },
           [&](const std::string& x) { t.hidden = split_list<std::size_t>(x); });

  v.custom("noise.kind", [&] { return noise::to_string(c.noise.kind); },
           [&](const std::string& x) { c.noise.kind = noise::parse_kind(x); });
  v("noise.rate", c.noise.rate);
  v("noise.n0", c.noise.n0);
  v("noise.floor", c.noise.floor);

  v.custom("federation.strategy", [&] { return fed::to_string(c.strategy); },
           [&](const std::string& x) { c.strategy = fed::parse_strategy(x); });
  v("federation.window", c.reward_window);
  v("federation.bound_lipschitz", c.bound.lipschitz);
  v("federation.bound_smoothness", c.bound.smoothness);

  v("experiment.episodes", c.episodes);
  v("experiment.steps_per_episode", c.steps_per_episode);
  v("experiment.summary_window", c.summary_window);
  v.custom("experiment.seeds", [&] { return join(c.seeds); },
           [&](const std::string& x) { c.seeds = split_list<std::uint64_t>(x); });
  v("experiment.output_dir", c.output_dir);
  v("experiment.checkpoints", c.checkpoints);
}

struct Writer {
  pt::ptree& tree;
  template <class T>
  void operator()(const std::string& key, T& value) {
    if constexpr (std::is_same_v<T, bool>) {
      tree.put(key, value ? "true" : "false");
    } else if constexpr (std::is_floating_point_v<T>) {
      char buf[32];
      const auto res = std::to_chars(buf, buf + sizeof buf, value);
      tree.put(key, std::string(buf, res.ptr));
    } else {
      tree.put(key, value);
    }
  }
  template <class Get, class Set>
  void custom(const std::string& key, Get&& get, Set&&) {
    tree.put(key, get());
  }
};

struct Reader {
  const pt::ptree& tree;
  template <class T>
  void operator()(const std::string& key, T& value) {
    const auto text = tree.get_optional<std::string>(key);
    if (!text) return;
    if constexpr (std::is_same_v<T, bool>) {
      if (*text == "true" || *text == "1") {
        value = true;
      } else if (*text == "false" || *text == "0") {
        value = false;
      } else {
        throw std::invalid_argument(key + ": expected true or false, got '" + *text + "'");
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      value = *text;
    } else {
      std::istringstream is(*text);
      T parsed{};
      is >> parsed;
      if (!is || !(is >> std::ws).eof()) throw std::invalid_argument(key + ": cannot parse '" + *text + "'");
      if constexpr (std::is_unsigned_v<T>) {
        if (text->find('-') != std::string::npos) throw std::invalid_argument(key + ": must be non-negative");
      }
      value = parsed;
    }
  }
  template <class Get, class Set>
  void custom(const std::string& key, Get&&, Set&& set) {
    if (const auto text = tree.get_optional<std::string>(key)) set(*text);
  }
};

struct KeyCollector {
  std::vector<std::string> keys;
  template <class T>
  void operator()(const std::string& key, T&) {
    keys.push_back(key);
  }
  template <class Get, class Set>
  void custom(const std::string& key, Get&&, Set&&) {
    keys.push_back(key);
  }
};

std::vector<std::string> known_keys() {
  ExperimentConfig c;
  KeyCollector k;
  visit(c, k);
  return k.keys;
}

bool is_known(const std::string& key) {
  static const std::vector<std::string> keys = known_keys();
  return std::find(keys.begin(), keys.end(), key) != keys.end();
}

}  // namespace

ExperimentConfig config_from_tree(const pt::ptree& tree) {
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw std::invalid_argument("config: key '" + section + "' outside any section");
    for (const auto& [key, value] : body) {
      if (!is_known(section + "." + key)) throw std::invalid_argument("config: unknown key '" + section + "." + key + "'");
    }
  }
  ExperimentConfig c = default_config();
  visit(c, Reader{tree});
  // The energy model and the networks must agree on batch size and shapes.
  c.scenario.batch_samples = static_cast<double>(c.training.batch);
  c.scenario.hidden_layers = c.training.hidden;
  c.scenario.sta_compute.freq_hz = c.scenario.sta_compute.freq_max_hz;
  c.scenario.server_compute.freq_hz = c.scenario.server_compute.freq_max_hz;
  c.scenario.server_compute.flops_per_cycle = c.scenario.sta_compute.flops_per_cycle;
  c.bound.learning_rate = c.training.lr_critic;
  c.validate();
  return c;
}

pt::ptree config_to_tree(const ExperimentConfig& config) {
  pt::ptree tree;
  ExperimentConfig copy = config;
  visit(copy, Writer{tree});
  return tree;
}

ExperimentConfig load_config(const std::string& path) {
  pt::ptree tree;
  pt::read_ini(path, tree);
  return config_from_tree(tree);
}

void save_config(const ExperimentConfig& config, const std::string& path) {
  pt::write_ini(path, config_to_tree(config));
}

void apply_override(pt::ptree& tree, const std::string& key, const std::string& value) {
  if (!is_known(key)) throw std::invalid_argument("unknown config key '" + key + "'");
  tree.put(key, value);
}

}  // namespace mafw

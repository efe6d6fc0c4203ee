#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <spdlog/spdlog.h>

#include "mafw/config.hpp"
#include "mafw/harness.hpp"
#include "mafw/noise.hpp"

namespace {

struct NoiseFlags {
  std::optional<std::string> kind;
  std::optional<double> rate;
  std::optional<double> n0;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--noise", kind, "Exploration schedule (linear|cubic)")->check(CLI::IsMember({"linear", "cubic"}));
    cmd.add_option("--noise-rate", rate, "Decay rate (phi or eta)");
    cmd.add_option("--noise-n0", n0, "Initial noise scale");
  }
};

mafw::ExperimentConfig build_config(const std::string& path, const NoiseFlags& noise,
                                    const std::vector<std::string>& sets) {
  boost::property_tree::ptree tree =
      mafw::config_to_tree(path.empty() ? mafw::default_config() : mafw::load_config(path));
  if (noise.kind) mafw::apply_override(tree, "noise.kind", *noise.kind);
  if (noise.rate) mafw::apply_override(tree, "noise.rate", std::to_string(*noise.rate));
  if (noise.n0) mafw::apply_override(tree, "noise.n0", std::to_string(*noise.n0));
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("--set expects section.key=value, got '" + s + "'");
    mafw::apply_override(tree, s.substr(0, eq), s.substr(eq + 1));
  }
  return mafw::config_from_tree(tree);
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("MAFW_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(level));

  CLI::App app{"Federated multi-agent resource allocation simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  NoiseFlags noise;

  auto* run = app.add_subcommand("run", "Train one seed end to end");
  std::uint64_t seed = 1;
  std::string out = "out";
  run->add_option("--config", config_path, "INI config file (defaults when omitted)")->check(CLI::ExistingFile);
  run->add_option("--seed", seed, "Seed");
  run->add_option("--out", out, "Output directory");
  run->add_option("--set", sets, "Override section.key=value (repeatable)");
  noise.add_to(*run);

  auto* matrix = app.add_subcommand("matrix", "Run the Cartesian product of config axes");
  std::vector<std::string> axes;
  std::vector<std::uint64_t> seeds;
  unsigned threads = 0;
  matrix->add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  matrix->add_option("--axis", axes, "section.key=v1,v2 (repeatable)")->required();
  matrix->add_option("--seeds", seeds, "Seed list")->delimiter(',')->required();
  matrix->add_option("--out", out, "Output directory");
  matrix->add_option("--threads", threads, "Worker threads (0 = hardware)");
  matrix->add_option("--set", sets, "Override section.key=value (repeatable)");
  noise.add_to(*matrix);

  auto* validate = app.add_subcommand("validate-noise", "Check a schedule against the concave-decay conditions");
  std::string fn = "cubic";
  double rate = 0.02;
  double n0 = 1.0;
  validate->add_option("--fn", fn, "linear|cubic")->check(CLI::IsMember({"linear", "cubic"}));
  validate->add_option("--rate", rate, "Decay rate");
  validate->add_option("--n0", n0, "Initial scale");

  auto* dump = app.add_subcommand("dump-config", "Print the effective config as INI");
  dump->add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  dump->add_option("--set", sets, "Override section.key=value (repeatable)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto cfg = build_config(config_path, noise, sets);
      const auto summary = mafw::harness::run_experiment(cfg, seed, out);
      for (const auto& [name, value] : mafw::harness::summary_metrics(summary)) std::cout << name << " " << value << "\n";
    } else if (*matrix) {
      const auto cfg = build_config(config_path, noise, sets);
      std::vector<mafw::harness::Axis> parsed;
      for (const auto& a : axes) parsed.push_back(mafw::harness::parse_axis(a));
      const auto cells = mafw::harness::run_matrix(cfg, parsed, seeds, out, threads);
      std::cout << "wrote " << cells.size() << " runs to " << out << "/matrix.csv\n";
    } else if (*validate) {
      mafw::noise::NoiseSchedule schedule;
      schedule.kind = mafw::noise::parse_kind(fn);
      schedule.rate = rate;
      schedule.n0 = n0;
      schedule.validate();
      const auto report = mafw::noise::validate_schedule(schedule);
      std::cout << report.describe() << "\n";
      return report.passed ? 0 : 1;
    } else if (*dump) {
      const auto cfg = build_config(config_path, noise, sets);
      boost::property_tree::ptree tree = mafw::config_to_tree(cfg);
      boost::property_tree::write_ini(std::cout, tree);
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "commands.hpp"
#include "config.hpp"
#include "imitation/errors.hpp"

using namespace imitation;
using namespace imitation::cli;

namespace {

struct Overrides {
  std::string config;
  std::string preset;
  std::vector<std::uint64_t> seeds;
  std::string strategy;
  std::vector<std::size_t> labels_per_class;
  std::string out;
  std::vector<std::string> settings;
  bool full_protocol = false;
};

constexpr std::size_t kFullProtocolSeeds = 20;

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "Config file (key = value)");
  cmd->add_option("--preset", o.preset, "Named preset from the preset directory");
  cmd->add_option("--seed", o.seeds, "Seed; repeat for several")->take_all();
  cmd->add_option("--strategy", o.strategy,
                  "nn, gp, imitation, imitation-opt or imitation-opt-fid");
  cmd->add_option("--labels-per-class", o.labels_per_class, "Labeled examples per class")->take_all();
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--set", o.settings, "Extra key=value override; repeatable")->take_all();
  cmd->add_flag("--full-protocol", o.full_protocol, "Use 20 seeds (0..19) instead of the config list");
}

ExperimentConfig build_config(const Overrides& o) {
  if (o.config.empty() == o.preset.empty())
    throw ConfigError("exactly one of --config or --preset is required");
  const std::filesystem::path path = o.config.empty() ? preset_path(o.preset) : std::filesystem::path(o.config);
  if (!std::filesystem::exists(path))
    throw ConfigError("config file " + path.string() + " does not exist");
  ExperimentConfig cfg = load_config(path);
  for (const auto& kv : o.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.full_protocol) {
    cfg.seeds.resize(kFullProtocolSeeds);
    std::iota(cfg.seeds.begin(), cfg.seeds.end(), std::uint64_t{0});
  }
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (!o.strategy.empty()) cfg.strategies = {parse_strategy(o.strategy)};
  if (!o.labels_per_class.empty()) cfg.labels_per_class = o.labels_per_class;
  if (!o.out.empty()) cfg.out = o.out;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot imitation networks: distill a GP reference into an MLP"};
  app.require_subcommand(1);

  Overrides run_o, boundary_o;
  auto* run = app.add_subcommand("run", "Train and evaluate every strategy, seed and label count");
  add_common(run, run_o);
  auto* boundary = app.add_subcommand("boundary", "Reference and target decision surfaces on a 2-d grid");
  add_common(boundary, boundary_o);
  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config and print it with defaults filled in");
  validate->add_option("config", validate_path, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*validate) return cmd_validate(validate_path, std::cout, std::cerr);
    if (*run) {
      const auto result = cmd_run(build_config(run_o), std::cerr);
      for (const auto& f : result.files) std::cout << f.string() << "\n";
    } else if (*boundary) {
      const auto result = cmd_boundary(build_config(boundary_o), std::cerr);
      for (const auto& f : result.files) std::cout << f.string() << "\n";
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const DimensionError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
}

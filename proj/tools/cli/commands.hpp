#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "imitation/data.hpp"

namespace imitation::cli {

struct ExperimentData {
  Dataset train;                 // pool the labeled split is drawn from (embedded if configured)
  std::optional<Dataset> test;   // fixed test set; banana uses the split remainder instead
  std::optional<Dataset> base2d; // raw 2-d banana points, same row order as train
  EmbeddingMap embedding;        // identity when embed_dim = 0
};

ExperimentData load_experiment_data(const ExperimentConfig& cfg);

struct RunRow {
  std::uint64_t seed = 0;
  Strategy strategy = Strategy::nn;
  std::size_t labels_per_class = 0;
  double accuracy = 0.0;
};

struct RunResult {
  std::vector<RunRow> rows;
  std::vector<std::filesystem::path> files;
};

/// Few-shot split, reference fit, training and evaluation for every
/// (labels_per_class, seed, strategy); writes runs.csv, aggregate.csv,
/// table1.csv, report.csv and manifest.json under cfg.out.
RunResult cmd_run(const ExperimentConfig& cfg, std::ostream& log);

struct BoundarySeedResult {
  std::uint64_t seed = 0;
  double argmax_agreement = 0.0;  // target vs reference on the evaluation grid
  std::filesystem::path dir;
};

struct BoundaryResult {
  std::vector<BoundarySeedResult> seeds;
  std::vector<std::filesystem::path> files;
};

/// Reference and target class-1 probability on a 2-d lattice, plus
/// pseudo-example snapshots per training step. Uses the first strategy.
BoundaryResult cmd_boundary(const ExperimentConfig& cfg, std::ostream& log);

/// Parses and validates a config file, printing the resolved settings.
/// Returns the process exit code.
int cmd_validate(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;

}  // namespace imitation::cli

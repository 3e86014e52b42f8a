#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "imitation/gp.hpp"
#include "imitation/imitation.hpp"

namespace imitation::cli {

/// The five benchmark rows: reference alone, naive training, and the
/// imitation variants with pseudo-example optimization and fidelity weighting.
enum class Strategy { nn, gp, imitation, imitation_opt, imitation_opt_fid };

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& name);

enum class PseudoInit { interp, grid };

struct ExperimentConfig {
  std::string dataset;  // banana | idx
  std::filesystem::path banana_path;
  std::filesystem::path train_images, train_labels, test_images, test_labels;
  std::size_t embed_dim = 0;  // 0 keeps the raw features
  std::uint64_t embed_seed = 0;

  std::vector<std::size_t> labels_per_class{1};
  std::vector<Strategy> strategies;
  std::vector<std::size_t> hidden{256, 256};

  GpMode gp_mode = GpMode::regression;
  double gp_noise = 1e-2;
  std::size_t gp_top_k = 3;
  std::vector<double> gp_lengthscale_factors{0.5, 1.0, 2.0, 4.0, 8.0};
  std::vector<double> gp_variances{0.5, 1.0, 2.0};

  double lambda1 = 1.0;
  double lambda_bar2 = 1.0;
  std::optional<double> lambda_hat2;  // defaults to 10·λ̄2
  std::map<std::size_t, double> lambda_bar2_by_labels;

  PseudoInit pseudo_init = PseudoInit::interp;
  std::size_t pseudo_count = 500;
  double interp_fraction = 1.0;
  double jitter_scale = 0.2;
  std::size_t grid_resolution = 50;

  UpdateMode update_mode = UpdateMode::gradient;
  double pseudo_lr = 0.02;
  double target_lr = 0.02;
  std::size_t steps = 4;
  std::size_t epochs_per_step = 25;
  std::size_t batch_size = 100;
  bool eval_every_epoch = false;

  std::vector<std::uint64_t> seeds;
  std::filesystem::path out = "out";
  std::size_t boundary_resolution = 60;
  double grid_margin = 0.1;

  /// Relative paths in the config resolve against this directory.
  std::filesystem::path base_dir = ".";

  double lambda_bar2_for(std::size_t labels_per_class) const;
  double lambda_hat2_for(std::size_t labels_per_class) const;
  ImitationConfig imitation_config(Strategy s, std::size_t labels_per_class,
                                   std::uint64_t seed) const;
  std::vector<RbfKernel> gp_grid(const Matrix& labeled_features) const;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  /// Every key with defaults materialized, one `key = value` per line.
  std::string to_text() const;
  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

/// Applies one `key = value` assignment. Throws ConfigError for unknown keys
/// or unparsable values.
void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value);

/// Flat `key = value` text, `#` comments. Errors carry the line number.
ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

std::filesystem::path preset_dir();
std::filesystem::path preset_path(const std::string& name);

/// Seed for an independent stream derived from an experiment seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace imitation::cli

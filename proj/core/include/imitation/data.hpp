#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "imitation/linalg.hpp"

namespace imitation {

struct Dataset {
  Matrix features;                  // N × d
  std::vector<std::size_t> labels;  // N, each < class_count
  std::size_t class_count = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return features.cols(); }
  bool empty() const noexcept { return labels.empty(); }

  /// Throws DataError if labels/features disagree or features are non-finite.
  void validate() const;
  Dataset subset(std::span<const std::size_t> indices) const;
};

/// Random linear map x ↦ A·x from d to D dimensions.
class EmbeddingMap {
 public:
  EmbeddingMap() = default;
  EmbeddingMap(Matrix matrix, std::uint64_t seed);

  /// A with iid N(0,1) entries drawn from seed.
  static EmbeddingMap random(std::size_t source_dim, std::size_t target_dim, std::uint64_t seed);
  static EmbeddingMap identity(std::size_t dim);

  const Matrix& matrix() const noexcept { return matrix_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t source_dim() const noexcept { return matrix_.cols(); }
  std::size_t target_dim() const noexcept { return matrix_.rows(); }

  /// Row-wise A·x for a batch of source points.
  Matrix apply(const Matrix& points) const;
  /// Least-squares preimage (AᵀA)⁻¹Aᵀ·z of embedded points.
  Matrix project_back(const Matrix& embedded) const;

 private:
  Matrix matrix_;  // D × d
  std::uint64_t seed_ = 0;
};

/// Two feature columns and one label column; labels {−1,+1}, {1,2} or {0,1}
/// become {0,1}. A non-numeric first row is treated as a header.
Dataset load_banana(const std::filesystem::path& path);

std::pair<Dataset, EmbeddingMap> random_embed(const Dataset& ds, std::size_t target_dim,
                                              std::uint64_t seed);
Dataset embed(const Dataset& ds, const EmbeddingMap& map);

/// IDX image/label pair (optionally gzip-compressed); pixels scaled to [0,1].
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

/// Writes uncompressed IDX files; pixels are quantized as round(255·v).
void write_idx(const Dataset& ds, std::size_t rows, std::size_t cols,
               const std::filesystem::path& images_path, const std::filesystem::path& labels_path);

struct Split {
  Dataset labeled;
  Dataset rest;
  std::vector<std::size_t> labeled_indices;  // into the source dataset, ascending
};

/// Exactly per_class examples of every class, drawn without replacement.
Split few_shot_split(const Dataset& ds, std::size_t per_class, std::uint64_t seed);

/// resolution² points covering [xmin,xmax]×[ymin,ymax], x varying fastest.
Matrix make_grid(double xmin, double xmax, double ymin, double ymax, std::size_t resolution);

struct Bounds2d {
  double xmin, xmax, ymin, ymax;
};

/// Bounding box of 2-d points, each side expanded by `margin` of its extent.
Bounds2d bounding_box(const Matrix& points, double margin);

}  // namespace imitation

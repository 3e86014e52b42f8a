#include "imitation/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "imitation/errors.hpp"

namespace imitation {

void Dataset::validate() const {
  if (features.rows() != labels.size()) {
    throw DataError("dataset: " + std::to_string(features.rows()) + " feature rows but " +
                    std::to_string(labels.size()) + " labels");
  }
  for (auto y : labels)
    if (y >= class_count) throw DataError("dataset: label " + std::to_string(y) + " out of range");
  if (!features.all_finite()) throw DataError("dataset: non-finite feature");
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = features.gather_rows(indices);
  out.labels.reserve(indices.size());
  for (auto i : indices) out.labels.push_back(labels[i]);
  out.class_count = class_count;
  return out;
}

EmbeddingMap::EmbeddingMap(Matrix matrix, std::uint64_t seed)
    : matrix_(std::move(matrix)), seed_(seed) {
  if (matrix_.rows() < matrix_.cols()) throw DimensionError("EmbeddingMap: target dim < source dim");
  if (!matrix_.all_finite()) throw NumericalError("EmbeddingMap: non-finite entry");
}

EmbeddingMap EmbeddingMap::random(std::size_t source_dim, std::size_t target_dim,
                                  std::uint64_t seed) {
  if (target_dim < source_dim) {
    throw DimensionError("random_embed: target dim " + std::to_string(target_dim) +
                         " < source dim " + std::to_string(source_dim));
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix a(target_dim, source_dim);
  for (double& v : a.data()) v = normal(rng);
  return EmbeddingMap(std::move(a), seed);
}

EmbeddingMap EmbeddingMap::identity(std::size_t dim) { return EmbeddingMap(Matrix::identity(dim), 0); }

Matrix EmbeddingMap::apply(const Matrix& points) const {
  if (points.cols() != source_dim()) throw DimensionError("EmbeddingMap::apply: width mismatch");
  return matmul_nt(points, matrix_);
}

Matrix EmbeddingMap::project_back(const Matrix& embedded) const {
  if (embedded.cols() != target_dim()) throw DimensionError("EmbeddingMap::project_back: width mismatch");
  const Matrix gram = matmul_tn(matrix_, matrix_);             // d × d
  const Matrix rhs = matmul_tn(matrix_, embedded.transposed());  // d × N
  return solve_spd(gram, rhs, 0.0).transposed();
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(line);
  while (std::getline(in, cur, ',')) {
    auto b = cur.find_first_not_of(" \t\r");
    auto e = cur.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? std::string() : cur.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_double(const std::string& s, double& v) {
  if (s.empty()) return false;
  const char* first = s.data();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace

Dataset load_banana(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("banana: cannot open " + path.string());
  Matrix features(0, 2);
  std::vector<double> raw_labels;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv(line);
    if (cells.size() != 3) {
      throw DataError("banana: line " + std::to_string(line_no) + ": expected 3 columns, got " +
                      std::to_string(cells.size()));
    }
    double v[3];
    bool ok = true;
    for (int i = 0; i < 3; ++i) ok = ok && parse_double(cells[i], v[i]);
    if (!ok) {
      if (first_content) {
        first_content = false;
        continue;  // header
      }
      throw DataError("banana: line " + std::to_string(line_no) + ": malformed row");
    }
    first_content = false;
    features.append_row(std::span<const double>(v, 2));
    raw_labels.push_back(v[2]);
  }
  if (raw_labels.empty()) throw DataError("banana: no data rows in " + path.string());

  std::set<double> values(raw_labels.begin(), raw_labels.end());
  std::map<double, std::size_t> mapping;
  if (values.size() > 2) throw DataError("banana: more than two distinct labels");
  const bool known = std::all_of(values.begin(), values.end(), [](double x) {
                       return x == -1.0 || x == 1.0;
                     }) ||
                     std::all_of(values.begin(), values.end(), [](double x) {
                       return x == 1.0 || x == 2.0;
                     }) ||
                     std::all_of(values.begin(), values.end(), [](double x) {
                       return x == 0.0 || x == 1.0;
                     });
  if (!known) throw DataError("banana: labels must be in {-1,+1}, {1,2} or {0,1}");
  // Two-valued sets map in ascending order. A lone 1 is ambiguous and is
  // read as the positive class.
  if (values.size() == 2) {
    mapping[*values.begin()] = 0;
    mapping[*values.rbegin()] = 1;
  } else {
    const double only = *values.begin();
    mapping[only] = only > 0.0 ? 1 : 0;
  }

  Dataset ds;
  ds.features = std::move(features);
  ds.class_count = 2;
  ds.labels.reserve(raw_labels.size());
  for (double y : raw_labels) ds.labels.push_back(mapping.at(y));
  ds.validate();
  return ds;
}

std::pair<Dataset, EmbeddingMap> random_embed(const Dataset& ds, std::size_t target_dim,
                                              std::uint64_t seed) {
  auto map = EmbeddingMap::random(ds.dim(), target_dim, seed);
  return {embed(ds, map), map};
}

Dataset embed(const Dataset& ds, const EmbeddingMap& map) {
  Dataset out;
  out.features = map.apply(ds.features);
  out.labels = ds.labels;
  out.class_count = ds.class_count;
  return out;
}

namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("idx: cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
    z_stream zs{};
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw DataError("idx: zlib init failed");
    std::vector<unsigned char> out;
    unsigned char buf[1 << 16];
    zs.next_in = bytes.data();
    zs.avail_in = static_cast<uInt>(bytes.size());
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
      zs.next_out = buf;
      zs.avail_out = sizeof(buf);
      rc = inflate(&zs, Z_NO_FLUSH);
      if (rc != Z_OK && rc != Z_STREAM_END) {
        inflateEnd(&zs);
        throw DataError("idx: corrupt or truncated gzip stream in " + path.string());
      }
      out.insert(out.end(), buf, buf + (sizeof(buf) - zs.avail_out));
      if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
        inflateEnd(&zs);
        throw DataError("idx: truncated gzip stream in " + path.string());
      }
    }
    inflateEnd(&zs);
    return out;
  }
  return bytes;
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
         (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

void put_be32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v >> 24), static_cast<char>(v >> 16),
                     static_cast<char>(v >> 8), static_cast<char>(v)};
  out.write(b, 4);
}

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto img = read_bytes(images_path);
  const auto lab = read_bytes(labels_path);
  if (img.size() < 16) throw DataError("idx: truncated image header in " + images_path.string());
  if (lab.size() < 8) throw DataError("idx: truncated label header in " + labels_path.string());
  if (be32(img, 0) != kImagesMagic) throw DataError("idx: bad image magic in " + images_path.string());
  if (be32(lab, 0) != kLabelsMagic) throw DataError("idx: bad label magic in " + labels_path.string());
  const std::size_t n_img = be32(img, 4);
  const std::size_t rows = be32(img, 8);
  const std::size_t cols = be32(img, 12);
  const std::size_t n_lab = be32(lab, 4);
  if (n_img != n_lab) {
    throw DataError("idx: image count " + std::to_string(n_img) + " != label count " +
                    std::to_string(n_lab));
  }
  const std::size_t d = rows * cols;
  if (img.size() < 16 + n_img * d) throw DataError("idx: truncated image data in " + images_path.string());
  if (lab.size() < 8 + n_lab) throw DataError("idx: truncated label data in " + labels_path.string());

  Dataset ds;
  ds.class_count = 10;
  ds.features = Matrix(n_img, d);
  auto f = ds.features.data();
  for (std::size_t i = 0; i < n_img * d; ++i) f[i] = static_cast<double>(img[16 + i]) / 255.0;
  ds.labels.resize(n_lab);
  for (std::size_t i = 0; i < n_lab; ++i) {
    ds.labels[i] = lab[8 + i];
    if (ds.labels[i] >= ds.class_count)
      throw DataError("idx: label " + std::to_string(ds.labels[i]) + " out of range");
  }
  return ds;
}

void write_idx(const Dataset& ds, std::size_t rows, std::size_t cols,
               const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  if (rows * cols != ds.dim()) throw DimensionError("write_idx: rows*cols != feature width");
  std::ofstream img(images_path, std::ios::binary);
  std::ofstream lab(labels_path, std::ios::binary);
  if (!img || !lab) throw DataError("write_idx: cannot open output files");
  put_be32(img, kImagesMagic);
  put_be32(img, static_cast<std::uint32_t>(ds.size()));
  put_be32(img, static_cast<std::uint32_t>(rows));
  put_be32(img, static_cast<std::uint32_t>(cols));
  for (double v : ds.features.data()) {
    const long q = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
    img.put(static_cast<char>(q));
  }
  put_be32(lab, kLabelsMagic);
  put_be32(lab, static_cast<std::uint32_t>(ds.size()));
  for (auto y : ds.labels) lab.put(static_cast<char>(y));
}

Split few_shot_split(const Dataset& ds, std::size_t per_class, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(ds.class_count);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.labels[i]].push_back(i);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.size() < per_class) {
      throw DataError("few_shot_split: class " + std::to_string(c) + " has " +
                      std::to_string(idx.size()) + " members, need " + std::to_string(per_class));
    }
    // Partial Fisher-Yates: the first per_class slots are a uniform sample.
    for (std::size_t k = 0; k < per_class; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
      std::swap(idx[k], idx[pick(rng)]);
      chosen.push_back(idx[k]);
    }
  }
  std::sort(chosen.begin(), chosen.end());
  std::vector<std::size_t> rest;
  rest.reserve(ds.size() - chosen.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (j < chosen.size() && chosen[j] == i) {
      ++j;
      continue;
    }
    rest.push_back(i);
  }
  return {ds.subset(chosen), ds.subset(rest), chosen};
}

Matrix make_grid(double xmin, double xmax, double ymin, double ymax, std::size_t resolution) {
  if (!(xmin < xmax) || !(ymin < ymax)) throw DimensionError("make_grid: bounds must be increasing");
  if (resolution < 2) throw DimensionError("make_grid: resolution must be >= 2");
  const double dx = (xmax - xmin) / static_cast<double>(resolution - 1);
  const double dy = (ymax - ymin) / static_cast<double>(resolution - 1);
  Matrix grid(resolution * resolution, 2);
  for (std::size_t iy = 0; iy < resolution; ++iy) {
    for (std::size_t ix = 0; ix < resolution; ++ix) {
      auto r = grid.row(iy * resolution + ix);
      r[0] = ix + 1 == resolution ? xmax : xmin + dx * static_cast<double>(ix);
      r[1] = iy + 1 == resolution ? ymax : ymin + dy * static_cast<double>(iy);
    }
  }
  return grid;
}

Bounds2d bounding_box(const Matrix& points, double margin) {
  if (points.cols() != 2 || points.rows() == 0) throw DimensionError("bounding_box: need 2-d points");
  Bounds2d b{points(0, 0), points(0, 0), points(0, 1), points(0, 1)};
  for (std::size_t i = 0; i < points.rows(); ++i) {
    b.xmin = std::min(b.xmin, points(i, 0));
    b.xmax = std::max(b.xmax, points(i, 0));
    b.ymin = std::min(b.ymin, points(i, 1));
    b.ymax = std::max(b.ymax, points(i, 1));
  }
  const double ex = (b.xmax - b.xmin) * margin;
  const double ey = (b.ymax - b.ymin) * margin;
  return {b.xmin - ex, b.xmax + ex, b.ymin - ey, b.ymax + ey};
}

}  // namespace imitation

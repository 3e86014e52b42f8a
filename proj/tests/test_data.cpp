#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "imitation/data.hpp"
#include "imitation/errors.hpp"
#include "oracles.hpp"

using namespace imitation;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("imitation_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

Dataset toy_dataset(std::size_t per_class, std::size_t classes, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset ds;
  ds.class_count = classes;
  ds.features = oracle::random_matrix(per_class * classes, dim, rng);
  for (std::size_t i = 0; i < per_class * classes; ++i) ds.labels.push_back(i % classes);
  return ds;
}

// Spearman rank correlation without ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

}  // namespace

TEST(Banana, LoadsHeaderAndMapsLabels) {
  const auto dir = temp_dir("banana");
  write_text(dir / "a.csv", "x1,x2,y\n0.5,1.0,-1\n-0.25,2.0,1\n1,1,1\n");
  const Dataset ds = load_banana(dir / "a.csv");
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.class_count, 2u);
  EXPECT_EQ(ds.labels, (std::vector<std::size_t>{0, 1, 1}));
  EXPECT_EQ(ds.features(1, 0), -0.25);

  write_text(dir / "b.csv", "1,2,1\n3,4,2\n");
  EXPECT_EQ(load_banana(dir / "b.csv").labels, (std::vector<std::size_t>{0, 1}));
}

TEST(Banana, ReportsBadLinesAndLabels) {
  const auto dir = temp_dir("banana_bad");
  write_text(dir / "cols.csv", "1,2,1\n3,4\n");
  try {
    load_banana(dir / "cols.csv");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  write_text(dir / "labels.csv", "1,2,5\n3,4,7\n");
  EXPECT_THROW(load_banana(dir / "labels.csv"), DataError);
  write_text(dir / "three.csv", "1,2,0\n3,4,1\n5,6,2\n");
  EXPECT_THROW(load_banana(dir / "three.csv"), DataError);
  EXPECT_THROW(load_banana(dir / "missing.csv"), DataError);
}

TEST(Banana, BundledDatasetShape) {
  const Dataset ds = load_banana(fs::path(IMITATION_DATA_DIR) / "banana.csv");
  EXPECT_EQ(ds.size(), 400u);
  EXPECT_EQ(ds.dim(), 2u);
  EXPECT_EQ(std::count(ds.labels.begin(), ds.labels.end(), 1u), 200);
}

TEST(Embedding, PreservesDistanceRanking) {
  const Dataset base = toy_dataset(20, 2, 2, 3);
  auto [emb, map] = random_embed(base, 100, 17);
  EXPECT_EQ(emb.dim(), 100u);
  EXPECT_EQ(emb.labels, base.labels);
  std::vector<double> d_base, d_emb;
  for (std::size_t i = 0; i < base.size(); ++i)
    for (std::size_t j = i + 1; j < base.size(); ++j) {
      d_base.push_back(oracle::sq_dist(base.features.row(i), base.features.row(j)));
      d_emb.push_back(oracle::sq_dist(emb.features.row(i), emb.features.row(j)));
    }
  EXPECT_GT(spearman(d_base, d_emb), 0.9);
}

TEST(Embedding, ProjectBackInvertsApply) {
  std::mt19937_64 rng(2);
  const auto map = EmbeddingMap::random(2, 100, 5);
  const Matrix pts = oracle::random_matrix(10, 2, rng);
  EXPECT_LT(oracle::max_abs_diff(map.project_back(map.apply(pts)), pts), 1e-10);
  const auto same = EmbeddingMap::random(2, 100, 5);
  EXPECT_EQ(same.matrix(), map.matrix());
  EXPECT_THROW(random_embed(toy_dataset(2, 2, 3, 1), 2, 0), DimensionError);
}

TEST(Idx, RoundTripAndGzip) {
  const auto dir = temp_dir("idx");
  Dataset ds;
  ds.class_count = 10;
  ds.features = Matrix(3, 4);
  for (std::size_t i = 0; i < 12; ++i) ds.features.data()[i] = static_cast<double>(i * 20) / 255.0;
  ds.labels = {3, 0, 9};
  write_idx(ds, 2, 2, dir / "img", dir / "lab");
  const Dataset back = load_idx(dir / "img", dir / "lab");
  EXPECT_EQ(back.labels, ds.labels);
  EXPECT_LT(oracle::max_abs_diff(back.features, ds.features), 1e-15);

  const fs::path data = IMITATION_DATA_DIR;
  const Dataset test = load_idx(data / "mnist-desk/t10k-images-idx3-ubyte.gz",
                                data / "mnist-desk/t10k-labels-idx1-ubyte.gz");
  EXPECT_EQ(test.size(), 2000u);
  EXPECT_EQ(test.dim(), 784u);
  for (std::size_t c = 0; c < 10; ++c)
    EXPECT_GT(std::count(test.labels.begin(), test.labels.end(), c), 50);
}

TEST(Idx, DetectsCorruption) {
  const auto dir = temp_dir("idx_bad");
  Dataset ds;
  ds.class_count = 10;
  ds.features = Matrix(2, 4, 0.5);
  ds.labels = {1, 2};
  write_idx(ds, 2, 2, dir / "img", dir / "lab");

  Dataset one = ds.subset(std::vector<std::size_t>{0});
  write_idx(one, 2, 2, dir / "img1", dir / "lab1");
  try {
    load_idx(dir / "img", dir / "lab1");
    FAIL() << "expected count mismatch";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("image count 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("label count 1"), std::string::npos) << msg;
  }
  fs::resize_file(dir / "img", 20);
  EXPECT_THROW(load_idx(dir / "img", dir / "lab"), DataError);
  EXPECT_THROW(load_idx(dir / "lab", dir / "img"), DataError);  // magic swapped
}

TEST(Split, ExactPerClassCountsAndDeterminism) {
  const Dataset ds = toy_dataset(30, 4, 3, 8);
  const Split a = few_shot_split(ds, 5, 42);
  const Split b = few_shot_split(ds, 5, 42);
  const Split c = few_shot_split(ds, 5, 43);
  EXPECT_EQ(a.labeled_indices, b.labeled_indices);
  EXPECT_NE(a.labeled_indices, c.labeled_indices);
  EXPECT_EQ(a.labeled.size(), 20u);
  EXPECT_EQ(a.rest.size(), 100u);
  EXPECT_TRUE(std::is_sorted(a.labeled_indices.begin(), a.labeled_indices.end()));
  std::set<std::size_t> uniq(a.labeled_indices.begin(), a.labeled_indices.end());
  EXPECT_EQ(uniq.size(), 20u);
  for (std::size_t cl = 0; cl < 4; ++cl)
    EXPECT_EQ(std::count(a.labeled.labels.begin(), a.labeled.labels.end(), cl), 5);
  EXPECT_THROW(few_shot_split(ds, 31, 1), DataError);
}

TEST(Grid, LayoutAndEndpoints) {
  const Matrix g = make_grid(-1.0, 2.0, 0.0, 1.0, 4);
  EXPECT_EQ(g.rows(), 16u);
  EXPECT_EQ(g(0, 0), -1.0);
  EXPECT_EQ(g(1, 1), 0.0);  // x varies fastest
  EXPECT_EQ(g(3, 0), 2.0);
  EXPECT_EQ(g(15, 1), 1.0);
  EXPECT_THROW(make_grid(1, 0, 0, 1, 4), DimensionError);
  EXPECT_THROW(make_grid(0, 1, 0, 1, 1), DimensionError);
  const auto b = bounding_box(Matrix{{0, 0}, {2, 4}}, 0.5);
  EXPECT_DOUBLE_EQ(b.xmin, -1.0);
  EXPECT_DOUBLE_EQ(b.ymax, 6.0);
}

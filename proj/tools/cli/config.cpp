#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "imitation/errors.hpp"

#ifndef IMITATION_PRESET_DIR
#define IMITATION_PRESET_DIR "presets"
#endif

namespace imitation::cli {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::nn: return "nn";
    case Strategy::gp: return "gp";
    case Strategy::imitation: return "imitation";
    case Strategy::imitation_opt: return "imitation-opt";
    case Strategy::imitation_opt_fid: return "imitation-opt-fid";
  }
  return "?";
}

Strategy parse_strategy(const std::string& name) {
  for (auto s : {Strategy::nn, Strategy::gp, Strategy::imitation, Strategy::imitation_opt,
                 Strategy::imitation_opt_fid}) {
    if (to_string(s) == name) return s;
  }
  throw ConfigError("strategy: unknown strategy '" + name +
                    "' (expected nn, gp, imitation, imitation-opt, imitation-opt-fid)");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw ConfigError(key + ": invalid value '" + value + "' (expected " + what + ")");
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const char* first = v.data();
  if (!v.empty() && v[0] == '+') ++first;
  auto res = std::from_chars(first, v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
    bad_value(key, v, "a number");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
    bad_value(key, v, "a non-negative integer");
  return out;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(to_u64(key, v));
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "true or false");
}

template <typename T, typename F>
std::vector<T> to_list(const std::string& key, const std::string& v, F&& conv) {
  std::vector<T> out;
  for (const auto& item : split_list(v)) out.push_back(conv(key, item));
  if (out.empty()) bad_value(key, v, "a non-empty comma-separated list");
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"dataset",
       [](auto& c, auto& k, auto& v) {
         if (v != "banana" && v != "idx") bad_value(k, v, "banana or idx");
         c.dataset = v;
       }},
      {"banana_path", [](auto& c, auto&, auto& v) { c.banana_path = v; }},
      {"train_images", [](auto& c, auto&, auto& v) { c.train_images = v; }},
      {"train_labels", [](auto& c, auto&, auto& v) { c.train_labels = v; }},
      {"test_images", [](auto& c, auto&, auto& v) { c.test_images = v; }},
      {"test_labels", [](auto& c, auto&, auto& v) { c.test_labels = v; }},
      {"embed_dim", [](auto& c, auto& k, auto& v) { c.embed_dim = to_size(k, v); }},
      {"embed_seed", [](auto& c, auto& k, auto& v) { c.embed_seed = to_u64(k, v); }},
      {"labels_per_class",
       [](auto& c, auto& k, auto& v) { c.labels_per_class = to_list<std::size_t>(k, v, to_size); }},
      {"strategy",
       [](auto& c, auto& k, auto& v) {
         c.strategies = to_list<Strategy>(k, v, [](auto&, auto& s) { return parse_strategy(s); });
       }},
      {"hidden",
       [](auto& c, auto& k, auto& v) {
         c.hidden = v == "none" ? std::vector<std::size_t>{} : to_list<std::size_t>(k, v, to_size);
       }},
      {"gp_mode",
       [](auto& c, auto& k, auto& v) {
         if (v == "regression") c.gp_mode = GpMode::regression;
         else if (v == "laplace") c.gp_mode = GpMode::laplace_binary;
         else bad_value(k, v, "regression or laplace");
       }},
      {"gp_noise", [](auto& c, auto& k, auto& v) { c.gp_noise = to_double(k, v); }},
      {"gp_top_k", [](auto& c, auto& k, auto& v) { c.gp_top_k = to_size(k, v); }},
      {"gp_lengthscale_factors",
       [](auto& c, auto& k, auto& v) { c.gp_lengthscale_factors = to_list<double>(k, v, to_double); }},
      {"gp_variances",
       [](auto& c, auto& k, auto& v) { c.gp_variances = to_list<double>(k, v, to_double); }},
      {"lambda1", [](auto& c, auto& k, auto& v) { c.lambda1 = to_double(k, v); }},
      {"lambda_bar2", [](auto& c, auto& k, auto& v) { c.lambda_bar2 = to_double(k, v); }},
      {"lambda_hat2",
       [](auto& c, auto& k, auto& v) {
         if (v == "auto") c.lambda_hat2.reset();
         else c.lambda_hat2 = to_double(k, v);
       }},
      {"lambda_bar2_by_labels",
       [](auto& c, auto& k, auto& v) {
         c.lambda_bar2_by_labels.clear();
         if (v == "none") return;
         for (const auto& item : split_list(v)) {
           const auto colon = item.find(':');
           if (colon == std::string::npos) bad_value(k, v, "labels:weight pairs");
           c.lambda_bar2_by_labels[to_size(k, trim(item.substr(0, colon)))] =
               to_double(k, trim(item.substr(colon + 1)));
         }
       }},
      {"pseudo_init",
       [](auto& c, auto& k, auto& v) {
         if (v == "interp") c.pseudo_init = PseudoInit::interp;
         else if (v == "grid") c.pseudo_init = PseudoInit::grid;
         else bad_value(k, v, "interp or grid");
       }},
      {"pseudo_count", [](auto& c, auto& k, auto& v) { c.pseudo_count = to_size(k, v); }},
      {"interp_fraction", [](auto& c, auto& k, auto& v) { c.interp_fraction = to_double(k, v); }},
      {"jitter_scale", [](auto& c, auto& k, auto& v) { c.jitter_scale = to_double(k, v); }},
      {"grid_resolution", [](auto& c, auto& k, auto& v) { c.grid_resolution = to_size(k, v); }},
      {"update_mode",
       [](auto& c, auto& k, auto& v) {
         if (v == "gradient") c.update_mode = UpdateMode::gradient;
         else if (v == "sign") c.update_mode = UpdateMode::sign;
         else bad_value(k, v, "gradient or sign");
       }},
      {"pseudo_lr", [](auto& c, auto& k, auto& v) { c.pseudo_lr = to_double(k, v); }},
      {"target_lr", [](auto& c, auto& k, auto& v) { c.target_lr = to_double(k, v); }},
      {"steps", [](auto& c, auto& k, auto& v) { c.steps = to_size(k, v); }},
      {"epochs_per_step", [](auto& c, auto& k, auto& v) { c.epochs_per_step = to_size(k, v); }},
      {"batch_size", [](auto& c, auto& k, auto& v) { c.batch_size = to_size(k, v); }},
      {"eval_every_epoch", [](auto& c, auto& k, auto& v) { c.eval_every_epoch = to_bool(k, v); }},
      {"seeds", [](auto& c, auto& k, auto& v) { c.seeds = to_list<std::uint64_t>(k, v, to_u64); }},
      {"out", [](auto& c, auto&, auto& v) { c.out = v; }},
      {"boundary_resolution",
       [](auto& c, auto& k, auto& v) { c.boundary_resolution = to_size(k, v); }},
      {"grid_margin", [](auto& c, auto& k, auto& v) { c.grid_margin = to_double(k, v); }},
  };
  return table;
}

template <typename T>
std::string join(const std::vector<T>& items) {
  std::ostringstream out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out << ",";
    out << items[i];
  }
  return out.str();
}

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string join_doubles(const std::vector<double>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ",";
    out += num(items[i]);
  }
  return out;
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const auto& table = setters();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown key '" + key + "'");
  it->second(cfg, key, value);
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_setting(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(buf.str(), base);
}

std::filesystem::path preset_dir() {
  if (const char* env = std::getenv("IMITATION_PRESET_DIR"); env && *env) return env;
  return IMITATION_PRESET_DIR;
}

std::filesystem::path preset_path(const std::string& name) {
  auto p = preset_dir() / (name + ".cfg");
  if (!std::filesystem::exists(p)) throw ConfigError("preset: no preset named '" + name + "' in " +
                                                     preset_dir().string());
  return p;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over (seed, stream).
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double ExperimentConfig::lambda_bar2_for(std::size_t k) const {
  auto it = lambda_bar2_by_labels.find(k);
  return it == lambda_bar2_by_labels.end() ? lambda_bar2 : it->second;
}

double ExperimentConfig::lambda_hat2_for(std::size_t k) const {
  return lambda_hat2 ? *lambda_hat2 : 10.0 * lambda_bar2_for(k);
}

ImitationConfig ExperimentConfig::imitation_config(Strategy s, std::size_t k,
                                                   std::uint64_t seed) const {
  ImitationConfig ic;
  ic.lambda1 = lambda1;
  ic.lambda_bar2 = lambda_bar2_for(k);
  ic.lambda_hat2 = lambda_hat2_for(k);
  ic.fidelity_enabled = s == Strategy::imitation_opt_fid;
  ic.pseudo_optimize_enabled = s == Strategy::imitation_opt || s == Strategy::imitation_opt_fid;
  ic.update_mode = update_mode;
  ic.pseudo_lr = pseudo_lr;
  ic.target_lr = target_lr;
  ic.steps = steps;
  ic.epochs_per_step = epochs_per_step;
  ic.batch_size = batch_size;
  ic.seed = derive_seed(seed, 3);
  ic.eval_every_epoch = eval_every_epoch;
  return ic;
}

std::vector<RbfKernel> ExperimentConfig::gp_grid(const Matrix& labeled_features) const {
  return hyper_grid(labeled_features, gp_lengthscale_factors, gp_variances);
}

std::filesystem::path ExperimentConfig::resolve(const std::filesystem::path& p) const {
  if (p.empty() || p.is_absolute()) return p;
  return base_dir / p;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError(field + ": " + why);
  };
  if (dataset.empty()) fail("dataset", "required (banana or idx)");
  if (dataset == "banana" && banana_path.empty()) fail("banana_path", "required for dataset = banana");
  if (dataset == "idx") {
    if (train_images.empty()) fail("train_images", "required for dataset = idx");
    if (train_labels.empty()) fail("train_labels", "required for dataset = idx");
    if (test_images.empty()) fail("test_images", "required for dataset = idx");
    if (test_labels.empty()) fail("test_labels", "required for dataset = idx");
  }
  if (strategies.empty()) fail("strategy", "required (at least one strategy)");
  if (seeds.empty()) fail("seeds", "required (at least one seed)");
  if (labels_per_class.empty()) fail("labels_per_class", "must be non-empty");
  for (auto k : labels_per_class)
    if (k == 0) fail("labels_per_class", "entries must be >= 1");
  for (auto h : hidden)
    if (h == 0) fail("hidden", "layer widths must be >= 1");
  if (!(gp_noise > 0.0)) fail("gp_noise", "must be > 0");
  const std::size_t grid_size = gp_lengthscale_factors.size() * gp_variances.size();
  if (gp_top_k == 0 || gp_top_k > grid_size)
    fail("gp_top_k", "must be in [1, " + std::to_string(grid_size) + "]");
  for (double f : gp_lengthscale_factors)
    if (!(f > 0.0)) fail("gp_lengthscale_factors", "entries must be > 0");
  for (double v : gp_variances)
    if (!(v > 0.0)) fail("gp_variances", "entries must be > 0");
  if (!(lambda1 >= 0.0)) fail("lambda1", "must be >= 0");
  for (auto k : labels_per_class) {
    if (!(lambda_bar2_for(k) > 0.0)) fail("lambda_bar2", "must be > 0");
    if (!(lambda_hat2_for(k) >= lambda_bar2_for(k))) fail("lambda_hat2", "must be >= lambda_bar2");
  }
  if (pseudo_count == 0) fail("pseudo_count", "must be >= 1");
  if (!(interp_fraction >= 0.0 && interp_fraction <= 1.0)) fail("interp_fraction", "must be in [0,1]");
  if (!(jitter_scale >= 0.0)) fail("jitter_scale", "must be >= 0");
  if (grid_resolution < 2) fail("grid_resolution", "must be >= 2");
  if (pseudo_init == PseudoInit::grid && dataset != "banana")
    fail("pseudo_init", "grid initialization needs the 2-d banana dataset");
  if (!(pseudo_lr > 0.0)) fail("pseudo_lr", "must be > 0");
  if (!(target_lr > 0.0)) fail("target_lr", "must be > 0");
  if (steps == 0) fail("steps", "must be >= 1");
  if (epochs_per_step == 0) fail("epochs_per_step", "must be >= 1");
  if (batch_size == 0) fail("batch_size", "must be >= 1");
  if (boundary_resolution < 2) fail("boundary_resolution", "must be >= 2");
  if (!(grid_margin >= 0.0)) fail("grid_margin", "must be >= 0");
  if (out.empty()) fail("out", "must be non-empty");
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream o;
  std::vector<std::string> strat;
  for (auto s : strategies) strat.push_back(to_string(s));
  o << "dataset = " << dataset << "\n";
  if (dataset == "banana") o << "banana_path = " << resolve(banana_path).string() << "\n";
  if (dataset == "idx") {
    o << "train_images = " << resolve(train_images).string() << "\n";
    o << "train_labels = " << resolve(train_labels).string() << "\n";
    o << "test_images = " << resolve(test_images).string() << "\n";
    o << "test_labels = " << resolve(test_labels).string() << "\n";
  }
  o << "embed_dim = " << embed_dim << "\n";
  o << "embed_seed = " << embed_seed << "\n";
  o << "labels_per_class = " << join(labels_per_class) << "\n";
  o << "strategy = " << join(strat) << "\n";
  o << "hidden = " << (hidden.empty() ? std::string("none") : join(hidden)) << "\n";
  o << "gp_mode = " << (gp_mode == GpMode::regression ? "regression" : "laplace") << "\n";
  o << "gp_noise = " << num(gp_noise) << "\n";
  o << "gp_top_k = " << gp_top_k << "\n";
  o << "gp_lengthscale_factors = " << join_doubles(gp_lengthscale_factors) << "\n";
  o << "gp_variances = " << join_doubles(gp_variances) << "\n";
  o << "lambda1 = " << num(lambda1) << "\n";
  o << "lambda_bar2 = " << num(lambda_bar2) << "\n";
  o << "lambda_hat2 = " << num(lambda_hat2 ? *lambda_hat2 : 10.0 * lambda_bar2) << "\n";
  o << "lambda_bar2_by_labels = ";
  if (lambda_bar2_by_labels.empty()) {
    o << "none";
  } else {
    bool first = true;
    for (const auto& [k, v] : lambda_bar2_by_labels) {
      o << (first ? "" : ",") << k << ":" << num(v);
      first = false;
    }
  }
  o << "\n";
  for (auto k : labels_per_class) {
    o << "# labels_per_class " << k << ": lambda_bar2 = " << num(lambda_bar2_for(k))
      << ", lambda_hat2 = " << num(lambda_hat2_for(k)) << "\n";
  }
  o << "pseudo_init = " << (pseudo_init == PseudoInit::interp ? "interp" : "grid") << "\n";
  o << "pseudo_count = " << pseudo_count << "\n";
  o << "interp_fraction = " << num(interp_fraction) << "\n";
  o << "jitter_scale = " << num(jitter_scale) << "\n";
  o << "grid_resolution = " << grid_resolution << "\n";
  o << "update_mode = " << (update_mode == UpdateMode::gradient ? "gradient" : "sign") << "\n";
  o << "pseudo_lr = " << num(pseudo_lr) << "\n";
  o << "target_lr = " << num(target_lr) << "\n";
  o << "steps = " << steps << "\n";
  o << "epochs_per_step = " << epochs_per_step << "\n";
  o << "batch_size = " << batch_size << "\n";
  o << "eval_every_epoch = " << (eval_every_epoch ? "true" : "false") << "\n";
  o << "seeds = " << join(seeds) << "\n";
  o << "out = " << out.string() << "\n";
  o << "boundary_resolution = " << boundary_resolution << "\n";
  o << "grid_margin = " << num(grid_margin) << "\n";
  return o.str();
}

}  // namespace imitation::cli

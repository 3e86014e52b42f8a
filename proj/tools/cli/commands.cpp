#include "commands.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "imitation/errors.hpp"
#include "imitation/imitation.hpp"
#include "imitation/pseudo.hpp"

namespace imitation::cli {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kStreamNetInit = 1;
constexpr std::uint64_t kStreamPseudoInit = 2;

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::vector<std::size_t> net_dims(const ExperimentConfig& cfg, std::size_t in, std::size_t classes) {
  std::vector<std::size_t> dims{in};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(classes);
  return dims;
}

nlohmann::json config_json(const ExperimentConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  std::istringstream in(cfg.to_text());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    j[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return j;
}

void write_manifest(const fs::path& dir, const std::string& command, const ExperimentConfig& cfg,
                    std::vector<fs::path>& files) {
  nlohmann::json m;
  m["command"] = command;
  m["config"] = config_json(cfg);
  nlohmann::json list = nlohmann::json::array();
  for (const auto& f : files) list.push_back(fs::relative(f, dir).generic_string());
  m["files"] = list;
  const fs::path path = dir / "manifest.json";
  auto out = open_out(path);
  out << m.dump(2) << "\n";
  files.push_back(path);
}

bool needs_reference(Strategy s) { return s != Strategy::nn; }

struct SeedContext {
  Split split;
  const Dataset* fixed_test = nullptr;
  std::optional<GpEnsemble> reference;

  const Dataset& test() const { return fixed_test ? *fixed_test : split.rest; }
};

Matrix initial_pseudo(const ExperimentConfig& cfg, const ExperimentData& data, const Dataset& labeled,
                      std::uint64_t seed) {
  if (cfg.pseudo_init == PseudoInit::grid) {
    if (!data.base2d) throw ConfigError("pseudo_init: grid needs a 2-d base dataset");
    const auto b = bounding_box(data.base2d->features, cfg.grid_margin);
    const double bounds[4] = {b.xmin, b.xmax, b.ymin, b.ymax};
    return data.embedding.apply(dense_grid_pseudo(bounds, cfg.grid_resolution));
  }
  return init_pseudo(labeled, cfg.pseudo_count, cfg.interp_fraction, cfg.jitter_scale,
                     derive_seed(seed, kStreamPseudoInit));
}

struct TrainedRun {
  double accuracy = 0.0;
  std::optional<TrainResult> result;
};

TrainedRun run_strategy(const ExperimentConfig& cfg, const ExperimentData& data,
                        const SeedContext& ctx, Strategy s, std::size_t k, std::uint64_t seed,
                        const StepObserver& observer = {}) {
  TrainedRun out;
  if (s == Strategy::gp) {
    out.accuracy = accuracy(*ctx.reference, ctx.test());
    return out;
  }
  const Dataset& labeled = ctx.split.labeled;
  const auto dims = net_dims(cfg, labeled.dim(), labeled.class_count);
  Mlp net = init_weights(dims, derive_seed(seed, kStreamNetInit));
  const ImitationConfig ic = cfg.imitation_config(s, k, seed);
  Matrix pseudo = s == Strategy::nn ? Matrix(0, labeled.dim())
                                    : initial_pseudo(cfg, data, labeled, seed);
  const GpEnsemble* ref = ctx.reference ? &*ctx.reference : nullptr;
  out.result = train(labeled, s == Strategy::nn ? nullptr : ref, std::move(net), ic, pseudo,
                     &ctx.test(), observer);
  out.accuracy = accuracy(out.result->net, ctx.test());
  return out;
}

SeedContext prepare_seed(const ExperimentConfig& cfg, const ExperimentData& data, std::size_t k,
                         std::uint64_t seed, bool with_reference) {
  SeedContext ctx;
  ctx.split = few_shot_split(data.train, k, seed);
  ctx.fixed_test = data.test ? &*data.test : nullptr;
  if (with_reference) {
    const auto grid = cfg.gp_grid(ctx.split.labeled.features);
    ctx.reference = fit_ensemble(ctx.split.labeled, grid, cfg.gp_mode, cfg.gp_noise, cfg.gp_top_k);
  }
  return ctx;
}

void append_report(std::ostream& out, std::uint64_t seed, Strategy s, std::size_t k,
                   const TrainReport& report) {
  std::ostringstream body;
  write_report_csv(report, body);
  std::istringstream lines(body.str());
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) out << seed << ',' << to_string(s) << ',' << k << ',' << line << '\n';
}

}  // namespace

ExperimentData load_experiment_data(const ExperimentConfig& cfg) {
  ExperimentData data;
  if (cfg.dataset == "banana") {
    Dataset base = load_banana(cfg.resolve(cfg.banana_path));
    if (cfg.embed_dim > 0) {
      auto [embedded, map] = random_embed(base, cfg.embed_dim, cfg.embed_seed);
      data.train = std::move(embedded);
      data.embedding = std::move(map);
    } else {
      data.train = base;
      data.embedding = EmbeddingMap::identity(base.dim());
    }
    data.base2d = std::move(base);
  } else if (cfg.dataset == "idx") {
    data.train = load_idx(cfg.resolve(cfg.train_images), cfg.resolve(cfg.train_labels));
    data.test = load_idx(cfg.resolve(cfg.test_images), cfg.resolve(cfg.test_labels));
    if (cfg.embed_dim > 0) {
      auto [embedded, map] = random_embed(data.train, cfg.embed_dim, cfg.embed_seed);
      data.train = std::move(embedded);
      data.test = embed(*data.test, map);
      data.embedding = std::move(map);
    } else {
      data.embedding = EmbeddingMap::identity(data.train.dim());
    }
  } else {
    throw ConfigError("dataset: unknown dataset '" + cfg.dataset + "'");
  }
  return data;
}

RunResult cmd_run(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  const ExperimentData data = load_experiment_data(cfg);
  fs::create_directories(cfg.out);

  RunResult result;
  const fs::path report_path = cfg.out / "report.csv";
  auto report_out = open_out(report_path);
  report_out << "seed,strategy,labels_per_class,step,epoch,hard_loss,soft_loss,current_size,test_accuracy\n";

  bool any_reference = false;
  for (auto s : cfg.strategies) any_reference = any_reference || needs_reference(s);

  for (std::size_t k : cfg.labels_per_class) {
    for (std::uint64_t seed : cfg.seeds) {
      const SeedContext ctx = prepare_seed(cfg, data, k, seed, any_reference);
      for (Strategy s : cfg.strategies) {
        const auto t0 = std::chrono::steady_clock::now();
        TrainedRun run = run_strategy(cfg, data, ctx, s, k, seed);
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.rows.push_back({seed, s, k, run.accuracy});
        if (run.result) append_report(report_out, seed, s, k, run.result->report);
        log << "[run] labels/class " << k << " seed " << seed << " " << to_string(s)
            << ": accuracy " << fmt("%.4f", run.accuracy) << " (" << fmt("%.1f", secs) << " s)\n";
        log.flush();
      }
    }
  }
  report_out.close();

  const fs::path runs_path = cfg.out / "runs.csv";
  {
    auto out = open_out(runs_path);
    out << "seed,strategy,labels_per_class,accuracy\n";
    for (const auto& r : result.rows) {
      out << r.seed << ',' << to_string(r.strategy) << ',' << r.labels_per_class << ','
          << fmt("%.17g", r.accuracy) << '\n';
    }
  }

  // Aggregates follow the declared strategy and labels order.
  const fs::path agg_path = cfg.out / "aggregate.csv";
  const fs::path table_path = cfg.out / "table1.csv";
  std::map<std::pair<Strategy, std::size_t>, std::vector<double>> groups;
  for (const auto& r : result.rows) groups[{r.strategy, r.labels_per_class}].push_back(r.accuracy);
  {
    auto agg = open_out(agg_path);
    agg << "strategy,labels_per_class,seeds,mean_accuracy,std_accuracy\n";
    auto table = open_out(table_path);
    table << "strategy";
    const std::size_t classes = data.train.class_count;
    for (auto k : cfg.labels_per_class) table << ',' << k * classes;
    table << '\n';
    for (Strategy s : cfg.strategies) {
      table << to_string(s);
      for (std::size_t k : cfg.labels_per_class) {
        const auto& acc = groups.at({s, k});
        double mean = 0.0;
        for (double a : acc) mean += a;
        mean /= static_cast<double>(acc.size());
        double var = 0.0;
        for (double a : acc) var += (a - mean) * (a - mean);
        const double sd = acc.size() > 1 ? std::sqrt(var / static_cast<double>(acc.size() - 1)) : 0.0;
        agg << to_string(s) << ',' << k << ',' << acc.size() << ',' << fmt("%.17g", mean) << ','
            << fmt("%.17g", sd) << '\n';
        table << ',' << fmt("%.1f", 100.0 * mean);
      }
      table << '\n';
    }
  }
  result.files = {runs_path, agg_path, table_path, report_path};
  write_manifest(cfg.out, "run", cfg, result.files);
  return result;
}

BoundaryResult cmd_boundary(const ExperimentConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.dataset != "banana")
    throw ConfigError("dataset: boundary needs the 2-d banana dataset, got '" + cfg.dataset + "'");
  const ExperimentData data = load_experiment_data(cfg);
  if (!data.base2d || data.base2d->dim() != 2)
    throw DataError("boundary: base dataset is not 2-d");

  const Strategy strategy = cfg.strategies.front();
  const std::size_t k = cfg.labels_per_class.front();
  const auto box = bounding_box(data.base2d->features, cfg.grid_margin);
  const Matrix grid2d = make_grid(box.xmin, box.xmax, box.ymin, box.ymax, cfg.boundary_resolution);
  const Matrix grid = data.embedding.apply(grid2d);

  BoundaryResult result;
  fs::create_directories(cfg.out);
  for (std::uint64_t seed : cfg.seeds) {
    const fs::path dir = cfg.seeds.size() == 1 ? cfg.out : cfg.out / ("seed" + std::to_string(seed));
    fs::create_directories(dir);
    const auto t0 = std::chrono::steady_clock::now();
    const SeedContext ctx = prepare_seed(cfg, data, k, seed, true);

    {
      const fs::path p = dir / "points.csv";
      auto out = open_out(p);
      out << "x,y,label,labeled\n";
      std::vector<bool> labeled(data.train.size(), false);
      for (auto i : ctx.split.labeled_indices) labeled[i] = true;
      for (std::size_t i = 0; i < data.base2d->size(); ++i) {
        out << fmt("%.10g", data.base2d->features(i, 0)) << ','
            << fmt("%.10g", data.base2d->features(i, 1)) << ',' << data.base2d->labels[i] << ','
            << (labeled[i] ? 1 : 0) << '\n';
      }
      result.files.push_back(p);
    }

    const RefBatch ref = ctx.reference->predict_batch(grid);
    auto write_grid = [&](const fs::path& p, const Matrix& probs) {
      auto out = open_out(p);
      out << "x,y,p_class1\n";
      for (std::size_t i = 0; i < grid2d.rows(); ++i) {
        out << fmt("%.10g", grid2d(i, 0)) << ',' << fmt("%.10g", grid2d(i, 1)) << ','
            << fmt("%.10g", probs(i, 1)) << '\n';
      }
      result.files.push_back(p);
    };
    write_grid(dir / "grid_reference.csv", ref.probs);

    BoundarySeedResult seed_result{seed, 1.0, dir};
    if (strategy != Strategy::gp) {
      StepObserver observer = [&](std::size_t step, const PseudoSets& sets) {
        const fs::path p = dir / ("pseudo_step" + std::to_string(step) + ".csv");
        auto out = open_out(p);
        write_pseudo_snapshot_csv(step, data.embedding.project_back(stack_points(sets.current)),
                                  sets.current, out);
        result.files.push_back(p);
      };
      TrainedRun run = run_strategy(cfg, data, ctx, strategy, k, seed, observer);
      const Matrix target = softmax_rows(predict_logits(run.result->net, grid));
      write_grid(dir / "grid_target.csv", target);
      std::size_t agree = 0;
      for (std::size_t i = 0; i < grid.rows(); ++i)
        if (argmax(target.row(i)) == argmax(ref.probs.row(i))) ++agree;
      seed_result.argmax_agreement = static_cast<double>(agree) / static_cast<double>(grid.rows());
      const fs::path rp = dir / "report.csv";
      auto out = open_out(rp);
      write_report_csv(run.result->report, out);
      result.files.push_back(rp);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log << "[boundary] seed " << seed << " " << to_string(strategy) << ": grid argmax agreement "
        << fmt("%.4f", seed_result.argmax_agreement) << " (" << fmt("%.1f", secs) << " s)\n";
    log.flush();
    result.seeds.push_back(seed_result);
  }
  {
    const fs::path p = cfg.out / "agreement.csv";
    auto out = open_out(p);
    out << "seed,argmax_agreement\n";
    for (const auto& s : result.seeds) out << s.seed << ',' << fmt("%.17g", s.argmax_agreement) << '\n';
    result.files.push_back(p);
  }
  write_manifest(cfg.out, "boundary", cfg, result.files);
  return result;
}

int cmd_validate(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  try {
    if (!fs::exists(config_path)) {
      err << "error: config file " << config_path.string() << " does not exist\n";
      return kExitConfig;
    }
    ExperimentConfig cfg = load_config(config_path);
    cfg.validate();
    out << cfg.to_text();
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "error: " << config_path.string() << ": " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace imitation::cli

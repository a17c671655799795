#include "tart/commands.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "tart/attack.hpp"
#include "tart/dataset.hpp"
#include "tart/eval.hpp"
#include "tart/hash.hpp"
#include "tart/io.hpp"
#include "tart/network.hpp"
#include "tart/rng.hpp"
#include "tart/trainer.hpp"

namespace tart::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

std::string join_u64(const std::vector<std::uint64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::string join_index(const std::vector<Index>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::string join_schedule(const std::vector<std::pair<int, double>>& v) {
  if (v.empty()) return "none";
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i].first) + ':' + format_double(v[i].second);
  }
  return s;
}

std::string resolve_out_dir(const config::Document& cfg, const std::string& override_dir) {
  std::string dir = !override_dir.empty() ? override_dir : cfg.get_string("output", "dir", "");
  if (dir.empty()) throw ConfigError("no output directory (config output.dir or --out)");
  return dir;
}

json config_json(const config::Document& doc) {
  json out = json::object();
  for (const auto& [section, entries] : doc.items()) {
    json sec = json::object();
    for (const auto& [k, v] : entries) sec[k] = v;
    out[section] = sec;
  }
  return out;
}

trainer::RuleKind rule_from_name(const std::string& name) {
  if (name == "median") return trainer::RuleKind::MedianSplit;
  if (name == "quartile") return trainer::RuleKind::QuartileSplit;
  throw ConfigError("unknown assignment rule: " + name + " (expected median or quartile)");
}

std::string rule_name(trainer::RuleKind kind) {
  return kind == trainer::RuleKind::MedianSplit ? "median" : "quartile";
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

const std::map<std::string, std::set<std::string>> kHemisphereSchema = {
    {"dataset",
     {"kind", "ambient_dim", "num_classes", "train_size", "test_size", "seed"}},
    {"output", {"dir"}},
};

const std::map<std::string, std::set<std::string>> kCirclesSchema = {
    {"dataset",
     {"kind", "per_class", "test_per_class", "radius_inner", "radius_outer", "gap",
      "noise_std", "seed"}},
    {"output", {"dir"}},
};

}  // namespace

GenDataResult cmd_gen_data(const config::Document& cfg, const std::string& out_dir_override) {
  const std::string kind = cfg.get_string("dataset", "kind");
  config::Document echo;
  dataset::Dataset train, test;
  if (kind == "hemisphere") {
    cfg.check_known(kHemisphereSchema);
    dataset::HemisphereConfig hc;
    hc.ambient_dim = static_cast<Index>(cfg.get_int("dataset", "ambient_dim", hc.ambient_dim));
    hc.num_classes = static_cast<int>(cfg.get_int("dataset", "num_classes", hc.num_classes));
    hc.train_size = static_cast<Index>(cfg.get_int("dataset", "train_size", hc.train_size));
    hc.test_size = static_cast<Index>(cfg.get_int("dataset", "test_size", hc.test_size));
    hc.seed = cfg.get_u64("dataset", "seed", hc.seed);
    auto sample = dataset::sample_hemisphere(hc);
    train = std::move(sample.train);
    test = std::move(sample.test);
    echo.set("dataset", "kind", "hemisphere");
    echo.set("dataset", "ambient_dim", std::to_string(hc.ambient_dim));
    echo.set("dataset", "num_classes", std::to_string(hc.num_classes));
    echo.set("dataset", "train_size", std::to_string(hc.train_size));
    echo.set("dataset", "test_size", std::to_string(hc.test_size));
    echo.set("dataset", "seed", std::to_string(hc.seed));
  } else if (kind == "circles") {
    cfg.check_known(kCirclesSchema);
    dataset::CirclesConfig cc;
    cc.per_class = static_cast<Index>(cfg.get_int("dataset", "per_class", cc.per_class));
    Index test_per_class =
        static_cast<Index>(cfg.get_int("dataset", "test_per_class", cc.per_class));
    cc.radius_inner = cfg.get_double("dataset", "radius_inner", cc.radius_inner);
    cc.radius_outer = cfg.get_double("dataset", "radius_outer", cc.radius_outer);
    cc.gap = cfg.get_double("dataset", "gap", cc.gap);
    cc.noise_std = cfg.get_double("dataset", "noise_std", cc.noise_std);
    cc.seed = cfg.get_u64("dataset", "seed", cc.seed);
    dataset::CirclesConfig train_cfg = cc;
    train_cfg.seed = derive_seed(cc.seed, kStreamTrainSplit);
    dataset::CirclesConfig test_cfg = cc;
    test_cfg.per_class = test_per_class;
    test_cfg.seed = derive_seed(cc.seed, kStreamTestSplit);
    train = dataset::sample_concentric_circles(train_cfg);
    test = dataset::sample_concentric_circles(test_cfg);
    echo.set("dataset", "kind", "circles");
    echo.set("dataset", "per_class", std::to_string(cc.per_class));
    echo.set("dataset", "test_per_class", std::to_string(test_per_class));
    echo.set("dataset", "radius_inner", format_double(cc.radius_inner));
    echo.set("dataset", "radius_outer", format_double(cc.radius_outer));
    echo.set("dataset", "gap", format_double(cc.gap));
    echo.set("dataset", "noise_std", format_double(cc.noise_std));
    echo.set("dataset", "seed", std::to_string(cc.seed));
  } else {
    throw ConfigError("dataset.kind must be hemisphere or circles, got '" + kind + "'");
  }

  const std::string out_dir = resolve_out_dir(cfg, out_dir_override);
  ensure_dir(out_dir);
  echo.set("output", "dir", out_dir);

  GenDataResult result;
  result.train_path = (fs::path(out_dir) / "train.tads").string();
  result.test_path = (fs::path(out_dir) / "test.tads").string();
  dataset::save_dataset(train, result.train_path);
  dataset::save_dataset(test, result.test_path);
  write_text((fs::path(out_dir) / "config_resolved.ini").string(), echo.serialize());

  result.class_histogram.assign(static_cast<std::size_t>(train.num_classes), 0);
  for (int label : train.labels) ++result.class_histogram[static_cast<std::size_t>(label)];
  std::cout << "wrote " << result.train_path << " (n=" << train.size() << ", d=" << train.dim()
            << ", c=" << train.num_classes << ")\n";
  std::cout << "wrote " << result.test_path << " (n=" << test.size() << ")\n";
  std::cout << "train class histogram:";
  for (Index count : result.class_histogram) std::cout << ' ' << count;
  std::cout << '\n';
  return result;
}

// ---------------------------------------------------------------------------
// train-ae
// ---------------------------------------------------------------------------

namespace {
const std::map<std::string, std::set<std::string>> kAeSchema = {
    {"ae",
     {"data", "latent_dim", "hidden", "epochs", "batch_size", "lr", "momentum",
      "weight_decay", "schedule", "seed"}},
    {"output", {"dir"}},
};
}  // namespace

std::string cmd_train_ae(const config::Document& cfg, const std::string& out_dir_override) {
  cfg.check_known(kAeSchema);
  const std::string data_path = cfg.get_string("ae", "data");
  const Index latent = static_cast<Index>(cfg.get_int("ae", "latent_dim"));
  const std::vector<Index> hidden = cfg.get_index_list("ae", "hidden", {64});
  const int epochs = static_cast<int>(cfg.get_int("ae", "epochs", 200));
  const Index batch = static_cast<Index>(cfg.get_int("ae", "batch_size", 128));
  network::SgdState opt;
  opt.learning_rate = cfg.get_double("ae", "lr", 0.01);
  opt.momentum = cfg.get_double("ae", "momentum", 0.9);
  opt.weight_decay = cfg.get_double("ae", "weight_decay", 0.0);
  opt.schedule = cfg.get_schedule("ae", "schedule", {});
  const std::uint64_t seed = cfg.get_u64("ae", "seed", 1);

  dataset::Dataset data = dataset::load_dataset(data_path);
  auto result = network::train_autoencoder(data.x, latent, hidden, epochs, batch, opt, seed);

  const std::string out_dir = resolve_out_dir(cfg, out_dir_override);
  ensure_dir(out_dir);
  const std::string ckpt = (fs::path(out_dir) / "ae.tamd").string();
  network::save_autoencoder(result.ae, ckpt);

  config::Document echo;
  echo.set("ae", "data", data_path);
  echo.set("ae", "latent_dim", std::to_string(latent));
  echo.set("ae", "hidden", join_index(hidden));
  echo.set("ae", "epochs", std::to_string(epochs));
  echo.set("ae", "batch_size", std::to_string(batch));
  echo.set("ae", "lr", format_double(opt.learning_rate));
  echo.set("ae", "momentum", format_double(opt.momentum));
  echo.set("ae", "weight_decay", format_double(opt.weight_decay));
  echo.set("ae", "schedule", join_schedule(opt.schedule));
  echo.set("ae", "seed", std::to_string(seed));
  echo.set("output", "dir", out_dir);
  write_text((fs::path(out_dir) / "config_resolved.ini").string(), echo.serialize());

  std::ofstream trace((fs::path(out_dir) / "ae_loss.csv").string());
  trace << "epoch,loss\n";
  for (std::size_t e = 0; e < result.loss_trace.size(); ++e)
    write_csv_row(trace, {std::to_string(e), format_double(result.loss_trace[e])});

  std::cout << "wrote " << ckpt << " (latent=" << latent
            << ", final reconstruction loss=" << format_double(result.loss_trace.back())
            << ")\n";
  return ckpt;
}

// ---------------------------------------------------------------------------
// build-cache
// ---------------------------------------------------------------------------

void cmd_build_cache(const BuildCacheOptions& opts) {
  dataset::Dataset data = dataset::load_dataset(opts.data_path);
  const Digest hash = sha256_file(opts.data_path);
  tangent::TangentCache cache;
  if (opts.mode == "exact") {
    cache = tangent::build_cache_exact(data, hash);
  } else if (opts.mode == "ae") {
    if (opts.ae_path.empty()) throw ConfigError("build-cache mode ae requires --ae checkpoint");
    network::Autoencoder ae = network::load_autoencoder(opts.ae_path);
    cache = tangent::build_cache_autoencoder(data, ae, opts.spec, hash);
  } else {
    throw ConfigError("build-cache mode must be exact or ae, got '" + opts.mode + "'");
  }
  tangent::save_cache(cache, opts.out_path);
  std::cout << "wrote " << opts.out_path << " (n=" << cache.size() << ", d=" << cache.d
            << ", k=" << cache.k << ", source="
            << (cache.source == tangent::CacheSource::Exact ? "exact" : "estimated") << ")\n";

  // When the dataset carries ground-truth bases we can grade the cache:
  // largest principal angle between each entry and the exact tangent plane.
  if (data.has_tangents() && cache.k == data.tangents.front().cols()) {
    double sum = 0.0, worst = 0.0;
    for (Index i = 0; i < data.size(); ++i) {
      auto angles = linalg::principal_angles(cache.entries[static_cast<std::size_t>(i)].basis,
                                             data.tangents[static_cast<std::size_t>(i)]);
      double largest = angles.back();
      sum += largest;
      worst = std::max(worst, largest);
    }
    double mean_deg = sum / static_cast<double>(data.size()) * 180.0 / EIGEN_PI;
    std::cout << "principal angle vs exact tangents: mean "
              << format_double(mean_deg) << " deg, max "
              << format_double(worst * 180.0 / EIGEN_PI) << " deg\n";
  }
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

namespace {

const std::map<std::string, std::set<std::string>> kTrainSchema = {
    {"model", {"hidden"}},
    {"optimizer", {"lr", "momentum", "weight_decay", "schedule", "batch_size"}},
    {"attack", {"epsilon", "train_preset", "eval_preset"}},
    {"train",
     {"method", "rule", "epochs", "eval_robust_every", "seeds", "data", "test_data", "cache"}},
    {"output", {"dir"}},
};

struct ResolvedTrain {
  trainer::TrainConfig base;
  std::vector<std::uint64_t> seeds;
  std::string data_path;
  std::string test_path;
  std::string cache_path;
};

ResolvedTrain resolve_train(const config::Document& cfg) {
  cfg.check_known(kTrainSchema);
  ResolvedTrain r;
  r.base.hidden = cfg.get_index_list("model", "hidden", {128, 128});
  r.base.optimizer.learning_rate = cfg.get_double("optimizer", "lr", 0.1);
  r.base.optimizer.momentum = cfg.get_double("optimizer", "momentum", 0.9);
  r.base.optimizer.weight_decay = cfg.get_double("optimizer", "weight_decay", 0.0002);
  r.base.optimizer.schedule =
      cfg.get_schedule("optimizer", "schedule", {{30, 10.0}, {45, 10.0}});
  r.base.batch_size = static_cast<Index>(cfg.get_int("optimizer", "batch_size", 128));
  r.base.eps_max = cfg.get_double("attack", "epsilon");
  r.base.train_preset = cfg.get_string("attack", "train_preset", "train-pgd10");
  r.base.eval_preset = cfg.get_string("attack", "eval_preset", "eval-pgd20");
  r.base.method = trainer::method_from_name(cfg.get_string("train", "method"));
  r.base.rule = rule_from_name(cfg.get_string("train", "rule", "quartile"));
  r.base.epochs = static_cast<int>(cfg.get_int("train", "epochs", 50));
  r.base.eval_robust_every =
      static_cast<int>(cfg.get_int("train", "eval_robust_every", 0));
  r.seeds = cfg.get_u64_list("train", "seeds");
  if (r.seeds.empty()) throw ConfigError("train.seeds must list at least one seed");
  r.data_path = cfg.get_string("train", "data");
  r.test_path = cfg.get_string("train", "test_data");
  r.cache_path = cfg.get_string("train", "cache", "");
  const bool needs_cache = r.base.method == trainer::Method::Tart ||
                           r.base.method == trainer::Method::ReverseTart;
  if (needs_cache && r.cache_path.empty())
    throw ConfigError("train.cache is required for tart and reverse-tart");
  return r;
}

config::Document echo_train(const ResolvedTrain& r, const std::string& out_dir) {
  config::Document echo;
  echo.set("model", "hidden", join_index(r.base.hidden));
  echo.set("optimizer", "lr", format_double(r.base.optimizer.learning_rate));
  echo.set("optimizer", "momentum", format_double(r.base.optimizer.momentum));
  echo.set("optimizer", "weight_decay", format_double(r.base.optimizer.weight_decay));
  echo.set("optimizer", "schedule", join_schedule(r.base.optimizer.schedule));
  echo.set("optimizer", "batch_size", std::to_string(r.base.batch_size));
  echo.set("attack", "epsilon", format_double(r.base.eps_max));
  echo.set("attack", "train_preset", r.base.train_preset);
  echo.set("attack", "eval_preset", r.base.eval_preset);
  echo.set("train", "method", trainer::method_name(r.base.method));
  echo.set("train", "rule", rule_name(r.base.rule));
  echo.set("train", "epochs", std::to_string(r.base.epochs));
  echo.set("train", "eval_robust_every", std::to_string(r.base.eval_robust_every));
  echo.set("train", "seeds", join_u64(r.seeds));
  echo.set("train", "data", r.data_path);
  echo.set("train", "test_data", r.test_path);
  if (!r.cache_path.empty()) echo.set("train", "cache", r.cache_path);
  echo.set("output", "dir", out_dir);
  return echo;
}

}  // namespace

std::string cmd_train(const config::Document& cfg, const std::string& out_dir_override) {
  ResolvedTrain r = resolve_train(cfg);
  const std::string out_dir = resolve_out_dir(cfg, out_dir_override);
  ensure_dir(out_dir);
  config::Document echo = echo_train(r, out_dir);
  write_text((fs::path(out_dir) / "config_resolved.ini").string(), echo.serialize());

  dataset::Dataset train_data = dataset::load_dataset(r.data_path);
  dataset::Dataset test_data = dataset::load_dataset(r.test_path);

  tangent::TangentCache cache;
  const tangent::TangentCache* cache_ptr = nullptr;
  if (!r.cache_path.empty()) {
    cache = tangent::load_cache(r.cache_path);
    tangent::require_cache_match(cache, sha256_file(r.data_path), train_data.size());
    cache_ptr = &cache;
  }

  json summary;
  summary["config"] = config_json(echo);
  summary["seeds"] = r.seeds;
  std::vector<double> clean_last, clean_best, robust_final;
  json per_seed = json::array();
  for (std::uint64_t seed : r.seeds) {
    trainer::TrainConfig tc = r.base;
    tc.seed = seed;
    trainer::TrainResult result = trainer::train(train_data, test_data, cache_ptr, tc);

    const std::string seed_dir = (fs::path(out_dir) / ("seed_" + std::to_string(seed))).string();
    ensure_dir(seed_dir);
    trainer::write_metrics_csv(result.metrics, (fs::path(seed_dir) / "metrics.csv").string());
    network::save_mlp(result.final_model, (fs::path(seed_dir) / "model_final.tamd").string());
    network::save_mlp(result.best_model, (fs::path(seed_dir) / "model_best.tamd").string());

    clean_last.push_back(result.final_clean_acc);
    clean_best.push_back(result.best_clean_acc);
    robust_final.push_back(result.final_robust_acc);
    json row;
    row["seed"] = seed;
    row["clean_last"] = result.final_clean_acc;
    row["clean_best"] = result.best_clean_acc;
    row["best_epoch"] = result.best_epoch;
    row["robust"][r.base.eval_preset] = result.final_robust_acc;
    per_seed.push_back(row);
    std::cout << "seed " << seed << ": clean " << format_double(result.final_clean_acc)
              << ", robust " << format_double(result.final_robust_acc) << '\n';
  }
  summary["per_seed"] = per_seed;
  auto put = [&summary](const std::string& key, const eval::MeanStd& ms) {
    summary[key] = {{"mean", ms.mean}, {"std", ms.std}};
  };
  put("clean_last", eval::aggregate(clean_last));
  put("clean_best", eval::aggregate(clean_best));
  summary["robust"][r.base.eval_preset] = {{"mean", eval::aggregate(robust_final).mean},
                                           {"std", eval::aggregate(robust_final).std}};

  const std::string summary_path = (fs::path(out_dir) / "summary.json").string();
  write_text(summary_path, summary.dump(2) + "\n");
  std::cout << "wrote " << summary_path << '\n';
  return summary_path;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

std::string cmd_eval(const EvalOptions& opts) {
  network::Mlp model = network::load_mlp(opts.model_path);
  dataset::Dataset data = dataset::load_dataset(opts.data_path);
  json out;
  out["model"] = opts.model_path;
  out["data"] = opts.data_path;
  out["epsilon"] = opts.epsilon;
  out["seed"] = opts.seed;
  out["clean"] = eval::clean_accuracy(model, data);
  json robust = json::object();
  for (const std::string& name : opts.presets) {
    attack::AttackConfig cfg = attack::preset(name, opts.epsilon);
    robust[name] =
        eval::robust_accuracy(model, data, cfg, derive_seed(opts.seed, kStreamEval));
  }
  out["robust"] = robust;
  std::string text = out.dump(2) + "\n";
  if (!opts.out_path.empty()) write_text(opts.out_path, text);
  std::cout << text;
  return text;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

namespace {

void write_histogram_csv(const std::string& path, const std::vector<double>& values,
                         double lo, double hi, int bins) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "bin_lo,bin_hi,count\n";
  const double width = (hi - lo) / bins;
  std::vector<Index> counts(static_cast<std::size_t>(bins), 0);
  for (double v : values) {
    int b = static_cast<int>((v - lo) / width);
    if (b < 0) b = 0;
    if (b >= bins) b = bins - 1;
    ++counts[static_cast<std::size_t>(b)];
  }
  for (int b = 0; b < bins; ++b)
    write_csv_row(out, {format_double(lo + b * width), format_double(lo + (b + 1) * width),
                        std::to_string(counts[static_cast<std::size_t>(b)])});
}

void write_boundary_slice(const std::string& path, const network::Mlp& model,
                          const dataset::Dataset& data, Index fixed_axis, double fixed_value,
                          Index resolution) {
  // Grid bounds from the data bounding box, padded 20% per free axis.
  std::array<Index, 2> free_axes{};
  Index fi = 0;
  for (Index a = 0; a < 3; ++a)
    if (a != fixed_axis) free_axes[static_cast<std::size_t>(fi++)] = a;
  std::array<double, 2> lo{}, hi{};
  for (std::size_t i = 0; i < 2; ++i) {
    Index a = free_axes[i];
    double mn = data.x.col(a).minCoeff();
    double mx = data.x.col(a).maxCoeff();
    double pad = 0.2 * (mx - mn);
    lo[i] = mn - pad;
    hi[i] = mx + pad;
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "x1,x2,x3,pred\n";
  Matrix grid(resolution * resolution, 3);
  Index row = 0;
  for (Index i = 0; i < resolution; ++i) {
    double u = lo[0] + (hi[0] - lo[0]) * (resolution == 1 ? 0.5 : i / double(resolution - 1));
    for (Index j = 0; j < resolution; ++j) {
      double v = lo[1] + (hi[1] - lo[1]) * (resolution == 1 ? 0.5 : j / double(resolution - 1));
      Vector p(3);
      p[fixed_axis] = fixed_value;
      p[free_axes[0]] = u;
      p[free_axes[1]] = v;
      grid.row(row++) = p.transpose();
    }
  }
  Matrix logits = network::forward_batch(model, grid);
  for (Index i = 0; i < grid.rows(); ++i) {
    int best = 0;
    for (int j = 1; j < logits.cols(); ++j)
      if (logits(i, j) > logits(i, best)) best = j;
    write_csv_row(out, {format_double(grid(i, 0)), format_double(grid(i, 1)),
                        format_double(grid(i, 2)), std::to_string(best)});
  }
}

}  // namespace

void cmd_analyze(const AnalyzeOptions& opts) {
  const fs::path run_dir(opts.run_dir);
  const fs::path cfg_path = run_dir / "config_resolved.ini";
  if (!fs::exists(cfg_path))
    throw MissingArtifact("analyze: " + cfg_path.string() + " not found");
  config::Document cfg = config::Document::parse_file(cfg_path.string());
  ResolvedTrain r = resolve_train(cfg);

  const std::uint64_t seed = opts.seed.value_or(r.seeds.front());
  const fs::path seed_dir = run_dir / ("seed_" + std::to_string(seed));
  const fs::path model_path = seed_dir / "model_final.tamd";
  if (!fs::exists(model_path))
    throw MissingArtifact("analyze: " + model_path.string() + " not found");
  network::Mlp model = network::load_mlp(model_path.string());

  const std::string data_path = !opts.data_override.empty() ? opts.data_override : r.data_path;
  dataset::Dataset data = dataset::load_dataset(data_path);

  const std::string cache_path =
      !opts.cache_override.empty() ? opts.cache_override : r.cache_path;

  const fs::path out_dir = run_dir / "analysis" / ("seed_" + std::to_string(seed));
  ensure_dir(out_dir.string());

  json info;
  info["seed"] = seed;
  info["model"] = model_path.string();
  info["data"] = data_path;

  const attack::AttackConfig eval_attack = attack::preset(r.base.eval_preset, r.base.eps_max);

  if (!cache_path.empty()) {
    tangent::TangentCache cache = tangent::load_cache(cache_path);
    tangent::require_cache_match(cache, sha256_file(data_path), data.size());

    // Per-example tangential components and angles under the eval attack.
    std::vector<double> tcs, angles;
    const Index chunk = 256;
    for (Index start = 0; start < data.size(); start += chunk) {
      Index b = std::min(chunk, data.size() - start);
      std::vector<Index> ids(static_cast<std::size_t>(b));
      for (Index i = 0; i < b; ++i) ids[static_cast<std::size_t>(i)] = start + i;
      Matrix xb = data.x.middleRows(start, b);
      std::span<const int> yb(data.labels.data() + start, static_cast<std::size_t>(b));
      Matrix adv = attack::pgd_batch(model, xb, yb, eval_attack,
                                     derive_seed(seed, kStreamEval, std::uint64_t{0xA11A}),
                                     ids);
      for (Index i = 0; i < b; ++i) {
        const auto& entry = cache.entries[static_cast<std::size_t>(start + i)];
        Vector delta = (adv.row(i) - xb.row(i)).transpose();
        if (delta.norm() == 0.0) continue;
        tcs.push_back(tangent::tangential_component_delta(entry, delta));
        angles.push_back(
            tangent::angle_degrees(entry, xb.row(i).transpose(), adv.row(i).transpose()));
      }
    }
    double tc_hi = tcs.empty() ? 1.0 : *std::max_element(tcs.begin(), tcs.end());
    write_histogram_csv((out_dir / "tc_hist.csv").string(), tcs, 0.0,
                        tc_hi > 0.0 ? tc_hi : 1.0, 30);
    write_histogram_csv((out_dir / "angle_hist.csv").string(), angles, 0.0, 90.0, 30);

    const Index batch = std::min<Index>(128, data.size());
    eval::LossTcTable table =
        eval::loss_vs_tc(model, data, cache, eval_attack, 200, batch, seed);
    std::ofstream lt((out_dir / "loss_vs_tc.csv").string());
    lt << "mean_tc,loss\n";
    for (const auto& row : table.rows)
      write_csv_row(lt, {format_double(row.mean_tc), format_double(row.loss)});
    info["loss_tc_correlation"] = table.correlation;
  }

  if (data.dim() == 3) {
    write_boundary_slice((out_dir / "boundary_x3.csv").string(), model, data, 2, opts.slice_x3,
                         opts.resolution);
    write_boundary_slice((out_dir / "boundary_x2.csv").string(), model, data, 1, opts.slice_x2,
                         opts.resolution);
  }

  write_text((out_dir / "analysis.json").string(), info.dump(2) + "\n");
  std::cout << "wrote analysis under " << out_dir.string() << '\n';
}

}  // namespace tart::cli

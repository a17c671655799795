#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tart/config.hpp"
#include "tart/tangent.hpp"
#include "tart/types.hpp"

namespace tart::cli {

/// Generates the configured dataset and writes train.tads / test.tads plus
/// the resolved config echo into the output directory.
struct GenDataResult {
  std::string train_path;
  std::string test_path;
  std::vector<Index> class_histogram;
};
GenDataResult cmd_gen_data(const config::Document& cfg, const std::string& out_dir_override);

/// Trains the reconstruction autoencoder; writes ae.tamd and the config
/// echo. Returns the checkpoint path.
std::string cmd_train_ae(const config::Document& cfg, const std::string& out_dir_override);

struct BuildCacheOptions {
  std::string data_path;
  std::string mode;  // "exact" | "ae"
  std::string ae_path;
  std::string out_path;
  tangent::SamplingSpec spec;
};
void cmd_build_cache(const BuildCacheOptions& opts);

/// Runs every seed in the config, writes per-seed artifacts and the
/// aggregated summary.json. Returns the summary path.
std::string cmd_train(const config::Document& cfg, const std::string& out_dir_override);

struct EvalOptions {
  std::string model_path;
  std::string data_path;
  std::vector<std::string> presets;  // e.g. {"eval-pgd20"}
  double epsilon = 0.0;
  std::uint64_t seed = 1;
  std::string out_path;  // optional JSON destination
};
std::string cmd_eval(const EvalOptions& opts);  // returns the JSON text

struct AnalyzeOptions {
  std::string run_dir;
  std::optional<std::uint64_t> seed;       // defaults to the first configured seed
  std::string data_override;               // train data path
  std::string cache_override;
  Index resolution = 200;                  // boundary grid resolution
  double slice_x3 = 0.85;
  double slice_x2 = 0.0;
};
void cmd_analyze(const AnalyzeOptions& opts);

}  // namespace tart::cli

// tart: tangent-direction guided adversarial training toolkit.
//
// Subcommands: gen-data, train-ae, build-cache, train, eval, analyze.
// Science parameters live in config files; flags only select files and
// subcommands. Exit codes: 0 success, 1 validation error, 2 runtime error.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "tart/commands.hpp"
#include "tart/config.hpp"
#include "tart/types.hpp"

int main(int argc, char** argv) {
  CLI::App app{"tangent-direction guided adversarial training"};
  app.require_subcommand(1);

  std::string config_path, out_path;

  auto* gen = app.add_subcommand("gen-data", "generate a dataset (TADS files)");
  gen->add_option("--config", config_path, "config file with a [dataset] section")->required();
  gen->add_option("--out", out_path, "output directory (overrides output.dir)");

  auto* ae = app.add_subcommand("train-ae", "train the reconstruction autoencoder");
  ae->add_option("--config", config_path, "config file with an [ae] section")->required();
  ae->add_option("--out", out_path, "output directory (overrides output.dir)");

  tart::cli::BuildCacheOptions cache_opts;
  std::string cache_config;
  auto* bc = app.add_subcommand("build-cache", "precompute per-example tangent factors (TATC)");
  bc->add_option("--data", cache_opts.data_path, "dataset file")->required();
  bc->add_option("--mode", cache_opts.mode, "exact | ae")->required();
  bc->add_option("--ae", cache_opts.ae_path, "autoencoder checkpoint (mode ae)");
  bc->add_option("--out", cache_opts.out_path, "cache output path")->required();
  bc->add_option("--config", cache_config, "optional config with a [tangent] section");

  auto* tr = app.add_subcommand("train", "run the configured training for every seed");
  tr->add_option("--config", config_path, "training config file")->required();
  tr->add_option("--out", out_path, "output directory (overrides output.dir)");

  tart::cli::EvalOptions eval_opts;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  ev->add_option("--model", eval_opts.model_path, "TAMD checkpoint")->required();
  ev->add_option("--data", eval_opts.data_path, "TADS dataset")->required();
  ev->add_option("--preset", eval_opts.presets, "attack presets (repeatable)");
  ev->add_option("--epsilon", eval_opts.epsilon, "perturbation bound");
  ev->add_option("--seed", eval_opts.seed, "attack randomness seed");
  ev->add_option("--out", eval_opts.out_path, "write the JSON summary here");

  tart::cli::AnalyzeOptions an_opts;
  std::uint64_t an_seed = 0;
  bool an_seed_set = false;
  auto* an = app.add_subcommand("analyze", "plot-ready CSVs from a finished run");
  an->add_option("--run", an_opts.run_dir, "training output directory")->required();
  an->add_option("--seed", an_seed, "which seed's model to analyze")
      ->each([&an_seed_set](const std::string&) { an_seed_set = true; });
  an->add_option("--data", an_opts.data_override, "override the train dataset path");
  an->add_option("--cache", an_opts.cache_override, "override the tangent cache path");
  an->add_option("--resolution", an_opts.resolution, "boundary grid resolution");
  an->add_option("--slice-x3", an_opts.slice_x3, "x3 value of the first boundary slice");
  an->add_option("--slice-x2", an_opts.slice_x2, "x2 value of the second boundary slice");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) {
      tart::cli::cmd_gen_data(tart::config::Document::parse_file(config_path), out_path);
    } else if (ae->parsed()) {
      tart::cli::cmd_train_ae(tart::config::Document::parse_file(config_path), out_path);
    } else if (bc->parsed()) {
      if (!cache_config.empty()) {
        auto doc = tart::config::Document::parse_file(cache_config);
        doc.check_known({{"tangent", {"samples_per_dim", "latent_spread", "include_center"}}});
        cache_opts.spec.samples_per_dim =
            static_cast<int>(doc.get_int("tangent", "samples_per_dim", 8));
        cache_opts.spec.latent_spread = doc.get_double("tangent", "latent_spread", 0.05);
        cache_opts.spec.include_center = doc.get_bool("tangent", "include_center", true);
      }
      tart::cli::cmd_build_cache(cache_opts);
    } else if (tr->parsed()) {
      tart::cli::cmd_train(tart::config::Document::parse_file(config_path), out_path);
    } else if (ev->parsed()) {
      if (eval_opts.presets.empty()) eval_opts.presets = {"eval-pgd20"};
      tart::cli::cmd_eval(eval_opts);
    } else if (an->parsed()) {
      if (an_seed_set) an_opts.seed = an_seed;
      tart::cli::cmd_analyze(an_opts);
    }
  } catch (const tart::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const tart::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

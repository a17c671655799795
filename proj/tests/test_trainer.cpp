#include <doctest.h>

#include <cmath>

#include "tart/dataset.hpp"
#include "tart/eval.hpp"
#include "tart/hash.hpp"
#include "tart/rng.hpp"
#include "tart/trainer.hpp"

using namespace tart;
using namespace tart::trainer;

namespace {

struct TinyHemisphere {
  dataset::Dataset train;
  dataset::Dataset test;
  tangent::TangentCache cache;
};

TinyHemisphere tiny_hemisphere(Index d = 10, Index n = 96) {
  dataset::HemisphereConfig cfg;
  cfg.ambient_dim = d;
  cfg.num_classes = 4;
  cfg.train_size = n;
  cfg.test_size = 48;
  cfg.seed = 5;
  auto sample = dataset::sample_hemisphere(cfg);
  TinyHemisphere out;
  out.cache = tangent::build_cache_exact(sample.train, Digest{});
  out.train = std::move(sample.train);
  out.test = std::move(sample.test);
  return out;
}

TrainConfig tiny_config(Method method, double eps = 0.05) {
  TrainConfig cfg;
  cfg.hidden = {16};
  cfg.optimizer.learning_rate = 0.05;
  cfg.optimizer.momentum = 0.9;
  cfg.optimizer.weight_decay = 2e-4;
  cfg.optimizer.schedule = {};
  cfg.batch_size = 32;
  cfg.epochs = 3;
  cfg.method = method;
  cfg.rule = RuleKind::QuartileSplit;
  cfg.eps_max = eps;
  cfg.seed = 17;
  return cfg;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("median split: worked example, ties, cardinality") {
  AssignmentRule rule{RuleKind::MedianSplit, 0.05};
  std::vector<double> tcs{0.1, 0.2, 0.3, 0.4};
  Assignment a = assign_epsilons(tcs, rule);
  CHECK(a.eps == std::vector<double>{0.0, 0.0, 0.05, 0.05});
  CHECK(a.used == std::vector<bool>(4, true));

  std::vector<double> equal(6, 0.7);
  Assignment tie = assign_epsilons(equal, rule);
  for (double e : tie.eps) CHECK(e == 0.05);  // every TC ≥ median

  Rng rng(1);
  for (int t = 0; t < 200; ++t) {
    std::size_t b = 1 + rng.next_u64() % 33;
    std::vector<double> random_tcs(b);
    for (auto& v : random_tcs) v = rng.uniform01();
    Assignment r = assign_epsilons(random_tcs, rule);
    std::size_t at_max = 0;
    for (double e : r.eps)
      if (e == 0.05) ++at_max;
    CHECK(at_max >= (b + 1) / 2);  // at least ⌈B/2⌉
  }
}

TEST_CASE("quartile split: worked example and masking") {
  AssignmentRule rule{RuleKind::QuartileSplit, 0.9};
  std::vector<double> tcs{1, 2, 3, 4, 5, 6, 7, 8};
  Assignment a = assign_epsilons(tcs, rule);
  // Top quarter (7,8) gets the full budget, bottom quarter (1,2) gets zero,
  // the middle half is dropped.
  CHECK(a.eps[6] == 0.9);
  CHECK(a.eps[7] == 0.9);
  CHECK(a.used[6]);
  CHECK(a.used[7]);
  CHECK(a.eps[0] == 0.0);
  CHECK(a.eps[1] == 0.0);
  CHECK(a.used[0]);
  CHECK(a.used[1]);
  for (int i = 2; i < 6; ++i) CHECK(!a.used[static_cast<std::size_t>(i)]);

  AssignmentRule rev{RuleKind::ReverseQuartileSplit, 0.9};
  Assignment r = assign_epsilons(tcs, rev);
  CHECK(r.eps[0] == 0.9);
  CHECK(r.eps[1] == 0.9);
  CHECK(r.eps[6] == 0.0);
  CHECK(r.eps[7] == 0.0);
  for (int i = 2; i < 6; ++i) CHECK(!r.used[static_cast<std::size_t>(i)]);
}

TEST_CASE("assignment edge cases and monotonicity") {
  CHECK_THROWS_AS(assign_epsilons(std::vector<double>{}, {RuleKind::MedianSplit, 0.1}),
                  EmptyBatch);
  CHECK_THROWS_AS(assign_epsilons(std::vector<double>{0.5}, {RuleKind::QuartileSplit, 0.1}),
                  EmptyBatch);

  Assignment fixed = assign_epsilons(std::vector<double>{9.0, 1.0}, {RuleKind::Fixed, 0.2});
  CHECK(fixed.eps == std::vector<double>{0.2, 0.2});

  // TC_i ≥ TC_j ⇒ ε_i ≥ ε_j among used examples (opposite for Reverse).
  Rng rng(2);
  for (int t = 0; t < 1000; ++t) {
    std::size_t b = 4 + rng.next_u64() % 29;
    std::vector<double> tcs(b);
    for (auto& v : tcs) v = rng.uniform01();
    for (RuleKind kind : {RuleKind::MedianSplit, RuleKind::QuartileSplit,
                          RuleKind::ReverseMedianSplit, RuleKind::ReverseQuartileSplit}) {
      const bool reverse = kind == RuleKind::ReverseMedianSplit ||
                           kind == RuleKind::ReverseQuartileSplit;
      Assignment a = assign_epsilons(tcs, {kind, 1.0});
      for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
          if (!a.used[i] || !a.used[j] || tcs[i] < tcs[j]) continue;
          if (reverse)
            CHECK(a.eps[i] <= a.eps[j]);
          else
            CHECK(a.eps[i] >= a.eps[j]);
        }
      }
    }
  }
}

TEST_CASE("method names round trip") {
  for (Method m : {Method::Clean, Method::StandardAt, Method::Fixed, Method::Tart,
                   Method::ReverseTart})
    CHECK(method_from_name(method_name(m)) == m);
  CHECK_THROWS_AS(method_from_name("trades"), ConfigError);
}

TEST_CASE("fixed rule reduces to standard adversarial training bitwise") {
  TinyHemisphere data = tiny_hemisphere();

  TrainConfig std_at = tiny_config(Method::StandardAt);
  TrainResult a = train(data.train, data.test, nullptr, std_at);

  TrainConfig fixed = tiny_config(Method::Fixed);
  TrainResult b = train(data.train, data.test, &data.cache, fixed);

  CHECK(network::bitwise_equal(a.final_model, b.final_model));
  CHECK(network::bitwise_equal(a.best_model, b.best_model));
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (std::size_t e = 0; e < a.metrics.size(); ++e) {
    CHECK(a.metrics[e].train_loss == b.metrics[e].train_loss);
    CHECK(a.metrics[e].clean_acc == b.metrics[e].clean_acc);
  }
  CHECK(a.final_robust_acc == b.final_robust_acc);
}

TEST_CASE("fixed rule at zero budget reduces to clean training bitwise") {
  TinyHemisphere data = tiny_hemisphere();
  TrainConfig clean = tiny_config(Method::Clean);
  TrainResult a = train(data.train, data.test, nullptr, clean);
  TrainConfig fixed0 = tiny_config(Method::Fixed, 0.0);
  TrainResult b = train(data.train, data.test, &data.cache, fixed0);
  CHECK(network::bitwise_equal(a.final_model, b.final_model));
}

TEST_CASE("training is deterministic given the seed") {
  TinyHemisphere data = tiny_hemisphere();
  TrainConfig cfg = tiny_config(Method::Tart);
  TrainResult a = train(data.train, data.test, &data.cache, cfg);
  TrainResult b = train(data.train, data.test, &data.cache, cfg);
  CHECK(network::bitwise_equal(a.final_model, b.final_model));
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (std::size_t e = 0; e < a.metrics.size(); ++e) {
    CHECK(a.metrics[e].train_loss == b.metrics[e].train_loss);
    CHECK(a.metrics[e].mean_tc == b.metrics[e].mean_tc);
  }
  CHECK(a.final_robust_acc == b.final_robust_acc);
}

TEST_CASE("tart variants demand a matching cache") {
  TinyHemisphere data = tiny_hemisphere();
  TrainConfig cfg = tiny_config(Method::Tart);
  CHECK_THROWS_AS(train(data.train, data.test, nullptr, cfg), CacheMismatch);

  tangent::TangentCache wrong = data.cache;
  wrong.entries.pop_back();
  CHECK_THROWS_AS(train(data.train, data.test, &wrong, cfg), CacheMismatch);
}

TEST_CASE("batch step: one attack per example, quartile usage accounting") {
  TinyHemisphere data = tiny_hemisphere(8, 32);
  Rng rng(100);
  network::Mlp model =
      network::make_mlp({8, 16, 4}, network::Activation::ReLU, rng);
  network::SgdState opt;
  network::init_velocity(opt, model);
  attack::AttackConfig atk = attack::preset("train-pgd10", 0.05);

  Matrix xb = data.train.x.topRows(32);
  std::vector<int> yb(data.train.labels.begin(), data.train.labels.begin() + 32);
  std::vector<Index> ids(32);
  for (Index i = 0; i < 32; ++i) ids[static_cast<std::size_t>(i)] = i;

  BatchStats stats = tart_batch_step(model, xb, yb, ids, &data.cache,
                                     {RuleKind::QuartileSplit, 0.05}, atk, opt, 0.01, 77);
  CHECK(stats.attacked == 32);           // exactly one attack invocation per example
  CHECK(stats.used == 16);               // top and bottom quarters only
  CHECK(stats.frac_eps_max == doctest::Approx(0.25));
  CHECK(std::isfinite(stats.loss));
  CHECK(stats.mean_tc >= 0.0);

  BatchStats median_stats = tart_batch_step(model, xb, yb, ids, &data.cache,
                                            {RuleKind::MedianSplit, 0.05}, atk, opt, 0.01, 78);
  CHECK(median_stats.used == 32);
  CHECK(median_stats.frac_eps_max >= 0.5);
}

TEST_CASE("epoch metrics carry the learning-rate schedule") {
  TinyHemisphere data = tiny_hemisphere();
  TrainConfig cfg = tiny_config(Method::StandardAt);
  cfg.epochs = 4;
  cfg.optimizer.schedule = {{2, 10.0}};
  TrainResult result = train(data.train, data.test, nullptr, cfg);
  REQUIRE(result.metrics.size() == 4);
  CHECK(result.metrics[0].lr == doctest::Approx(0.05));
  CHECK(result.metrics[1].lr == doctest::Approx(0.05));
  CHECK(result.metrics[2].lr == doctest::Approx(0.005));
  CHECK(result.metrics[3].lr == doctest::Approx(0.005));
  CHECK(result.best_clean_acc >= result.metrics[0].clean_acc);
}

}  // TEST_SUITE

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tart/attack.hpp"
#include "tart/dataset.hpp"
#include "tart/network.hpp"
#include "tart/tangent.hpp"
#include "tart/types.hpp"

namespace tart::trainer {

/// Per-batch perturbation-budget policy, driven by the rank of each
/// example's tangential component.
///   Fixed           — every example gets eps_max (0 disables the attack).
///   MedianSplit     — eps_max for TC at or above the batch median, else 0.
///   QuartileSplit   — eps_max for the top quarter by TC, 0 for the bottom
///                     quarter, middle half dropped from the update.
///   Reverse*        — same partitions with the budgets swapped.
enum class RuleKind {
  Fixed,
  MedianSplit,
  QuartileSplit,
  ReverseMedianSplit,
  ReverseQuartileSplit,
};

struct AssignmentRule {
  RuleKind kind = RuleKind::Fixed;
  double eps_max = 0.0;
};

bool rule_needs_tc(RuleKind kind);

struct Assignment {
  std::vector<double> eps;
  std::vector<bool> used;
};

/// Applies the rule to one batch of tangential components. Median ties take
/// eps_max (the indicator is >=); the even-length median is the mean of the
/// two middle order statistics. Quartile counts are floor(B/4) per side.
Assignment assign_epsilons(std::span<const double> tcs, const AssignmentRule& rule);

struct BatchStats {
  double loss = 0.0;
  double mean_tc = 0.0;
  double frac_eps_max = 0.0;
  Index used = 0;
  Index attacked = 0;  // adversarial examples generated (one per example)
};

/// One mini-batch update of the tangent-guided loop: attack the whole batch
/// at eps_max, read each example's TC from the cache, assign budgets, swap
/// in the clean input where the budget is zero, and take one SGD step on
/// the mean loss over the surviving examples. Adversarial examples are
/// never regenerated.
BatchStats tart_batch_step(network::Mlp& model, const Matrix& x_batch,
                           std::span<const int> y_batch, std::span<const Index> example_ids,
                           const tangent::TangentCache* cache, const AssignmentRule& rule,
                           const attack::AttackConfig& attack_cfg, network::SgdState& opt,
                           double lr, std::uint64_t attack_stream);

/// Training method surfaced by the CLI. StandardAt runs the Fixed(eps) rule
/// and never touches a cache; Fixed is the same rule through the tangent-
/// guided path (TC statistics are recorded when a cache is supplied, the
/// update is bit-identical to StandardAt); Tart/ReverseTart read TCs from
/// the cache each epoch.
enum class Method { Clean, StandardAt, Fixed, Tart, ReverseTart };

Method method_from_name(const std::string& name);
std::string method_name(Method m);

struct TrainConfig {
  std::vector<Index> hidden{128, 128};
  network::SgdState optimizer;  // velocity ignored; schedule per run
  Index batch_size = 128;
  int epochs = 50;
  Method method = Method::StandardAt;
  RuleKind rule = RuleKind::QuartileSplit;  // for Tart / ReverseTart
  double eps_max = 0.03;
  std::string train_preset = "train-pgd10";
  std::string eval_preset = "eval-pgd20";
  int eval_robust_every = 0;  // 0: robust accuracy only after training
  std::uint64_t seed = 1;
};

struct EpochMetrics {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double clean_acc = 0.0;
  std::optional<double> robust_acc;
  double frac_eps_max = 0.0;
  double mean_tc = 0.0;
};

struct TrainResult {
  network::Mlp final_model;
  network::Mlp best_model;  // by clean test accuracy
  int best_epoch = 0;
  double best_clean_acc = 0.0;
  double final_clean_acc = 0.0;
  double final_robust_acc = 0.0;
  std::vector<EpochMetrics> metrics;
};

/// Full training run: deterministic shuffling per (seed, epoch), stepped
/// learning rate, per-epoch clean accuracy on the test split, robust
/// accuracy after the last epoch (and optionally during training).
TrainResult train(const dataset::Dataset& train_data, const dataset::Dataset& test_data,
                  const tangent::TangentCache* cache, const TrainConfig& cfg);

void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::string& path);

}  // namespace tart::trainer

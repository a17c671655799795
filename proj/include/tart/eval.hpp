#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tart/attack.hpp"
#include "tart/dataset.hpp"
#include "tart/network.hpp"
#include "tart/tangent.hpp"
#include "tart/types.hpp"

namespace tart::eval {

/// Fraction of examples whose argmax logit matches the label. Argmax ties
/// break to the lowest class index.
double clean_accuracy(const network::Mlp& model, const dataset::Dataset& ds);

/// Accuracy after attacking every example with `cfg`. Attack randomness is
/// keyed by (stream_seed, example index).
double robust_accuracy(const network::Mlp& model, const dataset::Dataset& ds,
                       const attack::AttackConfig& cfg, std::uint64_t stream_seed);

/// Total variation distance ½‖p − q‖₁ between two discrete distributions.
/// Throws InvalidDistribution on negative mass or sums away from 1.
double tv_distance(const Vector& p, const Vector& q);

/// Finite discrete two-distribution setup sharing a true labeling function.
struct DiscreteDistributionPair {
  Vector p;
  Vector q;
  std::vector<int> h;  // true labels, {0,1}
  std::vector<int> f;  // classifier outputs, {0,1}
};

struct RiskGapResult {
  double risk_p = 0.0;
  double risk_q = 0.0;
  double gap = 0.0;
  double bound = 0.0;  // 4·TV
  bool holds = false;
};

/// Checks |R_P(f) − R_Q(f)| ≤ 4·TV(P,Q) with mean absolute loss. The bound
/// is a theorem; `holds` can only be false if something here is broken.
RiskGapResult risk_gap_check(const DiscreteDistributionPair& pair);

struct LossTcRow {
  double mean_tc = 0.0;
  double loss = 0.0;
};

struct LossTcTable {
  std::vector<LossTcRow> rows;
  double correlation = 0.0;  // sample correlation of (mean_tc, loss)
};

/// For `num_batches` deterministic batches: attack at the preset's budget,
/// record the batch's mean tangential component and mean loss.
LossTcTable loss_vs_tc(const network::Mlp& model, const dataset::Dataset& ds,
                       const tangent::TangentCache& cache, const attack::AttackConfig& cfg,
                       int num_batches, Index batch_size, std::uint64_t seed);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
};

MeanStd aggregate(const std::vector<double>& values);

}  // namespace tart::eval

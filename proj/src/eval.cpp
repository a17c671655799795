#include "tart/eval.hpp"

#include <cmath>

#include "tart/rng.hpp"

namespace tart::eval {

namespace {

int argmax_lowest(const Eigen::RowVectorXd& row) {
  int best = 0;
  for (int j = 1; j < row.size(); ++j)
    if (row[j] > row[best]) best = j;  // strict: ties keep the lowest index
  return best;
}

double accuracy_of_logits(const Matrix& logits, std::span<const int> labels) {
  Index correct = 0;
  for (Index i = 0; i < logits.rows(); ++i)
    if (argmax_lowest(logits.row(i)) == labels[static_cast<std::size_t>(i)]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(logits.rows());
}

void validate_distribution(const Vector& p) {
  if (p.size() == 0) throw InvalidDistribution("empty distribution");
  if ((p.array() < 0.0).any()) throw InvalidDistribution("negative probability mass");
  if (std::abs(p.sum() - 1.0) > 1e-12)
    throw InvalidDistribution("probabilities do not sum to 1");
}

}  // namespace

double clean_accuracy(const network::Mlp& model, const dataset::Dataset& ds) {
  if (ds.size() == 0) throw EmptyBatch("clean_accuracy: empty dataset");
  Matrix logits = network::forward_batch(model, ds.x);
  return accuracy_of_logits(logits, ds.labels);
}

double robust_accuracy(const network::Mlp& model, const dataset::Dataset& ds,
                       const attack::AttackConfig& cfg, std::uint64_t stream_seed) {
  if (ds.size() == 0) throw EmptyBatch("robust_accuracy: empty dataset");
  const Index n = ds.size();
  const Index chunk = 256;  // evaluation batches; purely a throughput knob
  Index correct = 0;
  std::vector<Index> ids;
  for (Index start = 0; start < n; start += chunk) {
    Index b = std::min(chunk, n - start);
    ids.resize(static_cast<std::size_t>(b));
    for (Index i = 0; i < b; ++i) ids[static_cast<std::size_t>(i)] = start + i;
    Matrix xb = ds.x.middleRows(start, b);
    std::span<const int> yb(ds.labels.data() + start, static_cast<std::size_t>(b));
    Matrix adv = attack::pgd_batch(model, xb, yb, cfg, stream_seed, ids);
    Matrix logits = network::forward_batch(model, adv);
    for (Index i = 0; i < b; ++i)
      if (argmax_lowest(logits.row(i)) == yb[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

double tv_distance(const Vector& p, const Vector& q) {
  validate_distribution(p);
  validate_distribution(q);
  require_dims(p.size() == q.size(), "tv_distance: supports differ");
  return 0.5 * (p - q).cwiseAbs().sum();
}

RiskGapResult risk_gap_check(const DiscreteDistributionPair& pair) {
  const Index m = pair.p.size();
  require_dims(static_cast<std::size_t>(m) == pair.h.size() &&
                   static_cast<std::size_t>(m) == pair.f.size(),
               "risk_gap_check: support sizes differ");
  for (Index i = 0; i < m; ++i) {
    int h = pair.h[static_cast<std::size_t>(i)];
    int f = pair.f[static_cast<std::size_t>(i)];
    if ((h != 0 && h != 1) || (f != 0 && f != 1))
      throw InvalidDistribution("risk_gap_check: labels must be 0/1");
  }
  RiskGapResult out;
  out.bound = 4.0 * tv_distance(pair.p, pair.q);
  for (Index i = 0; i < m; ++i) {
    double loss = std::abs(static_cast<double>(pair.f[static_cast<std::size_t>(i)]) -
                           static_cast<double>(pair.h[static_cast<std::size_t>(i)]));
    out.risk_p += pair.p[i] * loss;
    out.risk_q += pair.q[i] * loss;
  }
  out.gap = std::abs(out.risk_p - out.risk_q);
  out.holds = out.gap <= out.bound + 1e-12;
  return out;
}

LossTcTable loss_vs_tc(const network::Mlp& model, const dataset::Dataset& ds,
                       const tangent::TangentCache& cache, const attack::AttackConfig& cfg,
                       int num_batches, Index batch_size, std::uint64_t seed) {
  if (cache.size() != ds.size())
    throw CacheMismatch("loss_vs_tc: cache entry count does not match dataset");
  if (batch_size < 1 || batch_size > ds.size())
    throw ConfigError("loss_vs_tc: batch size out of range");
  LossTcTable table;
  for (int bi = 0; bi < num_batches; ++bi) {
    // Deterministic batch draw: sample indices without replacement.
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(bi));
    std::vector<Index> all(static_cast<std::size_t>(ds.size()));
    for (Index i = 0; i < ds.size(); ++i) all[static_cast<std::size_t>(i)] = i;
    rng.shuffle(all);
    all.resize(static_cast<std::size_t>(batch_size));

    Matrix xb(batch_size, ds.dim());
    std::vector<int> yb(static_cast<std::size_t>(batch_size));
    for (Index i = 0; i < batch_size; ++i) {
      xb.row(i) = ds.x.row(all[static_cast<std::size_t>(i)]);
      yb[static_cast<std::size_t>(i)] =
          ds.labels[static_cast<std::size_t>(all[static_cast<std::size_t>(i)])];
    }
    Matrix adv = attack::pgd_batch(model, xb, yb, cfg,
                                   derive_seed(seed, kStreamEval, static_cast<std::uint64_t>(bi)),
                                   all);
    double tc_sum = 0.0;
    for (Index i = 0; i < batch_size; ++i) {
      const auto& entry = cache.entries[static_cast<std::size_t>(all[static_cast<std::size_t>(i)])];
      tc_sum += tangent::tangential_component_delta(entry,
                                                    (adv.row(i) - xb.row(i)).transpose());
    }
    Matrix logits = network::forward_batch(model, adv);
    double loss = network::cross_entropy_batch(logits, yb, nullptr);
    table.rows.push_back({tc_sum / static_cast<double>(batch_size), loss});
  }
  // Sample correlation over the collected rows.
  const auto n = static_cast<double>(table.rows.size());
  if (table.rows.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (const auto& r : table.rows) mx += r.mean_tc, my += r.loss;
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (const auto& r : table.rows) {
      sxy += (r.mean_tc - mx) * (r.loss - my);
      sxx += (r.mean_tc - mx) * (r.mean_tc - mx);
      syy += (r.loss - my) * (r.loss - my);
    }
    table.correlation = sxx > 0.0 && syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
  }
  return table;
}

MeanStd aggregate(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

}  // namespace tart::eval

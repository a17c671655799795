#include "tart/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "tart/eval.hpp"
#include "tart/io.hpp"
#include "tart/rng.hpp"

namespace tart::trainer {

bool rule_needs_tc(RuleKind kind) { return kind != RuleKind::Fixed; }

namespace {

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Indices sorted by ascending TC; ties break by position so the split is
/// deterministic.
std::vector<std::size_t> rank_order(std::span<const double> tcs) {
  std::vector<std::size_t> idx(tcs.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return tcs[a] < tcs[b]; });
  return idx;
}

}  // namespace

Assignment assign_epsilons(std::span<const double> tcs, const AssignmentRule& rule) {
  const std::size_t n = tcs.size();
  if (n == 0) throw EmptyBatch("assign_epsilons: empty batch");
  Assignment out;
  out.eps.assign(n, 0.0);
  out.used.assign(n, true);
  switch (rule.kind) {
    case RuleKind::Fixed:
      std::fill(out.eps.begin(), out.eps.end(), rule.eps_max);
      return out;
    case RuleKind::MedianSplit:
    case RuleKind::ReverseMedianSplit: {
      const double med = median_of({tcs.begin(), tcs.end()});
      const bool reverse = rule.kind == RuleKind::ReverseMedianSplit;
      for (std::size_t i = 0; i < n; ++i) {
        const bool upper = tcs[i] >= med;  // ties take eps_max
        out.eps[i] = (upper != reverse) ? rule.eps_max : 0.0;
      }
      return out;
    }
    case RuleKind::QuartileSplit:
    case RuleKind::ReverseQuartileSplit: {
      if (n < 2) throw EmptyBatch("assign_epsilons: quartile rule needs at least 2 examples");
      const std::size_t q = std::max<std::size_t>(1, n / 4);
      const bool reverse = rule.kind == RuleKind::ReverseQuartileSplit;
      std::vector<std::size_t> order = rank_order(tcs);
      std::fill(out.used.begin(), out.used.end(), false);
      for (std::size_t r = 0; r < q; ++r) {
        std::size_t lo = order[r];
        std::size_t hi = order[n - 1 - r];
        out.used[lo] = out.used[hi] = true;
        out.eps[hi] = reverse ? 0.0 : rule.eps_max;
        out.eps[lo] = reverse ? rule.eps_max : 0.0;
      }
      return out;
    }
  }
  throw ConfigError("assign_epsilons: unknown rule");
}

BatchStats tart_batch_step(network::Mlp& model, const Matrix& x_batch,
                           std::span<const int> y_batch, std::span<const Index> example_ids,
                           const tangent::TangentCache* cache, const AssignmentRule& rule,
                           const attack::AttackConfig& attack_cfg, network::SgdState& opt,
                           double lr, std::uint64_t attack_stream) {
  const Index b = x_batch.rows();
  if (b == 0) throw EmptyBatch("tart_batch_step: empty batch");
  require_dims(static_cast<std::size_t>(b) == y_batch.size() &&
                   y_batch.size() == example_ids.size(),
               "tart_batch_step: batch arrays must agree");
  if (rule_needs_tc(rule.kind) && cache == nullptr)
    throw CacheMismatch("tart_batch_step: rule requires a tangent cache");

  BatchStats stats;

  // One attack per example at eps_max; the same adversarial examples are
  // reused for the update, never regenerated.
  Matrix adv;
  if (rule.eps_max > 0.0) {
    adv = attack::pgd_batch(model, x_batch, y_batch, attack_cfg, attack_stream, example_ids);
    stats.attacked = b;
  } else {
    adv = x_batch;
  }

  std::vector<double> tcs;
  if (cache != nullptr) {
    tcs.resize(static_cast<std::size_t>(b));
    for (Index i = 0; i < b; ++i) {
      Index id = example_ids[static_cast<std::size_t>(i)];
      if (id < 0 || id >= cache->size())
        throw CacheMismatch("tart_batch_step: example index outside cache");
      tcs[static_cast<std::size_t>(i)] = tangent::tangential_component_delta(
          cache->entries[static_cast<std::size_t>(id)],
          (adv.row(i) - x_batch.row(i)).transpose());
    }
    stats.mean_tc = std::accumulate(tcs.begin(), tcs.end(), 0.0) / static_cast<double>(b);
  } else {
    stats.mean_tc = std::numeric_limits<double>::quiet_NaN();
  }

  if (tcs.empty()) tcs.assign(static_cast<std::size_t>(b), 0.0);  // Fixed without cache
  Assignment assign = assign_epsilons(tcs, rule);

  Index used = 0;
  for (std::size_t i = 0; i < assign.used.size(); ++i)
    if (assign.used[i]) ++used;
  if (used == 0) throw EmptyBatch("tart_batch_step: no examples survived the rule");

  Matrix x_train(used, x_batch.cols());
  std::vector<int> y_train(static_cast<std::size_t>(used));
  Index row = 0;
  Index at_max = 0;
  for (Index i = 0; i < b; ++i) {
    const auto s = static_cast<std::size_t>(i);
    if (!assign.used[s]) continue;
    const bool full_budget = rule.eps_max > 0.0 && assign.eps[s] == rule.eps_max;
    if (full_budget)
      x_train.row(row) = adv.row(i);
    else
      x_train.row(row) = x_batch.row(i);
    y_train[static_cast<std::size_t>(row)] = y_batch[s];
    if (full_budget) ++at_max;
    ++row;
  }

  network::Gradients grads;
  stats.loss = network::grad_params(model, x_train, y_train, grads);
  network::sgd_step(model, grads, opt, lr);
  stats.used = used;
  stats.frac_eps_max = static_cast<double>(at_max) / static_cast<double>(b);
  return stats;
}

Method method_from_name(const std::string& name) {
  if (name == "clean") return Method::Clean;
  if (name == "standard-at") return Method::StandardAt;
  if (name == "fixed") return Method::Fixed;
  if (name == "tart") return Method::Tart;
  if (name == "reverse-tart") return Method::ReverseTart;
  throw ConfigError("unknown training method: " + name);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::Clean: return "clean";
    case Method::StandardAt: return "standard-at";
    case Method::Fixed: return "fixed";
    case Method::Tart: return "tart";
    case Method::ReverseTart: return "reverse-tart";
  }
  return "?";
}

namespace {

AssignmentRule resolve_rule(const TrainConfig& cfg) {
  switch (cfg.method) {
    case Method::Clean:
      return {RuleKind::Fixed, 0.0};
    case Method::StandardAt:
    case Method::Fixed:
      return {RuleKind::Fixed, cfg.eps_max};
    case Method::Tart:
      if (cfg.rule != RuleKind::MedianSplit && cfg.rule != RuleKind::QuartileSplit)
        throw ConfigError("tart method needs rule median or quartile");
      return {cfg.rule, cfg.eps_max};
    case Method::ReverseTart:
      if (cfg.rule == RuleKind::MedianSplit) return {RuleKind::ReverseMedianSplit, cfg.eps_max};
      if (cfg.rule == RuleKind::QuartileSplit)
        return {RuleKind::ReverseQuartileSplit, cfg.eps_max};
      throw ConfigError("reverse-tart method needs rule median or quartile");
  }
  throw ConfigError("unknown method");
}

}  // namespace

TrainResult train(const dataset::Dataset& train_data, const dataset::Dataset& test_data,
                  const tangent::TangentCache* cache, const TrainConfig& cfg) {
  const Index n = train_data.size();
  if (n == 0 || test_data.size() == 0) throw EmptyBatch("train: empty dataset");
  if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be positive");
  if (cfg.epochs < 1) throw ConfigError("train: epochs must be positive");

  const AssignmentRule rule = resolve_rule(cfg);
  const bool tart_variant = cfg.method == Method::Tart || cfg.method == Method::ReverseTart;
  if (tart_variant && cache == nullptr)
    throw CacheMismatch("train: tart variants require a tangent cache");
  if (cache != nullptr && cache->size() != n)
    throw CacheMismatch("train: cache entry count does not match training set");
  // StandardAt ignores the cache even if one is supplied.
  const tangent::TangentCache* step_cache =
      (cfg.method == Method::StandardAt || cfg.method == Method::Clean) ? nullptr : cache;

  const attack::AttackConfig train_attack = attack::preset(cfg.train_preset, rule.eps_max);
  const attack::AttackConfig eval_attack = attack::preset(cfg.eval_preset, cfg.eps_max);

  std::vector<Index> dims{train_data.dim()};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(train_data.num_classes);
  Rng init = Rng::stream(cfg.seed, kStreamInit);
  TrainResult result;
  network::Mlp model = network::make_mlp(dims, network::Activation::ReLU, init);

  network::SgdState opt = cfg.optimizer;
  network::init_velocity(opt, model);

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});

  result.best_clean_acc = -1.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = network::lr_at_epoch(opt, epoch);
    Rng shuffle_rng = Rng::stream(cfg.seed, kStreamShuffle, epoch);
    shuffle_rng.shuffle(order);
    const std::uint64_t attack_stream = derive_seed(cfg.seed, kStreamAttack, epoch);

    double loss_sum = 0.0, tc_sum = 0.0, frac_sum = 0.0;
    Index seen = 0;
    bool have_tc = step_cache != nullptr;
    for (Index start = 0; start < n; start += cfg.batch_size) {
      const Index b = std::min(cfg.batch_size, n - start);
      Matrix xb(b, train_data.dim());
      std::vector<int> yb(static_cast<std::size_t>(b));
      std::vector<Index> ids(static_cast<std::size_t>(b));
      for (Index i = 0; i < b; ++i) {
        Index id = order[static_cast<std::size_t>(start + i)];
        xb.row(i) = train_data.x.row(id);
        yb[static_cast<std::size_t>(i)] = train_data.labels[static_cast<std::size_t>(id)];
        ids[static_cast<std::size_t>(i)] = id;
      }
      BatchStats stats = tart_batch_step(model, xb, yb, ids, step_cache, rule, train_attack,
                                         opt, lr, attack_stream);
      loss_sum += stats.loss * static_cast<double>(b);
      frac_sum += stats.frac_eps_max * static_cast<double>(b);
      if (have_tc) tc_sum += stats.mean_tc * static_cast<double>(b);
      seen += b;
    }

    EpochMetrics em;
    em.epoch = epoch;
    em.lr = lr;
    em.train_loss = loss_sum / static_cast<double>(seen);
    em.frac_eps_max = frac_sum / static_cast<double>(seen);
    em.mean_tc = have_tc ? tc_sum / static_cast<double>(seen)
                         : std::numeric_limits<double>::quiet_NaN();
    em.clean_acc = eval::clean_accuracy(model, test_data);
    if (cfg.eval_robust_every > 0 && (epoch + 1) % cfg.eval_robust_every == 0)
      em.robust_acc = eval::robust_accuracy(model, test_data, eval_attack,
                                            derive_seed(cfg.seed, kStreamEval, epoch));
    if (em.clean_acc > result.best_clean_acc) {
      result.best_clean_acc = em.clean_acc;
      result.best_epoch = epoch;
      result.best_model = model;
    }
    result.metrics.push_back(std::move(em));
  }

  result.final_model = std::move(model);
  result.final_clean_acc = result.metrics.back().clean_acc;
  result.final_robust_acc = eval::robust_accuracy(
      result.final_model, test_data, eval_attack, derive_seed(cfg.seed, kStreamEval, cfg.epochs));
  return result;
}

void write_metrics_csv(const std::vector<EpochMetrics>& metrics, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write metrics: " + path);
  out << "epoch,lr,train_loss,clean_acc,robust_acc,frac_eps_max,mean_tc\n";
  for (const EpochMetrics& m : metrics) {
    write_csv_row(out, {std::to_string(m.epoch), format_double(m.lr),
                        format_double(m.train_loss), format_double(m.clean_acc),
                        m.robust_acc ? format_double(*m.robust_acc) : std::string{},
                        format_double(m.frac_eps_max), format_double(m.mean_tc)});
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace tart::trainer

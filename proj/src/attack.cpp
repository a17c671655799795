#include "tart/attack.hpp"

#include "tart/rng.hpp"

namespace tart::attack {

namespace {

void validate(const AttackConfig& cfg) {
  if (cfg.epsilon < 0.0) throw ConfigError("attack: epsilon must be nonnegative");
  if (cfg.steps > 0 && !(cfg.step_size > 0.0))
    throw ConfigError("attack: positive step count needs positive step size");
  if (cfg.clip && !(cfg.clip->first < cfg.clip->second))
    throw ConfigError("attack: clip bounds out of order");
}

// Clipping only composes with the ε-ball guarantee when the clean input
// already satisfies the clip bounds.
void require_in_domain(const Matrix& x, const AttackConfig& cfg) {
  if (!cfg.clip) return;
  if (x.minCoeff() < cfg.clip->first || x.maxCoeff() > cfg.clip->second)
    throw ConfigError("attack: input lies outside the configured clip bounds");
}

void clamp_domain(Matrix& x, const std::optional<std::pair<double, double>>& clip) {
  if (clip) x = x.cwiseMax(clip->first).cwiseMin(clip->second);
}

}  // namespace

AttackConfig preset(const std::string& name, double epsilon) {
  AttackConfig cfg;
  cfg.epsilon = epsilon;
  if (name == "train-pgd10") {
    cfg.steps = 10;
    cfg.step_size = epsilon / 4.0;
    cfg.random_start = true;
  } else if (name == "eval-pgd20") {
    cfg.steps = 20;
    cfg.step_size = epsilon / 10.0;
    cfg.random_start = true;
  } else if (name == "eval-pgd40") {
    cfg.steps = 40;
    cfg.step_size = epsilon / 10.0;
    cfg.random_start = true;
  } else if (name == "fgsm") {
    cfg.steps = 1;
    cfg.step_size = epsilon;
    cfg.random_start = false;
  } else {
    throw ConfigError("unknown attack preset: " + name);
  }
  if (epsilon == 0.0) cfg.step_size = 0.0, cfg.steps = 0, cfg.random_start = false;
  return cfg;
}

Vector fgsm(const network::Mlp& model, const Vector& x, int y, double epsilon,
            const std::optional<std::pair<double, double>>& clip) {
  AttackConfig cfg;
  cfg.epsilon = epsilon;
  cfg.steps = epsilon > 0.0 ? 1 : 0;
  cfg.step_size = epsilon;
  cfg.clip = clip;
  Rng unused(0);
  return pgd(model, x, y, cfg, unused);
}

Vector pgd(const network::Mlp& model, const Vector& x, int y, const AttackConfig& cfg,
           Rng& rng) {
  validate(cfg);
  require_dims(x.size() == model.in_dim(), "pgd: input width must match model");
  Matrix xb = x.transpose();
  require_in_domain(xb, cfg);
  const int labels[1] = {y};
  Matrix adv = xb;
  if (cfg.random_start && cfg.epsilon > 0.0) {
    for (Index j = 0; j < adv.cols(); ++j)
      adv(0, j) += rng.uniform(-cfg.epsilon, cfg.epsilon);
    clamp_domain(adv, cfg.clip);
  }
  for (int t = 0; t < cfg.steps; ++t) {
    Matrix g = network::grad_inputs(model, adv, labels);
    adv += cfg.step_size * g.array().sign().matrix();
    adv = adv.array().max(xb.array() - cfg.epsilon).min(xb.array() + cfg.epsilon).matrix();
    clamp_domain(adv, cfg.clip);
  }
  return adv.row(0).transpose();
}

Matrix pgd_batch(const network::Mlp& model, const Matrix& x, std::span<const int> y,
                 const AttackConfig& cfg, std::uint64_t stream_seed,
                 std::span<const Index> example_ids) {
  validate(cfg);
  require_dims(x.cols() == model.in_dim(), "pgd_batch: input width must match model");
  require_dims(static_cast<std::size_t>(x.rows()) == y.size() &&
                   y.size() == example_ids.size(),
               "pgd_batch: rows, labels and ids must agree");
  require_in_domain(x, cfg);
  Matrix adv = x;
  if (cfg.random_start && cfg.epsilon > 0.0) {
    for (Index i = 0; i < x.rows(); ++i) {
      Rng rng = Rng::stream(stream_seed, static_cast<std::uint64_t>(
                                             example_ids[static_cast<std::size_t>(i)]));
      for (Index j = 0; j < x.cols(); ++j)
        adv(i, j) += rng.uniform(-cfg.epsilon, cfg.epsilon);
    }
    clamp_domain(adv, cfg.clip);
  }
  // The iterates for the whole batch advance together; after the random
  // start PGD is deterministic, so batching changes nothing.
  for (int t = 0; t < cfg.steps; ++t) {
    Matrix g = network::grad_inputs(model, adv, y);
    adv += cfg.step_size * g.array().sign().matrix();
    adv = adv.array().max(x.array() - cfg.epsilon).min(x.array() + cfg.epsilon).matrix();
    clamp_domain(adv, cfg.clip);
  }
  return adv;
}

}  // namespace tart::attack

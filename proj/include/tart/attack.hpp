#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "tart/network.hpp"
#include "tart/types.hpp"

namespace tart {
class Rng;
}

namespace tart::attack {

/// l∞ attack specification. `steps == 0` returns the input unchanged
/// (after the optional random start, which is also disabled at ε = 0).
struct AttackConfig {
  double epsilon = 0.0;
  int steps = 0;
  double step_size = 0.0;
  bool random_start = false;
  std::optional<std::pair<double, double>> clip;
};

/// Named presets: "train-pgd10" (α = ε/4, random start), "eval-pgd20" and
/// "eval-pgd40" (α = ε/10, random start), "fgsm" (one full-ε step).
AttackConfig preset(const std::string& name, double epsilon);

/// One sign-gradient step of size ε; sign(0) = 0.
Vector fgsm(const network::Mlp& model, const Vector& x, int y, double epsilon,
            const std::optional<std::pair<double, double>>& clip = std::nullopt);

/// k-step projected gradient ascent on the loss inside the ε-ball around x.
Vector pgd(const network::Mlp& model, const Vector& x, int y, const AttackConfig& cfg,
           Rng& rng);

/// Batched PGD, one example per row. Randomness is drawn from independent
/// substreams keyed by (stream_seed, example id), so results match the
/// single-example path and do not depend on batch composition.
Matrix pgd_batch(const network::Mlp& model, const Matrix& x, std::span<const int> y,
                 const AttackConfig& cfg, std::uint64_t stream_seed,
                 std::span<const Index> example_ids);

}  // namespace tart::attack

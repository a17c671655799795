#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tart/types.hpp"

namespace tart::dataset {

/// Transformed-hemisphere generator settings. Points live on the unit upper
/// hemisphere in latent 3-space and are embedded isometrically into R^d.
struct HemisphereConfig {
  Index ambient_dim = 100;
  int num_classes = 4;
  Index train_size = 4000;
  Index test_size = 2000;
  std::uint64_t seed = 1;
};

/// Two noisy concentric circles, separable along x3. Class 0 sits on the
/// inner circle at x3 = +gap, class 1 on the outer circle at x3 = -gap.
struct CirclesConfig {
  Index per_class = 500;
  double radius_inner = 1.0;
  double radius_outer = 2.0;
  double gap = 0.85;
  double noise_std = 0.05;
  std::uint64_t seed = 1;
};

/// In-memory dataset. `x` holds one example per row. For generators with an
/// exactly known manifold, `tangents` carries one orthonormal d×k tangent
/// basis per example and `latent` the generating point.
struct Dataset {
  Matrix x;                      // n×d
  std::vector<int> labels;       // n
  Matrix latent;                 // n×3
  std::vector<Matrix> tangents;  // n matrices d×k, empty when unknown
  int num_classes = 0;

  Index size() const { return x.rows(); }
  Index dim() const { return x.cols(); }
  bool has_tangents() const { return !tangents.empty(); }
};

struct HemisphereSample {
  Dataset train;
  Dataset test;
  Matrix frame;  // the embedding T, d×3
};

/// Deterministic orthonormal frame: QR of a seeded Gaussian matrix with the
/// sign convention that makes the factor unique.
Matrix random_orthonormal_frame(Index d, Index cols, std::uint64_t seed);

/// Sector index of a hemisphere point: floor(c · azimuth / 2π).
int hemisphere_label(const Vector& z, int num_classes);

/// Pushforward T·[u1 u2] of an orthonormal tangent frame at z on the unit
/// sphere. The frame is Gram-Schmidt of the two coordinate axes least
/// aligned with z, orthogonalized against z.
Matrix exact_tangent(const Vector& z, const Matrix& frame);

HemisphereSample sample_hemisphere(const HemisphereConfig& cfg);

Dataset sample_concentric_circles(const CirclesConfig& cfg);

// TADS container. Header: magic "TADS", version u32, d u32, c u32, n u64,
// flags u32 (bit 0: exact tangent bases stored). Per example: label u32,
// x (d f64), z (3 f64), then the d×2 tangent basis row-major when flagged.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace tart::dataset

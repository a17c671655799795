#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tart/dataset.hpp"
#include "tart/hash.hpp"
#include "tart/linalg.hpp"
#include "tart/network.hpp"
#include "tart/types.hpp"

namespace tart::tangent {

/// Latent sampling stencil for tangent estimation: `samples_per_dim` equally
/// spaced offsets spanning [-latent_spread, +latent_spread] (endpoints
/// included, zero excluded). The decoded center point is appended to the PCA
/// sample set when `include_center` is set.
struct SamplingSpec {
  int samples_per_dim = 8;
  double latent_spread = 0.05;
  bool include_center = true;
};

/// Per-example tangent subspace stored as projector factors (A, A(AᵀA)⁻¹),
/// 2·d·k floats instead of the d×d dense projector.
using TangentEntry = linalg::ProjectorFactors;

enum class CacheSource : std::uint8_t { Exact = 0, Estimated = 1 };

struct TangentCache {
  Index d = 0;
  Index k = 0;
  CacheSource source = CacheSource::Exact;
  Digest dataset_hash{};
  std::vector<TangentEntry> entries;

  Index size() const { return static_cast<Index>(entries.size()); }
};

using DecodeFn = std::function<Vector(const Vector&)>;

/// Estimates the d×k tangent basis at latent point z of a decoder: for each
/// latent axis, decode the stencil around z and keep the first principal
/// component of the decoded set.
Matrix estimate_tangent_space(const DecodeFn& decode, const Vector& z, Index ambient_dim,
                              const SamplingSpec& spec);

/// Convenience overload: z = E(x) through a trained autoencoder.
Matrix estimate_tangent_space(const network::Autoencoder& ae, const Vector& x,
                              const SamplingSpec& spec);

/// Norm of the tangential part of the perturbation x_adv − x.
double tangential_component(const TangentEntry& entry, const Vector& x, const Vector& x_adv);
double tangential_component_delta(const TangentEntry& entry, const Vector& delta);

/// Angle in degrees between the perturbation and the tangent subspace;
/// 0° means fully tangential, 90° fully normal.
double angle_degrees(const TangentEntry& entry, const Vector& x, const Vector& x_adv);

TangentCache build_cache_exact(const dataset::Dataset& ds, const Digest& dataset_hash);
TangentCache build_cache_autoencoder(const dataset::Dataset& ds, const network::Autoencoder& ae,
                                     const SamplingSpec& spec, const Digest& dataset_hash);

// TATC container: magic "TATC", version u32, source u8, d u32, k u32, n u64,
// dataset hash (32 bytes), then per example A followed by A(AᵀA)⁻¹, both
// row-major f64.
void save_cache(const TangentCache& cache, const std::string& path);
TangentCache load_cache(const std::string& path);

/// Throws CacheMismatch unless the cache belongs to a dataset with this
/// hash and example count.
void require_cache_match(const TangentCache& cache, const Digest& dataset_hash, Index n);

}  // namespace tart::tangent

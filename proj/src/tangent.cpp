#include "tart/tangent.hpp"

#include <cmath>

#include "tart/io.hpp"

namespace tart::tangent {

namespace {

constexpr char kMagic[4] = {'T', 'A', 'T', 'C'};
constexpr std::uint32_t kVersion = 1;

std::vector<double> stencil_offsets(const SamplingSpec& spec) {
  if (spec.samples_per_dim < 2)
    throw ConfigError("tangent sampling: need at least two samples per dim");
  if (!(spec.latent_spread > 0.0))
    throw ConfigError("tangent sampling: latent_spread must be positive");
  std::vector<double> offsets;
  const int l = spec.samples_per_dim;
  for (int j = 0; j < l; ++j) {
    double t = spec.latent_spread * (2.0 * j / (l - 1.0) - 1.0);
    if (t != 0.0) offsets.push_back(t);  // odd stencils skip the center
  }
  return offsets;
}

}  // namespace

Matrix estimate_tangent_space(const DecodeFn& decode, const Vector& z, Index ambient_dim,
                              const SamplingSpec& spec) {
  const Index k = z.size();
  require_dims(k >= 1, "estimate_tangent_space: empty latent point");
  const std::vector<double> offsets = stencil_offsets(spec);
  const Index rows =
      static_cast<Index>(offsets.size()) + (spec.include_center ? 1 : 0);
  Matrix basis(ambient_dim, k);
  Matrix samples(rows, ambient_dim);
  for (Index i = 0; i < k; ++i) {
    Index row = 0;
    for (double off : offsets) {
      Vector zi = z;
      zi[i] += off;
      Vector decoded = decode(zi);
      require_dims(decoded.size() == ambient_dim,
                   "estimate_tangent_space: decoder output width mismatch");
      samples.row(row++) = decoded.transpose();
    }
    if (spec.include_center) samples.row(row++) = decode(z).transpose();
    basis.col(i) = linalg::first_principal_component(samples);
  }
  // Degenerate decoders produce collapsed directions; surface that here
  // rather than handing a broken basis downstream.
  linalg::projector_factors(basis);
  return basis;
}

Matrix estimate_tangent_space(const network::Autoencoder& ae, const Vector& x,
                              const SamplingSpec& spec) {
  Vector z = network::encode(ae, x);
  return estimate_tangent_space(
      [&ae](const Vector& zi) { return network::decode(ae, zi); }, z, x.size(), spec);
}

double tangential_component_delta(const TangentEntry& entry, const Vector& delta) {
  require_dims(delta.size() == entry.basis.rows(), "tangential_component: width mismatch");
  return (entry.left_factor * (entry.basis.transpose() * delta)).norm();
}

double tangential_component(const TangentEntry& entry, const Vector& x, const Vector& x_adv) {
  require_dims(x.size() == x_adv.size(), "tangential_component: point widths differ");
  return tangential_component_delta(entry, x_adv - x);
}

double angle_degrees(const TangentEntry& entry, const Vector& x, const Vector& x_adv) {
  Vector delta = x_adv - x;
  double norm = delta.norm();
  if (!(norm > 0.0)) throw ZeroPerturbation("angle_degrees: x_adv equals x");
  double ratio = tangential_component_delta(entry, delta) / norm;
  ratio = std::min(1.0, std::max(0.0, ratio));
  return std::acos(ratio) * 180.0 / EIGEN_PI;
}

TangentCache build_cache_exact(const dataset::Dataset& ds, const Digest& dataset_hash) {
  if (!ds.has_tangents())
    throw MissingArtifact("build_cache: dataset carries no exact tangent bases");
  TangentCache cache;
  cache.d = ds.dim();
  cache.k = ds.tangents.front().cols();
  cache.source = CacheSource::Exact;
  cache.dataset_hash = dataset_hash;
  cache.entries.reserve(static_cast<std::size_t>(ds.size()));
  for (Index i = 0; i < ds.size(); ++i) {
    try {
      cache.entries.push_back(
          linalg::projector_factors(ds.tangents[static_cast<std::size_t>(i)]));
    } catch (const RankDeficient& err) {
      throw RankDeficient("example " + std::to_string(i) + ": " + err.what());
    }
  }
  return cache;
}

TangentCache build_cache_autoencoder(const dataset::Dataset& ds, const network::Autoencoder& ae,
                                     const SamplingSpec& spec, const Digest& dataset_hash) {
  require_dims(ae.encoder.in_dim() == ds.dim(), "build_cache: autoencoder width mismatch");
  TangentCache cache;
  cache.d = ds.dim();
  cache.k = ae.latent_dim();
  cache.source = CacheSource::Estimated;
  cache.dataset_hash = dataset_hash;
  cache.entries.reserve(static_cast<std::size_t>(ds.size()));
  for (Index i = 0; i < ds.size(); ++i) {
    try {
      Matrix basis = estimate_tangent_space(ae, ds.x.row(i).transpose(), spec);
      cache.entries.push_back(linalg::projector_factors(basis));
    } catch (const Error& err) {
      throw RankDeficient("example " + std::to_string(i) + ": " + err.what());
    }
  }
  return cache;
}

void save_cache(const TangentCache& cache, const std::string& path) {
  BinaryWriter w(path);
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u8(static_cast<std::uint8_t>(cache.source));
  w.u32(static_cast<std::uint32_t>(cache.d));
  w.u32(static_cast<std::uint32_t>(cache.k));
  w.u64(static_cast<std::uint64_t>(cache.entries.size()));
  w.bytes(cache.dataset_hash.data(), cache.dataset_hash.size());
  for (const TangentEntry& entry : cache.entries) {
    w.matrix(entry.basis);
    w.matrix(entry.left_factor);
  }
  w.close();
}

TangentCache load_cache(const std::string& path) {
  BinaryReader r(path);
  r.expect_magic(kMagic, "TATC");
  if (r.u32() != kVersion) throw FormatError("unsupported TATC version");
  std::uint8_t source = r.u8();
  if (source > 1) throw FormatError("TATC source flag out of range");
  TangentCache cache;
  cache.source = static_cast<CacheSource>(source);
  cache.d = static_cast<Index>(r.u32());
  cache.k = static_cast<Index>(r.u32());
  const Index n = static_cast<Index>(r.u64());
  if (cache.d < 1 || cache.k < 1 || cache.k > cache.d || n < 1)
    throw FormatError("TATC header out of range");
  r.bytes(cache.dataset_hash.data(), cache.dataset_hash.size());
  cache.entries.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    TangentEntry entry;
    entry.basis = r.matrix(cache.d, cache.k);
    entry.left_factor = r.matrix(cache.d, cache.k);
    require_finite(entry.basis, "load_cache");
    require_finite(entry.left_factor, "load_cache");
    cache.entries.push_back(std::move(entry));
  }
  return cache;
}

void require_cache_match(const TangentCache& cache, const Digest& dataset_hash, Index n) {
  if (cache.dataset_hash != dataset_hash)
    throw HashMismatch("tangent cache was built from a different dataset");
  if (cache.size() != n) throw CacheMismatch("tangent cache entry count mismatch");
}

}  // namespace tart::tangent

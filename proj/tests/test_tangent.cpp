#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "tart/dataset.hpp"
#include "tart/hash.hpp"
#include "tart/rng.hpp"
#include "tart/tangent.hpp"

using namespace tart;
using namespace tart::tangent;

namespace {

Digest fake_hash(unsigned char fill) {
  Digest d;
  d.fill(fill);
  return d;
}

}  // namespace

TEST_SUITE("tangent") {

TEST_CASE("linear decoder: estimated space equals the Jacobian column space") {
  Rng rng(61);
  const Index d = 9, k = 2;
  Matrix m = rng.normal_matrix(d, k);
  Vector b = rng.normal_vector(d);
  DecodeFn decode = [&](const Vector& z) { return Vector(m * z + b); };
  SamplingSpec spec;
  Vector z0 = rng.normal_vector(k);
  Matrix est = estimate_tangent_space(decode, z0, d, spec);
  auto angles = linalg::principal_angles(est, m);
  CHECK(angles.back() < 1e-8);

  // Through an autoencoder with a single linear decoder layer the Jacobian
  // is the same everywhere, whatever the encoder does.
  network::Autoencoder ae;
  ae.encoder = network::make_mlp({d, k}, network::Activation::Tanh, rng);
  ae.decoder.hidden = network::Activation::Tanh;
  ae.decoder.layers.push_back({m, b});
  Matrix est2 = estimate_tangent_space(ae, rng.normal_vector(d), spec);
  CHECK(linalg::principal_angles(est2, m).back() < 1e-8);
}

TEST_CASE("quadratic decoder: tangent at the origin is the flat plane") {
  DecodeFn decode = [](const Vector& z) {
    Vector out(3);
    out << z[0], z[1], z[0] * z[0];
    return out;
  };
  SamplingSpec spec;
  spec.latent_spread = 1e-3;
  Matrix est = estimate_tangent_space(decode, Vector::Zero(2), 3, spec);
  Matrix plane = Matrix::Identity(3, 2);
  CHECK(linalg::principal_angles(est, plane).back() < 1e-3);
}

TEST_CASE("two-point stencil reduces to the decoded difference direction") {
  Rng rng(4);
  const Index d = 6;
  network::Autoencoder ae;
  ae.encoder = network::make_mlp({d, 8, 2}, network::Activation::Tanh, rng);
  ae.decoder = network::make_mlp({2, 8, d}, network::Activation::Tanh, rng);
  DecodeFn decode = [&](const Vector& z) { return network::decode(ae, z); };
  SamplingSpec spec;
  spec.samples_per_dim = 2;
  spec.include_center = false;
  Vector z0 = rng.normal_vector(2);
  Matrix est = estimate_tangent_space(decode, z0, d, spec);
  for (Index i = 0; i < 2; ++i) {
    Vector hi = z0, lo = z0;
    hi[i] += spec.latent_spread;
    lo[i] -= spec.latent_spread;
    Vector diff = decode(hi) - decode(lo);
    double cosine = std::abs(est.col(i).normalized().dot(diff.normalized()));
    CHECK(1.0 - cosine < 1e-10);
  }
}

TEST_CASE("degenerate decoder is rejected") {
  DecodeFn constant = [](const Vector&) { return Vector::Zero(4).eval(); };
  SamplingSpec spec;
  CHECK_THROWS_AS(estimate_tangent_space(constant, Vector::Zero(2), 4, spec),
                  DegenerateSamples);

  // Both latent axes map to the same ambient direction: full-rank guard.
  DecodeFn collapsed = [](const Vector& z) {
    Vector out = Vector::Zero(4);
    out[0] = z[0] + z[1];
    return out;
  };
  CHECK_THROWS_AS(estimate_tangent_space(collapsed, Vector::Zero(2), 4, spec), RankDeficient);
}

TEST_CASE("tangential component: trivial values and the Pythagoras oracle") {
  Rng rng(8);
  Matrix basis = rng.normal_matrix(10, 2);
  TangentEntry entry = linalg::projector_factors(basis);
  Vector x = rng.normal_vector(10);
  CHECK(tangential_component(entry, x, x) == 0.0);

  Vector unit = basis.col(0).normalized();
  CHECK(tangential_component(entry, x, x + 0.1 * unit) == doctest::Approx(0.1).epsilon(1e-12));

  for (int t = 0; t < 20; ++t) {
    Vector delta = rng.normal_vector(10);
    double tc = tangential_component_delta(entry, delta);
    CHECK(tc <= delta.norm() + 1e-12);
    Vector residual = delta - entry.left_factor * (entry.basis.transpose() * delta);
    CHECK(std::abs(delta.squaredNorm() - tc * tc - residual.squaredNorm()) < 1e-10);
  }

  // Basis invariance: the component only depends on the column space.
  Matrix r(2, 2);
  r << 2.0, 0.3, -0.4, 1.1;
  TangentEntry entry2 = linalg::projector_factors((basis * r).eval());
  Vector delta = rng.normal_vector(10);
  CHECK(tangential_component_delta(entry, delta) ==
        doctest::Approx(tangential_component_delta(entry2, delta)).epsilon(1e-9));
}

TEST_CASE("angle in degrees: 0, 90, 60, and the zero-perturbation error") {
  Matrix basis = Matrix::Identity(4, 2);
  TangentEntry entry = linalg::projector_factors(basis);
  Vector x = Vector::Zero(4);
  Vector tangential = Vector::Zero(4);
  tangential[0] = 0.5;
  CHECK(angle_degrees(entry, x, x + tangential) == doctest::Approx(0.0).epsilon(1e-10));
  Vector normal = Vector::Zero(4);
  normal[3] = 0.7;
  CHECK(angle_degrees(entry, x, x + normal) == doctest::Approx(90.0).epsilon(1e-10));
  Vector mixed = Vector::Zero(4);
  mixed[0] = 0.5;
  mixed[3] = 0.5 * std::sqrt(3.0);
  CHECK(angle_degrees(entry, x, x + mixed) == doctest::Approx(60.0).epsilon(1e-10));
  CHECK_THROWS_AS(angle_degrees(entry, x, x), ZeroPerturbation);
}

TEST_CASE("exact cache: passthrough bases, determinism, round trip, file size") {
  dataset::HemisphereConfig cfg;
  cfg.ambient_dim = 12;
  cfg.train_size = 25;
  cfg.test_size = 5;
  cfg.seed = 3;
  dataset::Dataset ds = dataset::sample_hemisphere(cfg).train;
  Digest h = fake_hash(0xAB);
  TangentCache cache = build_cache_exact(ds, h);
  REQUIRE(cache.size() == 25);
  CHECK(cache.k == 2);
  for (Index i = 0; i < 25; ++i) {
    auto angles = linalg::principal_angles(cache.entries[static_cast<std::size_t>(i)].basis,
                                           ds.tangents[static_cast<std::size_t>(i)]);
    CHECK(angles.back() < 1e-10);
    // left_factorᵀ · basis ≈ identity (projector-factor contract)
    Matrix prod = cache.entries[static_cast<std::size_t>(i)].left_factor.transpose() *
                  cache.entries[static_cast<std::size_t>(i)].basis;
    CHECK((prod - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
  }

  auto tmp = std::filesystem::temp_directory_path();
  auto p1 = (tmp / "tart_c1.tatc").string();
  auto p2 = (tmp / "tart_c2.tatc").string();
  save_cache(cache, p1);
  save_cache(build_cache_exact(ds, h), p2);
  CHECK(sha256_file(p1) == sha256_file(p2));  // rebuild is byte-identical

  CHECK(std::filesystem::file_size(p1) ==
        57u + 25u * 2u * 12u * 2u * 8u);  // header + n·2·d·k·f64

  TangentCache loaded = load_cache(p1);
  CHECK(loaded.d == cache.d);
  CHECK(loaded.k == cache.k);
  CHECK(loaded.source == CacheSource::Exact);
  CHECK(loaded.dataset_hash == h);
  for (Index i = 0; i < 25; ++i) {
    CHECK((loaded.entries[static_cast<std::size_t>(i)].basis.array() ==
           cache.entries[static_cast<std::size_t>(i)].basis.array())
              .all());
    CHECK((loaded.entries[static_cast<std::size_t>(i)].left_factor.array() ==
           cache.entries[static_cast<std::size_t>(i)].left_factor.array())
              .all());
  }

  // TC through the loaded cache equals TC from freshly built factors.
  Rng rng(14);
  for (Index i = 0; i < 25; ++i) {
    Vector delta = rng.normal_vector(12);
    TangentEntry fresh = linalg::projector_factors(ds.tangents[static_cast<std::size_t>(i)]);
    CHECK(std::abs(tangential_component_delta(loaded.entries[static_cast<std::size_t>(i)], delta) -
                   tangential_component_delta(fresh, delta)) < 1e-12);
  }

  // Truncation and mismatch errors.
  std::ifstream in(p1, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  auto cut = (tmp / "tart_cut.tatc").string();
  std::ofstream out(cut, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 11));
  out.close();
  CHECK_THROWS_AS(load_cache(cut), FormatError);
  CHECK_THROWS_AS(require_cache_match(loaded, fake_hash(0xCD), 25), HashMismatch);
  CHECK_THROWS_AS(require_cache_match(loaded, h, 26), CacheMismatch);

  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
  std::filesystem::remove(cut);
}

TEST_CASE("autoencoder cache beats random subspaces on a small hemisphere") {
  dataset::HemisphereConfig cfg;
  cfg.ambient_dim = 20;
  cfg.train_size = 300;
  cfg.test_size = 5;
  cfg.seed = 10;
  dataset::Dataset ds = dataset::sample_hemisphere(cfg).train;

  network::SgdState opt;
  opt.learning_rate = 0.02;
  opt.momentum = 0.9;
  opt.weight_decay = 0.0;
  auto trained = network::train_autoencoder(ds.x, 2, {64}, 300, 64, opt, 5);

  SamplingSpec spec;
  TangentCache cache = build_cache_autoencoder(ds, trained.ae, spec, fake_hash(1));
  CHECK(cache.source == CacheSource::Estimated);

  double ae_sum = 0.0;
  for (Index i = 0; i < ds.size(); ++i)
    ae_sum += linalg::principal_angles(cache.entries[static_cast<std::size_t>(i)].basis,
                                       ds.tangents[static_cast<std::size_t>(i)])
                  .back();
  double ae_mean = ae_sum / static_cast<double>(ds.size());

  Rng rng(90);
  double rand_sum = 0.0;
  const int draws = 300;
  for (int t = 0; t < draws; ++t) {
    Index i = static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(ds.size()));
    Matrix g = rng.normal_matrix(cfg.ambient_dim, 2);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(cfg.ambient_dim, 2);
    rand_sum +=
        linalg::principal_angles(q, ds.tangents[static_cast<std::size_t>(i)]).back();
  }
  double rand_mean = rand_sum / draws;
  CHECK(ae_mean < rand_mean);
}

}  // TEST_SUITE

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "tart/dataset.hpp"
#include "tart/hash.hpp"
#include "tart/linalg.hpp"
#include "tart/rng.hpp"

using namespace tart;
using namespace tart::dataset;

namespace {

// chi-square(1 - 1e-4) quantiles, frozen from an independent statistics
// package; keyed by degrees of freedom.
double chi2_threshold(int dof) {
  switch (dof) {
    case 3: return 21.107513466160444;
    case 7: return 29.87750390922517;
    case 15: return 44.26322494417528;
    default: REQUIRE(false); return 0.0;
  }
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("random orthonormal frame: orthonormality, determinism, isometry") {
  Matrix t3 = random_orthonormal_frame(3, 3, 11);
  CHECK((t3.transpose() * t3 - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);

  Matrix a = random_orthonormal_frame(20, 3, 7);
  Matrix b = random_orthonormal_frame(20, 3, 7);
  CHECK((a.array() == b.array()).all());  // bitwise

  Matrix t = random_orthonormal_frame(100, 3, 5);
  Rng rng(3);
  for (int i = 0; i < 10; ++i) {
    Vector z = rng.normal_vector(3);
    CHECK(std::abs((t * z).norm() - z.norm()) < 1e-10);
  }
}

TEST_CASE("hemisphere labels by azimuthal sector") {
  Vector z(3);
  z << 1, 0, 0;
  CHECK(hemisphere_label(z, 4) == 0);
  z << 0, 1, 0;
  CHECK(hemisphere_label(z, 4) == 1);
  z << -1, 1e-300, 0;  // azimuth rounds to pi
  CHECK(hemisphere_label(z, 4) == 2);
  z << -1, 0, 0;
  CHECK(hemisphere_label(z, 4) == 2);
  z << 0.3, -1e-12, 0;  // just below the 2π wrap
  CHECK(hemisphere_label(z, 4) == 3);
}

TEST_CASE("exact tangent frame at the north pole and in general position") {
  Matrix t = random_orthonormal_frame(12, 3, 21);
  Vector pole(3);
  pole << 0, 0, 1;
  Matrix tb = exact_tangent(pole, t);
  auto angles = linalg::principal_angles(tb, t.leftCols(2));
  CHECK(angles.back() < 1e-10);

  Rng rng(4);
  for (int i = 0; i < 10; ++i) {
    Vector z = rng.normal_vector(3).normalized();
    Matrix basis = exact_tangent(z, t);
    // Columns orthogonal to the embedded point.
    CHECK(std::abs((basis.col(0).dot(t * z))) < 1e-12);
    CHECK(std::abs((basis.col(1).dot(t * z))) < 1e-12);
    CHECK((basis.transpose() * basis - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

    // Null-space oracle: tangent space = T · null(zᵀ), null space via SVD.
    Eigen::JacobiSVD<Matrix> svd(z.transpose(), Eigen::ComputeFullV);
    Matrix null_basis = svd.matrixV().rightCols(2);
    auto oracle_angles = linalg::principal_angles(basis, (t * null_basis).eval());
    CHECK(oracle_angles.back() < 1e-8);
  }
}

TEST_CASE("hemisphere sample: invariants and class balance") {
  HemisphereConfig cfg;
  cfg.ambient_dim = 50;
  cfg.num_classes = 4;
  cfg.train_size = 4000;
  cfg.test_size = 100;
  cfg.seed = 9;
  auto sample = sample_hemisphere(cfg);
  const Dataset& ds = sample.train;
  REQUIRE(ds.size() == 4000);
  REQUIRE(ds.has_tangents());

  for (Index i = 0; i < ds.size(); ++i) {
    Vector x = ds.x.row(i).transpose();
    Vector z = ds.latent.row(i).transpose();
    CHECK(std::abs(x.norm() - 1.0) < 1e-10);  // isometric embedding of unit z
    CHECK(std::abs(z.norm() - 1.0) < 1e-12);
    CHECK(z[2] >= 0.0);
    const Matrix& tb = ds.tangents[static_cast<std::size_t>(i)];
    CHECK(std::abs(tb.col(0).dot(x)) < 1e-10);
    CHECK(std::abs(tb.col(1).dot(x)) < 1e-10);
    CHECK((tb.transpose() * tb - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(ds.labels[static_cast<std::size_t>(i)] ==
          hemisphere_label(z, cfg.num_classes));
  }

  // Binomial oracle: each class frequency within 4σ of n/4.
  std::vector<Index> hist(4, 0);
  for (int label : ds.labels) ++hist[static_cast<std::size_t>(label)];
  const double expected = 1000.0;
  const double sigma = std::sqrt(4000.0 * 0.25 * 0.75);
  double chi2 = 0.0;
  for (Index count : hist) {
    CHECK(std::abs(count - expected) <= 4.0 * sigma);
    chi2 += (count - expected) * (count - expected) / expected;
  }
  CHECK(chi2 <= chi2_threshold(3));
}

TEST_CASE("hemisphere chi-square balance for more classes") {
  for (int c : {8, 16}) {
    HemisphereConfig cfg;
    cfg.ambient_dim = 10;
    cfg.num_classes = c;
    cfg.train_size = 6000;
    cfg.test_size = 10;
    cfg.seed = 31;
    auto sample = sample_hemisphere(cfg);
    std::vector<Index> hist(static_cast<std::size_t>(c), 0);
    for (int label : sample.train.labels) ++hist[static_cast<std::size_t>(label)];
    const double expected = 6000.0 / c;
    double chi2 = 0.0;
    for (Index count : hist) chi2 += (count - expected) * (count - expected) / expected;
    CHECK(chi2 <= chi2_threshold(c - 1));
  }
}

TEST_CASE("datasets are byte-identical per seed") {
  HemisphereConfig cfg;
  cfg.ambient_dim = 20;
  cfg.train_size = 50;
  cfg.test_size = 20;
  cfg.seed = 123;
  auto s1 = sample_hemisphere(cfg);
  auto s2 = sample_hemisphere(cfg);
  auto tmp = std::filesystem::temp_directory_path();
  save_dataset(s1.train, (tmp / "tart_ds_a.tads").string());
  save_dataset(s2.train, (tmp / "tart_ds_b.tads").string());
  CHECK(sha256_file((tmp / "tart_ds_a.tads").string()) ==
        sha256_file((tmp / "tart_ds_b.tads").string()));
  std::filesystem::remove(tmp / "tart_ds_a.tads");
  std::filesystem::remove(tmp / "tart_ds_b.tads");
}

TEST_CASE("concentric circles: geometry, separability, x3 probe") {
  CirclesConfig clean;
  clean.per_class = 200;
  clean.noise_std = 0.0;
  clean.seed = 6;
  Dataset ds = sample_concentric_circles(clean);
  REQUIRE(ds.size() == 400);
  for (Index i = 0; i < ds.size(); ++i) {
    double r2 = ds.x(i, 0) * ds.x(i, 0) + ds.x(i, 1) * ds.x(i, 1);
    if (ds.labels[static_cast<std::size_t>(i)] == 0) {
      CHECK(std::abs(r2 - 1.0) < 1e-12);
      CHECK(ds.x(i, 2) > 0.0);
    } else {
      CHECK(std::abs(r2 - 4.0) < 1e-12);
      CHECK(ds.x(i, 2) < 0.0);
    }
  }

  // Threshold-sweep oracle on the default noisy config: some x3 threshold
  // separates the classes perfectly.
  CirclesConfig noisy;
  noisy.seed = 1;
  Dataset nds = sample_concentric_circles(noisy);
  double min0 = 1e300, max1 = -1e300;
  for (Index i = 0; i < nds.size(); ++i) {
    if (nds.labels[static_cast<std::size_t>(i)] == 0)
      min0 = std::min(min0, nds.x(i, 2));
    else
      max1 = std::max(max1, nds.x(i, 2));
  }
  CHECK(min0 > max1);

  Dataset again = sample_concentric_circles(noisy);
  CHECK((again.x.array() == nds.x.array()).all());
}

TEST_CASE("TADS round trip and error paths") {
  HemisphereConfig cfg;
  cfg.ambient_dim = 7;
  cfg.train_size = 9;
  cfg.test_size = 3;
  cfg.seed = 77;
  Dataset ds = sample_hemisphere(cfg).train;
  auto tmp = std::filesystem::temp_directory_path();
  auto path = (tmp / "tart_roundtrip.tads").string();
  save_dataset(ds, path);
  Dataset back = load_dataset(path);
  CHECK(back.num_classes == ds.num_classes);
  CHECK((back.x.array() == ds.x.array()).all());
  CHECK((back.latent.array() == ds.latent.array()).all());
  CHECK(back.labels == ds.labels);
  REQUIRE(back.has_tangents());
  for (Index i = 0; i < ds.size(); ++i)
    CHECK((back.tangents[static_cast<std::size_t>(i)].array() ==
           ds.tangents[static_cast<std::size_t>(i)].array())
              .all());

  // Truncation must surface as FormatError, not a crash.
  std::ifstream in(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();
  auto cut = (tmp / "tart_cut.tads").string();
  std::ofstream out(cut, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  out.close();
  CHECK_THROWS_AS(load_dataset(cut), FormatError);

  auto bad = (tmp / "tart_bad.tads").string();
  std::ofstream bout(bad, std::ios::binary);
  bout << "NOPE";
  bout.close();
  CHECK_THROWS_AS(load_dataset(bad), FormatError);

  std::filesystem::remove(path);
  std::filesystem::remove(cut);
  std::filesystem::remove(bad);
}

}  // TEST_SUITE

#include "tart/dataset.hpp"

#include <cmath>

#include "tart/io.hpp"
#include "tart/rng.hpp"

namespace tart::dataset {

namespace {

constexpr char kMagic[4] = {'T', 'A', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagTangents = 1u;
constexpr double kTwoPi = 2.0 * EIGEN_PI;

Dataset sample_hemisphere_split(const Matrix& frame, Index n, int c, Rng&& base) {
  const Index d = frame.rows();
  Dataset ds;
  ds.num_classes = c;
  ds.x.resize(n, d);
  ds.latent.resize(n, 3);
  ds.labels.resize(static_cast<std::size_t>(n));
  ds.tangents.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    // Area-uniform on the upper hemisphere: z3 ~ U[0,1], azimuth ~ U[0,2π).
    double z3 = base.uniform01();
    double phi = base.uniform(0.0, kTwoPi);
    double s = std::sqrt(std::max(0.0, 1.0 - z3 * z3));
    Vector z(3);
    z << s * std::cos(phi), s * std::sin(phi), z3;
    ds.latent.row(i) = z.transpose();
    ds.x.row(i) = (frame * z).transpose();
    ds.labels[static_cast<std::size_t>(i)] = hemisphere_label(z, c);
    ds.tangents.push_back(exact_tangent(z, frame));
  }
  return ds;
}

}  // namespace

Matrix random_orthonormal_frame(Index d, Index cols, std::uint64_t seed) {
  require_dims(cols >= 1 && cols <= d, "random_orthonormal_frame: need 1 <= cols <= d");
  Rng rng(seed);
  Matrix g = rng.normal_matrix(d, cols);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(d, cols);
  Matrix r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  // Positive R diagonal makes the factorization (and hence the frame) unique.
  for (Index j = 0; j < cols; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

int hemisphere_label(const Vector& z, int num_classes) {
  require_dims(z.size() == 3, "hemisphere_label: latent point must be 3-dimensional");
  double az = std::atan2(z[1], z[0]);
  if (az < 0.0) az += kTwoPi;
  int label = static_cast<int>(std::floor(num_classes * az / kTwoPi));
  if (label >= num_classes) label = num_classes - 1;  // az rounding at 2π
  if (label < 0) label = 0;
  return label;
}

Matrix exact_tangent(const Vector& z, const Matrix& frame) {
  require_dims(z.size() == 3 && frame.cols() == 3, "exact_tangent: frame must be d×3");
  Index skip = 0;
  z.cwiseAbs().maxCoeff(&skip);
  Matrix u(3, 2);
  Index col = 0;
  for (Index axis = 0; axis < 3; ++axis) {
    if (axis == skip) continue;
    Vector e = Vector::Zero(3);
    e[axis] = 1.0;
    Vector t = e - e.dot(z) * z;
    for (Index j = 0; j < col; ++j) t -= t.dot(u.col(j)) * u.col(j);
    u.col(col++) = t / t.norm();
  }
  return frame * u;
}

HemisphereSample sample_hemisphere(const HemisphereConfig& cfg) {
  require_dims(cfg.ambient_dim >= 3, "hemisphere: ambient_dim must be at least 3");
  if (cfg.num_classes < 2) throw ConfigError("hemisphere: num_classes must be at least 2");
  if (cfg.train_size < 1 || cfg.test_size < 1)
    throw ConfigError("hemisphere: train and test sizes must be positive");
  HemisphereSample s;
  s.frame = random_orthonormal_frame(cfg.ambient_dim, 3,
                                     Rng::stream(cfg.seed, kStreamFrame).next_u64());
  s.train = sample_hemisphere_split(s.frame, cfg.train_size, cfg.num_classes,
                                    Rng::stream(cfg.seed, kStreamTrainSplit));
  s.test = sample_hemisphere_split(s.frame, cfg.test_size, cfg.num_classes,
                                   Rng::stream(cfg.seed, kStreamTestSplit));
  return s;
}

Dataset sample_concentric_circles(const CirclesConfig& cfg) {
  if (!(cfg.radius_inner < cfg.radius_outer))
    throw ConfigError("circles: radius_inner must be below radius_outer");
  if (cfg.per_class < 1) throw ConfigError("circles: per_class must be positive");
  if (cfg.noise_std < 0.0) throw ConfigError("circles: noise_std must be nonnegative");
  const Index n = 2 * cfg.per_class;
  Dataset ds;
  ds.num_classes = 2;
  ds.x.resize(n, 3);
  ds.latent.resize(n, 3);
  ds.labels.resize(static_cast<std::size_t>(n));
  Rng rng(cfg.seed);
  for (Index i = 0; i < n; ++i) {
    int label = i < cfg.per_class ? 0 : 1;
    double r = label == 0 ? cfg.radius_inner : cfg.radius_outer;
    double x3 = label == 0 ? cfg.gap : -cfg.gap;
    double theta = rng.uniform(0.0, kTwoPi);
    Vector z(3);
    z << r * std::cos(theta), r * std::sin(theta), x3;
    Vector noise(3);
    for (Index j = 0; j < 3; ++j) noise[j] = cfg.noise_std * rng.normal();
    ds.latent.row(i) = z.transpose();
    ds.x.row(i) = (z + noise).transpose();
    ds.labels[static_cast<std::size_t>(i)] = label;
  }
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  const Index n = ds.size();
  const Index d = ds.dim();
  if (ds.has_tangents() && static_cast<Index>(ds.tangents.size()) != n)
    throw DimensionMismatch("save_dataset: tangent count must match example count");
  BinaryWriter w(path);
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(d));
  w.u32(static_cast<std::uint32_t>(ds.num_classes));
  w.u64(static_cast<std::uint64_t>(n));
  w.u32(ds.has_tangents() ? kFlagTangents : 0u);
  for (Index i = 0; i < n; ++i) {
    w.u32(static_cast<std::uint32_t>(ds.labels[static_cast<std::size_t>(i)]));
    for (Index j = 0; j < d; ++j) w.f64(ds.x(i, j));
    for (Index j = 0; j < 3; ++j) w.f64(ds.latent(i, j));
    if (ds.has_tangents()) w.matrix(ds.tangents[static_cast<std::size_t>(i)]);
  }
  w.close();
}

Dataset load_dataset(const std::string& path) {
  BinaryReader r(path);
  r.expect_magic(kMagic, "TADS");
  std::uint32_t version = r.u32();
  if (version != kVersion) throw FormatError("unsupported TADS version");
  const Index d = static_cast<Index>(r.u32());
  const int c = static_cast<int>(r.u32());
  const Index n = static_cast<Index>(r.u64());
  const std::uint32_t flags = r.u32();
  if (d < 1 || c < 2 || n < 1) throw FormatError("TADS header out of range");
  Dataset ds;
  ds.num_classes = c;
  ds.x.resize(n, d);
  ds.latent.resize(n, 3);
  ds.labels.resize(static_cast<std::size_t>(n));
  const bool tangents = (flags & kFlagTangents) != 0;
  if (tangents) ds.tangents.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    std::uint32_t label = r.u32();
    if (label >= static_cast<std::uint32_t>(c)) throw FormatError("TADS label out of range");
    ds.labels[static_cast<std::size_t>(i)] = static_cast<int>(label);
    for (Index j = 0; j < d; ++j) ds.x(i, j) = r.f64();
    for (Index j = 0; j < 3; ++j) ds.latent(i, j) = r.f64();
    if (tangents) ds.tangents.push_back(r.matrix(d, 2));
  }
  require_finite(ds.x, "load_dataset");
  require_finite(ds.latent, "load_dataset");
  return ds;
}

}  // namespace tart::dataset

#pragma once

#include <cmath>
#include <vector>

#include "tart/types.hpp"

namespace tart::linalg {

/// Gram-matrix condition number above which a basis is treated as rank
/// deficient. Shared policy: a degenerate tangent estimate is an error,
/// never silently regularized.
inline constexpr double kCondLimit = 1e12;

/// Factored orthogonal projector onto the column space of `basis`.
/// Stores (A, A(AᵀA)⁻¹): applying left_factor · (basisᵀ v) projects v
/// using 2·d·k flops instead of materializing the d×d projector.
struct ProjectorFactors {
  Matrix basis;        // A, d×k
  Matrix left_factor;  // A (AᵀA)⁻¹, d×k
};

namespace detail {

/// Eigenvalues of the k×k Gram matrix AᵀA, ascending. Throws RankDeficient
/// when the condition number exceeds kCondLimit (or the matrix is singular).
template <class Derived>
Vector checked_gram_eigs(const Eigen::MatrixBase<Derived>& a,
                         Eigen::SelfAdjointEigenSolver<Matrix>& solver) {
  Matrix gram = a.transpose() * a;
  solver.compute(gram);
  Vector eigs = solver.eigenvalues();
  double lo = eigs[0];
  double hi = eigs[eigs.size() - 1];
  if (!(lo > 0.0) || hi / lo > kCondLimit)
    throw RankDeficient("basis is rank deficient (Gram condition number over 1e12)");
  return eigs;
}

}  // namespace detail

/// Builds the projector factors for a full-column-rank d×k basis.
template <class Derived>
ProjectorFactors projector_factors(const Eigen::MatrixBase<Derived>& a) {
  require_dims(a.cols() >= 1 && a.cols() <= a.rows(), "projector_factors: need 1 <= k <= d");
  require_finite(a, "projector_factors");
  Eigen::SelfAdjointEigenSolver<Matrix> solver;
  Vector eigs = detail::checked_gram_eigs(a, solver);
  // (AᵀA)⁻¹ from the spectral factorization of the k×k Gram matrix.
  Matrix gram_inv = solver.eigenvectors() * eigs.cwiseInverse().asDiagonal() *
                    solver.eigenvectors().transpose();
  ProjectorFactors f;
  f.basis = a;
  f.left_factor = a * gram_inv;
  return f;
}

/// Applies the projector: Π v = left_factor (basisᵀ v).
template <class Derived>
Vector project(const ProjectorFactors& f, const Eigen::MatrixBase<Derived>& v) {
  require_dims(v.size() == f.basis.rows(), "project: vector length must match basis rows");
  return f.left_factor * (f.basis.transpose() * v);
}

/// Unit-norm direction of maximal variance of the rows of `x` (l×d), after
/// subtracting the row mean. Sign is fixed so the entry of largest magnitude
/// is positive. Works through the l×l Gram matrix, so cost is O(l²d) even
/// for large ambient dimension.
template <class Derived>
Vector first_principal_component(const Eigen::MatrixBase<Derived>& x) {
  const Index l = x.rows();
  require_dims(l >= 2, "first_principal_component: need at least two rows");
  require_finite(x, "first_principal_component");
  Matrix centered = x.rowwise() - x.colwise().mean();
  if (centered.rowwise().norm().maxCoeff() <= 1e-14)
    throw DegenerateSamples("first_principal_component: all rows identical");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(centered * centered.transpose());
  // Top eigenvector of the Gram matrix maps back to the ambient direction.
  Vector w = solver.eigenvectors().col(l - 1);
  Vector v = centered.transpose() * w;
  double n = v.norm();
  if (!(n > 0.0)) throw DegenerateSamples("first_principal_component: zero variance");
  v /= n;
  Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v[imax] < 0.0) v = -v;
  return v;
}

/// Canonical angles (radians, nondecreasing, in [0, π/2]) between the column
/// spaces of two full-rank d×k bases. Small angles come from the sine route
/// (residual of one orthonormal basis against the other); acos alone cannot
/// resolve angles below ~1e-8.
template <class DerivedU, class DerivedV>
std::vector<double> principal_angles(const Eigen::MatrixBase<DerivedU>& u,
                                     const Eigen::MatrixBase<DerivedV>& v) {
  require_dims(u.rows() == v.rows(), "principal_angles: ambient dimensions differ");
  require_dims(u.cols() == v.cols(), "principal_angles: subspace dimensions differ");
  Eigen::SelfAdjointEigenSolver<Matrix> solver;
  detail::checked_gram_eigs(u, solver);
  detail::checked_gram_eigs(v, solver);
  const Index k = u.cols();
  Eigen::HouseholderQR<Matrix> qr_u(u);
  Matrix qu = qr_u.householderQ() * Matrix::Identity(u.rows(), k);
  Eigen::HouseholderQR<Matrix> qr_v(v);
  Matrix qv = qr_v.householderQ() * Matrix::Identity(v.rows(), k);
  Matrix overlap = qu.transpose() * qv;
  Eigen::JacobiSVD<Matrix> svd_cos(overlap);
  Eigen::JacobiSVD<Matrix> svd_sin(qv - qu * overlap);
  auto clamp01 = [](double x) { return std::min(1.0, std::max(0.0, x)); };
  std::vector<double> angles(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) {
    // Cosines descend and sines ascend as the angle grows, so index i of
    // the cosine spectrum pairs with index k-1-i of the sine spectrum.
    double c = clamp01(svd_cos.singularValues()[i]);
    double s = clamp01(svd_sin.singularValues()[k - 1 - i]);
    angles[static_cast<std::size_t>(i)] = c * c > 0.5 ? std::asin(s) : std::acos(c);
  }
  return angles;
}

}  // namespace tart::linalg

#pragma once

// Small dense Hermitian linear algebra for the per-site work: matrices are at
// most 4x4 complex (the complex dimension) or 8x8 real (the real Hessian).

#include <complex>

#include <Eigen/Core>
#include <Eigen/Cholesky>

namespace hqlab {

using cplx = std::complex<double>;

inline constexpr int kMaxComplexDim = 4;
inline constexpr int kMaxRealDim = 2 * kMaxComplexDim;

using CMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                           kMaxComplexDim, kMaxComplexDim>;
using CVec = Eigen::Matrix<cplx, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxComplexDim, 1>;
using RMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                           kMaxRealDim, kMaxRealDim>;
using RVec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxRealDim, 1>;

/// Eigen-decomposition of a Hermitian (or real symmetric) matrix.
/// `values` are sorted descending; column k of `vectors` belongs to values[k].
template <class Mat>
struct EigenDecomposition {
  RVec values;
  Mat vectors;
  int sweeps = 0;
};

/// Cyclic Jacobi eigensolver. Converges when the off-diagonal Frobenius mass
/// drops below 1e-15 of the total (or after 60 sweeps).
EigenDecomposition<CMat> jacobi_eigen(const CMat& a, bool want_vectors = true);
EigenDecomposition<RMat> jacobi_eigen(const RMat& a, bool want_vectors = true);

/// Hermitian-ness to a relative tolerance.
bool is_hermitian(const CMat& a, double rel_tol = 1e-12);

/// Cholesky factor of a constant positive definite metric, cached for the
/// generalized problem A v = lambda g v.
class MetricFactor {
 public:
  explicit MetricFactor(const CMat& g);

  int dim() const noexcept { return static_cast<int>(g_.rows()); }
  const CMat& metric() const noexcept { return g_; }
  const CMat& inverse() const noexcept { return g_inv_; }
  bool is_identity() const noexcept { return identity_; }
  double determinant() const noexcept { return det_; }

  /// L^{-1} A L^{-*}: the standard Hermitian problem with the same spectrum.
  CMat reduce(const CMat& a) const;
  /// Maps eigenvectors of the reduced problem back: V = L^{-*} W, so that
  /// V^* g V = I.
  CMat lift(const CMat& w) const;

 private:
  CMat g_;
  CMat lower_;
  CMat g_inv_;
  double det_ = 1.0;
  bool identity_ = false;
};

/// Eigenvalues (descending) and g-unitary eigenvectors of A relative to g.
EigenDecomposition<CMat> generalized_eigen(const CMat& a, const MetricFactor& g,
                                           bool want_vectors = true);

/// Determinant of a Hermitian positive definite matrix via Cholesky; throws
/// DomainError if the matrix is not positive definite.
double hermitian_pd_det(const CMat& a);

}  // namespace hqlab

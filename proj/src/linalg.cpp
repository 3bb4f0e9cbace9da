#include "hqlab/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "hqlab/errors.hpp"

namespace hqlab {
namespace {

inline double conj_of(double x) { return x; }
inline cplx conj_of(const cplx& z) { return std::conj(z); }
inline double real_of(double x) { return x; }
inline double real_of(const cplx& z) { return z.real(); }

// Unit-modulus phase of an off-diagonal entry.
inline double phase_of(double x) { return x < 0.0 ? -1.0 : 1.0; }
inline cplx phase_of(const cplx& z) { return z / std::abs(z); }

template <class Mat>
EigenDecomposition<Mat> jacobi_impl(Mat a, bool want_vectors) {
  using Scalar = typename Mat::Scalar;
  const int n = static_cast<int>(a.rows());
  EigenDecomposition<Mat> out;
  Mat v = Mat::Identity(n, n);

  const double total = a.squaredNorm();
  int sweep = 0;
  for (; sweep < 60; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (off <= 1e-30 * total || off == 0.0) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double r = std::abs(a(p, q));
        if (r == 0.0) continue;
        const Scalar ph = phase_of(a(p, q));
        const double app = real_of(a(p, p));
        const double aqq = real_of(a(q, q));
        // Real 2x2 Jacobi rotation on [[app, r], [r, aqq]] after rotating
        // the phase of a(p,q) away.
        const double theta = (aqq - app) / (2.0 * r);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // Unitary U acting on columns p, q:
        //   U_pp = c, U_pq = s, U_qp = -s conj(ph), U_qq = c conj(ph)
        const Scalar uqp = -s * conj_of(ph);
        const Scalar uqq = c * conj_of(ph);
        for (int k = 0; k < n; ++k) {  // A <- A U
          const Scalar akp = a(k, p);
          const Scalar akq = a(k, q);
          a(k, p) = c * akp + akq * uqp;
          a(k, q) = s * akp + akq * uqq;
        }
        for (int k = 0; k < n; ++k) {  // A <- U^* A
          const Scalar apk = a(p, k);
          const Scalar aqk = a(q, k);
          a(p, k) = c * apk + conj_of(uqp) * aqk;
          a(q, k) = s * apk + conj_of(uqq) * aqk;
        }
        a(p, q) = Scalar(0.0);
        a(q, p) = Scalar(0.0);
        a(p, p) = Scalar(real_of(a(p, p)));
        a(q, q) = Scalar(real_of(a(q, q)));
        if (want_vectors) {
          for (int k = 0; k < n; ++k) {
            const Scalar vkp = v(k, p);
            const Scalar vkq = v(k, q);
            v(k, p) = c * vkp + vkq * uqp;
            v(k, q) = s * vkp + vkq * uqq;
          }
        }
      }
    }
  }

  std::array<int, kMaxRealDim> order{};
  std::iota(order.begin(), order.begin() + n, 0);
  std::sort(order.begin(), order.begin() + n,
            [&](int i, int j) { return real_of(a(i, i)) > real_of(a(j, j)); });
  out.values.resize(n);
  for (int k = 0; k < n; ++k) out.values(k) = real_of(a(order[k], order[k]));
  if (want_vectors) {
    out.vectors.resize(n, n);
    for (int k = 0; k < n; ++k) out.vectors.col(k) = v.col(order[k]);
  }
  out.sweeps = sweep;
  return out;
}

}  // namespace

EigenDecomposition<CMat> jacobi_eigen(const CMat& a, bool want_vectors) {
  return jacobi_impl(a, want_vectors);
}

EigenDecomposition<RMat> jacobi_eigen(const RMat& a, bool want_vectors) {
  return jacobi_impl(a, want_vectors);
}

bool is_hermitian(const CMat& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = 1.0 + a.norm();
  return (a - a.adjoint()).norm() <= rel_tol * scale;
}

MetricFactor::MetricFactor(const CMat& g) : g_(g) {
  if (g.rows() != g.cols() || g.rows() < 1 || g.rows() > kMaxComplexDim)
    throw ArgumentError("metric must be square with dimension in [1, 4]");
  if (!is_hermitian(g)) throw ArgumentError("metric is not Hermitian");
  Eigen::LLT<CMat> llt(g);
  if (llt.info() != Eigen::Success)
    throw DomainError("metric is not positive definite");
  lower_ = llt.matrixL();
  for (int i = 0; i < lower_.rows(); ++i)
    if (!(lower_(i, i).real() > 0.0)) throw DomainError("metric is not positive definite");
  const int n = static_cast<int>(g.rows());
  g_inv_ = llt.solve(CMat::Identity(n, n));
  det_ = 1.0;
  for (int i = 0; i < n; ++i) det_ *= std::norm(lower_(i, i));
  identity_ = (g - CMat::Identity(n, n)).norm() == 0.0;
}

CMat MetricFactor::reduce(const CMat& a) const {
  if (identity_) return a;
  const auto l = lower_.triangularView<Eigen::Lower>();
  CMat y = l.solve(a);                        // L^{-1} A
  CMat z = l.solve(y.adjoint().eval());       // L^{-1} (L^{-1} A)^* = L^{-1} A L^{-*}
  return z.adjoint();                         // Hermitian; adjoint keeps orientation
}

CMat MetricFactor::lift(const CMat& w) const {
  if (identity_) return w;
  return lower_.adjoint().triangularView<Eigen::Upper>().solve(w);
}

EigenDecomposition<CMat> generalized_eigen(const CMat& a, const MetricFactor& g,
                                           bool want_vectors) {
  auto dec = jacobi_eigen(g.reduce(a), want_vectors);
  if (want_vectors) dec.vectors = g.lift(dec.vectors);
  return dec;
}

double hermitian_pd_det(const CMat& a) {
  Eigen::LLT<CMat> llt(a);
  if (llt.info() != Eigen::Success) throw DomainError("matrix is not positive definite");
  const CMat l = llt.matrixL();
  double det = 1.0;
  for (int i = 0; i < l.rows(); ++i) det *= std::norm(l(i, i));
  return det;
}

}  // namespace hqlab

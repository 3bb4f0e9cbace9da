#pragma once

// Elementary symmetric polynomials and the Hessian-quotient operator
//   f(lambda) = (sigma_n(lambda) / sigma_{n-m}(lambda))^{1/m}
// together with its inverse form G = -sigma_m(1/lambda) and the second
// derivative quadratic form of G in a diagonal frame.

#include <array>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <span>
#include <vector>

#include "hqlab/linalg.hpp"

namespace hqlab {

inline constexpr int kMaxSpectrumDim = 8;

/// Eigenvalue vector lambda in R^n.
class SpectrumVec {
 public:
  SpectrumVec() = default;
  explicit SpectrumVec(int n, double fill = 0.0);
  SpectrumVec(std::initializer_list<double> values);
  explicit SpectrumVec(std::span<const double> values);

  int size() const noexcept { return n_; }
  double operator[](int i) const noexcept { return v_[static_cast<std::size_t>(i)]; }
  double& operator[](int i) noexcept { return v_[static_cast<std::size_t>(i)]; }
  std::span<const double> values() const noexcept { return {v_.data(), static_cast<std::size_t>(n_)}; }
  std::span<double> values() noexcept { return {v_.data(), static_cast<std::size_t>(n_)}; }

  /// Strictly inside the positive cone Gamma_n (no tolerance).
  bool in_cone() const noexcept;
  /// Inside the closure of Gamma_n.
  bool in_closed_cone() const noexcept;
  double min() const noexcept;
  double max() const noexcept;
  double norm() const noexcept;

  SpectrumVec shifted(double delta) const;  // lambda + delta * (1, ..., 1)
  SpectrumVec scaled(double t) const;
  SpectrumVec plus_basis(int i, double t) const;  // lambda + t e_i

 private:
  std::array<double, kMaxSpectrumDim> v_{};
  int n_ = 0;
};

/// Quotient order m in [1, n] for complex dimension n.
struct QuotientParams {
  int n = 1;
  int m = 1;

  QuotientParams() = default;
  QuotientParams(int n_, int m_);

  /// binomial(n, m), the constant relating psi to h^m.
  double binom() const noexcept;
};

double binomial(int n, int k);

/// sigma_k(lambda) with the entries listed in `excluded` set to zero.
/// sigma_0 = 1; k < 0 or k above the number of remaining entries gives 0.
double sigma(const SpectrumVec& lambda, int k, std::span<const int> excluded = {});
double sigma(const SpectrumVec& lambda, int k, std::initializer_list<int> excluded);

/// sigma_0 .. sigma_n of lambda.
std::array<double, kMaxSpectrumDim + 1> all_sigmas(const SpectrumVec& lambda);

double f_quotient(const SpectrumVec& lambda, const QuotientParams& p);
SpectrumVec grad_f(const SpectrumVec& lambda, const QuotientParams& p);

/// d/dlambda_i log(sigma_n / sigma_{n-m}) = sigma_{n-1;i}/sigma_n - sigma_{n-m-1;i}/sigma_{n-m}.
/// Equals m f_i / f; strictly positive on Gamma_n.
SpectrumVec log_quotient_gradient(const SpectrumVec& lambda, const QuotientParams& p);

/// G = -sigma_m(1/lambda_1, ..., 1/lambda_n).
double g_operator(const SpectrumVec& lambda, const QuotientParams& p);
/// Diagonal derivatives G^{ii} = sigma_{m-1;i}(tau) tau_i^2 with tau = 1/lambda.
SpectrumVec g_diagonal_derivative(const SpectrumVec& lambda, const QuotientParams& p);

/// lim_{t->inf} f(lambda + t e_i); +infinity when m == n.
double directional_limit(const SpectrumVec& lambda, int i, const QuotientParams& p);
/// lim_{t->inf} f(t lambda). Always +infinity on Gamma_n (f is 1-homogeneous
/// and positive); kept separate from the coordinate limit above.
double ray_limit(const SpectrumVec& lambda, const QuotientParams& p);

/// Second-derivative data of G at a diagonal matrix diag(lambda).
class HessQuadForm {
 public:
  HessQuadForm(const SpectrumVec& base, const QuotientParams& p);

  const SpectrumVec& base() const noexcept { return base_; }
  const QuotientParams& params() const noexcept { return p_; }
  /// sigma_{m-1;i}(tau)
  double sigma_m1(int i) const noexcept { return sm1_[static_cast<std::size_t>(i)]; }
  /// sigma_{m-2;ik}(tau)
  double sigma_m2(int i, int k) const noexcept {
    return sm2_[static_cast<std::size_t>(i * kMaxSpectrumDim + k)];
  }
  /// Largest relative deviation of the cached coefficients from a fresh
  /// evaluation.
  double cache_deviation() const;

  /// -G^{ik,jl} V_{ik} conj(V_{jl}) for Hermitian V; nonnegative on Gamma_n.
  double evaluate(const CMat& v) const;

 private:
  SpectrumVec base_;
  SpectrumVec tau_;
  QuotientParams p_;
  std::array<double, kMaxSpectrumDim> sm1_{};
  std::array<double, kMaxSpectrumDim * kMaxSpectrumDim> sm2_{};
};

double g_hessian_quadform(const HessQuadForm& q, const CMat& v);

/// sum_i sigma_{m-1;i}(tau)/tau_i |xi_i|^2 + sum_{i != k} sigma_{m-2;ik}(tau) xi_i conj(xi_k).
double glz_quadratic_form(const SpectrumVec& tau, std::span<const cplx> xi, int m);

}  // namespace hqlab

#include "hqlab/symfunc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hqlab/errors.hpp"

namespace hqlab {

SpectrumVec::SpectrumVec(int n, double fill) : n_(n) {
  if (n < 1 || n > kMaxSpectrumDim)
    throw ArgumentError("spectrum length must be in [1, " + std::to_string(kMaxSpectrumDim) + "]");
  std::fill(v_.begin(), v_.begin() + n, fill);
}

SpectrumVec::SpectrumVec(std::initializer_list<double> values)
    : SpectrumVec(std::span<const double>(values.begin(), values.size())) {}

SpectrumVec::SpectrumVec(std::span<const double> values) {
  if (values.empty() || values.size() > static_cast<std::size_t>(kMaxSpectrumDim))
    throw ArgumentError("spectrum length must be in [1, " + std::to_string(kMaxSpectrumDim) + "]");
  n_ = static_cast<int>(values.size());
  std::copy(values.begin(), values.end(), v_.begin());
}

bool SpectrumVec::in_cone() const noexcept {
  for (int i = 0; i < n_; ++i)
    if (!(v_[static_cast<std::size_t>(i)] > 0.0)) return false;
  return n_ > 0;
}

bool SpectrumVec::in_closed_cone() const noexcept {
  for (int i = 0; i < n_; ++i)
    if (!(v_[static_cast<std::size_t>(i)] >= 0.0)) return false;
  return n_ > 0;
}

double SpectrumVec::min() const noexcept { return *std::min_element(v_.begin(), v_.begin() + n_); }
double SpectrumVec::max() const noexcept { return *std::max_element(v_.begin(), v_.begin() + n_); }

double SpectrumVec::norm() const noexcept {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += v_[static_cast<std::size_t>(i)] * v_[static_cast<std::size_t>(i)];
  return std::sqrt(s);
}

SpectrumVec SpectrumVec::shifted(double delta) const {
  SpectrumVec out(*this);
  for (int i = 0; i < n_; ++i) out[i] += delta;
  return out;
}

SpectrumVec SpectrumVec::scaled(double t) const {
  SpectrumVec out(*this);
  for (int i = 0; i < n_; ++i) out[i] *= t;
  return out;
}

SpectrumVec SpectrumVec::plus_basis(int i, double t) const {
  SpectrumVec out(*this);
  out[i] += t;
  return out;
}

QuotientParams::QuotientParams(int n_, int m_) : n(n_), m(m_) {
  if (n < 1 || n > kMaxSpectrumDim) throw ArgumentError("dimension n out of range");
  if (m < 1 || m > n) throw ArgumentError("quotient order m must satisfy 1 <= m <= n");
}

double QuotientParams::binom() const noexcept { return binomial(n, m); }

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

namespace {

// e_0..e_kmax over the entries of lambda not flagged in `skip`.
template <class Skip>
double sigma_recurrence(const SpectrumVec& lambda, int k, Skip skip) {
  if (k < 0) return 0.0;
  std::array<double, kMaxSpectrumDim + 1> e{};
  e[0] = 1.0;
  int count = 0;
  for (int j = 0; j < lambda.size(); ++j) {
    if (skip(j)) continue;
    ++count;
    const double x = lambda[j];
    for (int kk = std::min(k, count); kk >= 1; --kk) e[static_cast<std::size_t>(kk)] += x * e[static_cast<std::size_t>(kk - 1)];
  }
  return k > count ? 0.0 : e[static_cast<std::size_t>(k)];
}

void check_interior(const SpectrumVec& lambda, const char* what) {
  if (!lambda.in_cone())
    throw DomainError(std::string(what) + ": spectrum is not in the positive cone");
}

void check_params(const SpectrumVec& lambda, const QuotientParams& p) {
  if (lambda.size() != p.n) throw ArgumentError("spectrum length does not match n");
}

}  // namespace

double sigma(const SpectrumVec& lambda, int k, std::span<const int> excluded) {
  const int n = lambda.size();
  if (k > n) throw ArgumentError("sigma: k exceeds the spectrum length");
  std::array<bool, kMaxSpectrumDim> skip{};
  for (int idx : excluded) {
    if (idx < 0 || idx >= n) throw ArgumentError("sigma: excluded index out of range");
    if (skip[static_cast<std::size_t>(idx)]) throw ArgumentError("sigma: excluded indices must be distinct");
    skip[static_cast<std::size_t>(idx)] = true;
  }
  return sigma_recurrence(lambda, k, [&](int j) { return skip[static_cast<std::size_t>(j)]; });
}

double sigma(const SpectrumVec& lambda, int k, std::initializer_list<int> excluded) {
  return sigma(lambda, k, std::span<const int>(excluded.begin(), excluded.size()));
}

std::array<double, kMaxSpectrumDim + 1> all_sigmas(const SpectrumVec& lambda) {
  std::array<double, kMaxSpectrumDim + 1> e{};
  e[0] = 1.0;
  const int n = lambda.size();
  for (int j = 0; j < n; ++j)
    for (int kk = j + 1; kk >= 1; --kk) e[static_cast<std::size_t>(kk)] += lambda[j] * e[static_cast<std::size_t>(kk - 1)];
  return e;
}

double f_quotient(const SpectrumVec& lambda, const QuotientParams& p) {
  check_params(lambda, p);
  if (!lambda.in_closed_cone())
    throw DomainError("f_quotient: spectrum is outside the closed positive cone");
  if (lambda.min() == 0.0) return 0.0;
  const auto e = all_sigmas(lambda);
  const double ratio = e[static_cast<std::size_t>(p.n)] / e[static_cast<std::size_t>(p.n - p.m)];
  return p.m == 1 ? ratio : std::pow(ratio, 1.0 / p.m);
}

SpectrumVec log_quotient_gradient(const SpectrumVec& lambda, const QuotientParams& p) {
  check_params(lambda, p);
  check_interior(lambda, "log_quotient_gradient");
  const int n = p.n;
  const auto e = all_sigmas(lambda);
  const double s_low = e[static_cast<std::size_t>(n - p.m)];
  SpectrumVec out(n);
  for (int i = 0; i < n; ++i) {
    // sigma_{n-1;i}/sigma_n = 1/lambda_i exactly on the open cone.
    const double low_i = sigma_recurrence(lambda, n - p.m - 1, [i](int j) { return j == i; });
    out[i] = 1.0 / lambda[i] - low_i / s_low;
  }
  return out;
}

SpectrumVec grad_f(const SpectrumVec& lambda, const QuotientParams& p) {
  const SpectrumVec c = log_quotient_gradient(lambda, p);
  const double f = f_quotient(lambda, p);
  SpectrumVec out(p.n);
  for (int i = 0; i < p.n; ++i) out[i] = f / p.m * c[i];
  return out;
}

double g_operator(const SpectrumVec& lambda, const QuotientParams& p) {
  check_params(lambda, p);
  check_interior(lambda, "g_operator");
  SpectrumVec tau(p.n);
  for (int i = 0; i < p.n; ++i) tau[i] = 1.0 / lambda[i];
  return -sigma(tau, p.m);
}

SpectrumVec g_diagonal_derivative(const SpectrumVec& lambda, const QuotientParams& p) {
  check_params(lambda, p);
  check_interior(lambda, "g_diagonal_derivative");
  SpectrumVec tau(p.n);
  for (int i = 0; i < p.n; ++i) tau[i] = 1.0 / lambda[i];
  SpectrumVec out(p.n);
  for (int i = 0; i < p.n; ++i)
    out[i] = sigma_recurrence(tau, p.m - 1, [i](int j) { return j == i; }) * tau[i] * tau[i];
  return out;
}

double directional_limit(const SpectrumVec& lambda, int i, const QuotientParams& p) {
  check_params(lambda, p);
  check_interior(lambda, "directional_limit");
  if (i < 0 || i >= p.n) throw ArgumentError("directional_limit: index out of range");
  if (p.m == p.n) return std::numeric_limits<double>::infinity();
  const auto skip_i = [i](int j) { return j == i; };
  const double top = sigma_recurrence(lambda, p.n - 1, skip_i);
  const double bottom = sigma_recurrence(lambda, p.n - p.m - 1, skip_i);
  const double ratio = top / bottom;
  return p.m == 1 ? ratio : std::pow(ratio, 1.0 / p.m);
}

double ray_limit(const SpectrumVec& lambda, const QuotientParams& p) {
  check_params(lambda, p);
  check_interior(lambda, "ray_limit");
  return std::numeric_limits<double>::infinity();
}

HessQuadForm::HessQuadForm(const SpectrumVec& base, const QuotientParams& p)
    : base_(base), tau_(base.size()), p_(p) {
  check_params(base, p);
  check_interior(base, "HessQuadForm");
  const int n = p.n;
  for (int i = 0; i < n; ++i) tau_[i] = 1.0 / base[i];
  for (int i = 0; i < n; ++i) {
    sm1_[static_cast<std::size_t>(i)] = sigma_recurrence(tau_, p.m - 1, [i](int j) { return j == i; });
    for (int k = 0; k < n; ++k) {
      sm2_[static_cast<std::size_t>(i * kMaxSpectrumDim + k)] =
          i == k ? 0.0 : sigma_recurrence(tau_, p.m - 2, [i, k](int j) { return j == i || j == k; });
    }
  }
}

double HessQuadForm::cache_deviation() const {
  const auto rel = [](double cached, double fresh) {
    const double scale = std::max(std::abs(fresh), 1e-300);
    return cached == fresh ? 0.0 : std::abs(cached - fresh) / scale;
  };
  double worst = 0.0;
  for (int i = 0; i < p_.n; ++i) {
    worst = std::max(worst, rel(sigma_m1(i), sigma(tau_, p_.m - 1, {i})));
    for (int k = 0; k < p_.n; ++k) {
      if (i == k) continue;
      worst = std::max(worst, rel(sigma_m2(i, k), p_.m - 2 < 0 ? 0.0 : sigma(tau_, p_.m - 2, {i, k})));
    }
  }
  return worst;
}

double HessQuadForm::evaluate(const CMat& v) const {
  const int n = p_.n;
  if (v.rows() != n || v.cols() != n) throw ArgumentError("perturbation has the wrong shape");
  if (!is_hermitian(v)) throw ArgumentError("perturbation is not Hermitian");
  double first = 0.0;
  double second = 0.0;
  for (int i = 0; i < n; ++i) {
    const double gii = sigma_m1(i) * tau_[i] * tau_[i];
    for (int k = 0; k < n; ++k) {
      const double vik2 = std::norm(v(i, k));
      if (i != k) {
        const double w = sigma_m2(i, k) * tau_[i] * tau_[i] * tau_[k] * tau_[k];
        first += w * (v(i, i).real() * v(k, k).real() - vik2);
      }
      second += gii * tau_[k] * vik2;
    }
  }
  return first + 2.0 * second;
}

double g_hessian_quadform(const HessQuadForm& q, const CMat& v) { return q.evaluate(v); }

double glz_quadratic_form(const SpectrumVec& tau, std::span<const cplx> xi, int m) {
  const int n = tau.size();
  if (static_cast<int>(xi.size()) != n) throw ArgumentError("glz form: length mismatch");
  if (m < 1 || m > n) throw ArgumentError("glz form: m out of range");
  check_interior(tau, "glz_quadratic_form");
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double s1 = sigma_recurrence(tau, m - 1, [i](int j) { return j == i; });
    total += s1 / tau[i] * std::norm(xi[static_cast<std::size_t>(i)]);
    for (int k = 0; k < n; ++k) {
      if (k == i) continue;
      const double s2 = sigma_recurrence(tau, m - 2, [i, k](int j) { return j == i || j == k; });
      total += s2 * (xi[static_cast<std::size_t>(i)] * std::conj(xi[static_cast<std::size_t>(k)])).real();
    }
  }
  return total;
}

}  // namespace hqlab

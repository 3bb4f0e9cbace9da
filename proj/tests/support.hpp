#pragma once

// Hand-rolled generators shared by the test suites.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "hqlab/linalg.hpp"
#include "hqlab/symfunc.hpp"

namespace hqtest {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : e_(seed) {}
  double uniform() { return (static_cast<double>(e_() >> 11) + 0.5) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int integer(int lo, int hi) { return lo + static_cast<int>(e_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  /// Log-uniform on [a, b], a > 0.
  double log_uniform(double a, double b) { return std::exp(uniform(std::log(a), std::log(b))); }
  double normal() {
    const double r = std::sqrt(-2.0 * std::log(uniform()));
    return r * std::cos(2.0 * std::numbers::pi * uniform());
  }

 private:
  std::mt19937_64 e_;
};

/// Point of the positive cone with entries spread over several decades.
inline hqlab::SpectrumVec cone_point(Rng& rng, int n, double lo = 1e-2, double hi = 1e2) {
  hqlab::SpectrumVec v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.log_uniform(lo, hi);
  return v;
}

inline hqlab::CMat random_hermitian(Rng& rng, int n, double scale = 1.0) {
  hqlab::CMat a(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = scale * rng.uniform(-1.0, 1.0);
    for (int j = i + 1; j < n; ++j) {
      a(i, j) = scale * hqlab::cplx(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
      a(j, i) = std::conj(a(i, j));
    }
  }
  return a;
}

inline hqlab::CMat random_pd(Rng& rng, int n) {
  hqlab::CMat b(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = hqlab::cplx(rng.normal(), rng.normal());
  hqlab::CMat a = b * b.adjoint();
  for (int i = 0; i < n; ++i) a(i, i) += 0.05;
  return a;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

}  // namespace hqtest

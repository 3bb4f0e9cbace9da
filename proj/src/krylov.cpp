#include "hqlab/krylov.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "hqlab/parallel.hpp"

namespace hqlab {

double dot(std::span<const double> a, std::span<const double> b) {
  return deterministic_sum(a.size(), [&](std::size_t i) { return a[i] * b[i]; });
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

namespace {

// y <- y + alpha x
void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  parallel_blocks(x.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) y[i] += alpha * x[i];
  });
}

}  // namespace

KrylovResult bicgstab(const LinearMap& apply, const LinearMap& precond, std::span<const double> rhs,
                      std::span<double> x, double rel_tol, int max_iters) {
  const std::size_t n = rhs.size();
  std::vector<double> r(n), r_hat(n), p(n, 0.0), v(n, 0.0), s(n), t(n), p_hat(n), s_hat(n);

  apply(x, r);
  parallel_blocks(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) r[i] = rhs[i] - r[i];
  });
  r_hat = r;

  KrylovResult res;
  const double bnorm = norm2(rhs);
  if (bnorm == 0.0) {
    for (double& xi : x) xi = 0.0;
    res.converged = true;
    return res;
  }
  double rnorm = norm2(r);
  res.relative_residual = rnorm / bnorm;
  if (res.relative_residual <= rel_tol) {
    res.converged = true;
    return res;
  }

  double rho = 1.0, alpha = 1.0, omega = 1.0;
  for (int it = 1; it <= max_iters; ++it) {
    res.iterations = it;
    double rho_new = dot(r_hat, r);
    if (rho_new == 0.0 || omega == 0.0) {
      // Breakdown: restart the shadow space from the current residual.
      r_hat = r;
      std::fill(p.begin(), p.end(), 0.0);
      std::fill(v.begin(), v.end(), 0.0);
      rho = alpha = omega = 1.0;
      rho_new = dot(r_hat, r);
    }
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    parallel_blocks(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    });
    precond(p, p_hat);
    apply(p_hat, v);
    const double rv = dot(r_hat, v);
    if (rv == 0.0) break;
    alpha = rho / rv;
    parallel_blocks(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) s[i] = r[i] - alpha * v[i];
    });
    const double snorm = norm2(s);
    if (snorm <= rel_tol * bnorm) {
      axpy(alpha, p_hat, x);
      res.relative_residual = snorm / bnorm;
      res.converged = true;
      return res;
    }
    precond(s, s_hat);
    apply(s_hat, t);
    const double tt = dot(t, t);
    omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
    parallel_blocks(n, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) {
        x[i] += alpha * p_hat[i] + omega * s_hat[i];
        r[i] = s[i] - omega * t[i];
      }
    });
    rnorm = norm2(r);
    res.relative_residual = rnorm / bnorm;
    if (res.relative_residual <= rel_tol) {
      res.converged = true;
      return res;
    }
  }
  return res;
}

}  // namespace hqlab

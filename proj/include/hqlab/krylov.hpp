#pragma once

// Right-preconditioned BiCGSTAB over plain grid vectors. All inner products
// use the block-ordered reductions, so iterates are reproducible bit for bit.

#include <functional>
#include <span>

namespace hqlab {

using LinearMap = std::function<void(std::span<const double> in, std::span<double> out)>;

struct KrylovResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
};

/// Solves A x = b starting from the contents of x. `precond` applies M in the
/// right-preconditioned form A M y = b, x = M y. Stops when
/// ||b - A x||_2 <= rel_tol * ||b||_2.
KrylovResult bicgstab(const LinearMap& apply, const LinearMap& precond, std::span<const double> rhs,
                      std::span<double> x, double rel_tol, int max_iters);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace hqlab

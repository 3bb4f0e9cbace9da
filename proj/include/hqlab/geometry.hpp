#pragma once

// Discrete geometry of the flat complex torus: the d d-bar operator by
// second-order central differences, chi_u = chi + d d-bar u, eigenvalues
// relative to the metric, and the C^0/C^1/C^2 quantities watched by the
// estimate probes.

#include <array>
#include <vector>

#include "hqlab/grid.hpp"
#include "hqlab/linalg.hpp"
#include "hqlab/symfunc.hpp"

namespace hqlab {

/// Symmetric 2n x 2n matrix of central second differences of u at a site,
/// stored densely row-major with leading dimension kMaxRealDim.
using RealHessian = std::array<double, kMaxRealDim * kMaxRealDim>;

RealHessian real_hessian_at(std::span<const double> u, const TorusGrid& grid, const SiteCursor& at);

/// d d-bar of u at one site from its real Hessian:
///   (i,j) -> 1/4 [(u_{xi xj} + u_{yi yj}) + sqrt(-1) (u_{xi yj} - u_{yi xj})].
CMat complex_hessian(const RealHessian& h, int n);

HermitianField ddbar(const ScalarField& u);

/// chi + ddbar(u); g is only checked for shape.
HermitianField assemble_gtilde(const HermitianField& chi, const HermitianField& g, const ScalarField& u);
HermitianField assemble_gtilde(const HermitianField& chi, const CMat& g, const ScalarField& u);

/// Generalized eigenvalues of (A, g), descending, per site.
std::vector<SpectrumVec> eigen_rel(const HermitianField& a, const HermitianField& g);
std::vector<SpectrumVec> eigen_rel(const HermitianField& a, const MetricFactor& g);

/// binom(n,m) sigma_n / sigma_{n-m} of the relative spectrum, per site.
ScalarField quotient_ratio(const HermitianField& gtilde, const HermitianField& g, const QuotientParams& p);
ScalarField quotient_ratio(const HermitianField& gtilde, const MetricFactor& g, const QuotientParams& p);

/// Quantities bounded by the a priori estimates, measured on w = u - ubar.
struct EstimateQuantities {
  double osc = 0.0;          // sup w - inf w
  double grad_sup = 0.0;     // sup |d w|_g, frame e_i = (d_x - sqrt(-1) d_y)/sqrt(2)
  double lambda1_sup = 0.0;  // sup of the largest eigenvalue of the real Hessian of w
  double l1_gap = 0.0;       // sum |w| h^{2n} det(g)
};

EstimateQuantities estimate_quantities(const ScalarField& u, const ScalarField& ubar, const MetricFactor& g);
EstimateQuantities estimate_quantities(const ScalarField& u, const ScalarField& ubar, const HermitianField& g);

/// Copy of u shifted to have zero mean / zero supremum.
ScalarField mean_zero(const ScalarField& u);
ScalarField sup_zero(const ScalarField& u);

/// Constant metric carried by a field; throws ArgumentError if it varies.
CMat constant_metric(const HermitianField& g);

}  // namespace hqlab

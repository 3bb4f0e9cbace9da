#pragma once

// Solvers for the Hessian quotient equation on the flat torus, written in log
// form
//   log( binom(n,m) sigma_n / sigma_{n-m} )(lambda(g^{-1}(chi + ddbar u))) = log psi + b
// with mean(u) = 0: damped Newton, the continuity path from a supersolution,
// and the explicit parabolic flow.

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hqlab/geometry.hpp"
#include "hqlab/grid.hpp"
#include "hqlab/linalg.hpp"
#include "hqlab/symfunc.hpp"

namespace hqlab {

/// Background form chi, constant metric g and quotient order on one grid.
class Equation {
 public:
  Equation(HermitianField chi, const CMat& g, const QuotientParams& p);

  const TorusGrid& grid() const noexcept { return chi_.grid(); }
  const HermitianField& chi() const noexcept { return chi_; }
  const MetricFactor& metric() const noexcept { return metric_; }
  const QuotientParams& params() const noexcept { return p_; }

  /// Same equation with chi replaced by chi + ddbar(v).
  Equation with_background(const ScalarField& v) const;

 private:
  HermitianField chi_;
  MetricFactor metric_;
  QuotientParams p_;
};

struct NewtonConfig {
  double tol_residual = 1e-10;
  int max_iters = 30;
  double damping = 0.5;
  double min_step = 0x1.0p-10;
  double linear_tol = 1e-12;
  int linear_max_iters = 4000;

  /// Throws ArgumentError unless every field is positive and damping < 1.
  void validate() const;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Backtracking reached the minimum step without an admissible iterate.
class NonAdmissibleStep : public SolverError {
 public:
  using SolverError::SolverError;
};

class NoConvergence : public SolverError {
 public:
  NoConvergence(const std::string& what, double residual)
      : SolverError(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

struct ContinuityState {
  double t = 0.0;
  ScalarField u_t;  // mean zero, relative to the background v
  double b_t = 0.0;
  int newton_iters = 0;
  double residual_inf = 0.0;
};

class ContinuationStuck : public SolverError {
 public:
  ContinuationStuck(const std::string& what, ContinuityState last)
      : SolverError(what), last_(std::move(last)) {}
  const ContinuityState& last_good() const noexcept { return last_; }

 private:
  ContinuityState last_;
};

class FlowBlowup : public SolverError {
 public:
  FlowBlowup(const std::string& what, double time)
      : SolverError(what + " (t = " + std::to_string(time) + ")"), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Sitewise log(quotient_ratio) - log(psi) - b. Throws NonAdmissibleError
/// naming the first inadmissible site.
ScalarField log_residual(const Equation& eq, const ScalarField& u, double b, const ScalarField& psi);

/// Same with log(psi) supplied directly.
ScalarField log_residual_from_log(const Equation& eq, const ScalarField& u, double b, const ScalarField& log_psi);

/// The derivative of log_residual at u, frozen as constant-per-site
/// coefficients of the real second differences:
///   (L xi)(s) = sum_a K_aa D_aa xi + 2 sum_{a<b} K_ab D_ab xi,
/// where A = V diag(c) V^* in the g-unitary eigenframe V of chi_u, c is the
/// gradient of log(sigma_n/sigma_{n-m}) and K is the real form of A / 4.
class Linearization {
 public:
  /// Coefficients at u; when log_psi is given the residual at (u, b) is
  /// computed in the same pass.
  Linearization(const Equation& eq, const ScalarField& u, const ScalarField* log_psi = nullptr, double b = 0.0);

  const TorusGrid& grid() const noexcept { return grid_; }
  void apply(std::span<const double> xi, std::span<double> out) const;
  ScalarField apply(const ScalarField& xi) const;

  /// Central entry of the stencil: -2 sum_a K_aa / h^2.
  const std::vector<double>& diagonal() const noexcept { return diag_; }
  /// Smallest eigenframe coefficient c_i over all sites (ellipticity margin).
  double min_coefficient() const noexcept { return min_coef_; }
  /// Explicit Euler step limit: 0.5 h^2 / max_s (2 sum_a K_aa + sum_{a<b} |K_ab|).
  double stability_dt() const noexcept { return stable_dt_; }
  /// Residual at (u, b), present only when log_psi was supplied.
  const std::optional<ScalarField>& residual() const noexcept { return residual_; }

 private:
  TorusGrid grid_;
  int d_;
  int packed_;
  std::vector<double> coef_;  // per site: K_aa (d entries) then 2 K_ab for a<b
  std::vector<double> diag_;
  double min_coef_ = 0.0;
  double stable_dt_ = 0.0;
  std::optional<ScalarField> residual_;
};

ScalarField linearized_apply(const Equation& eq, const ScalarField& u, const ScalarField& xi);

struct NewtonResult {
  ScalarField u;
  double b = 0.0;
  int iterations = 0;
  int linear_iterations = 0;
  double residual_inf = 0.0;
};

/// Damped Newton on (u, b) with mean(u) = 0.
NewtonResult newton_solve(const Equation& eq, const ScalarField& psi, const ScalarField& u0,
                          const NewtonConfig& cfg, double b0 = 0.0);
NewtonResult newton_solve_log(const Equation& eq, const ScalarField& log_psi, const ScalarField& u0,
                              const NewtonConfig& cfg, double b0 = 0.0);

struct ContinuityOptions {
  int steps = 20;
  int max_halvings = 10;
  /// Keep u_t in every returned state (otherwise only the last one).
  bool keep_fields = true;
  /// Called on every accepted state, including t = 0.
  std::function<void(const ContinuityState&)> observer;
};

struct ContinuityResult {
  std::vector<ContinuityState> states;
  /// max_s (log psi_tilde - log psi)^+ ; zero when v is a supersolution.
  double supersolution_violation = 0.0;
  /// Full solution v + u_1 shifted to sup = 0. The shift leaves chi_u and
  /// hence b unchanged.
  ScalarField u_final;
  double b = 0.0;
  double residual_inf = 0.0;
};

/// Marches t from 0 to 1 along psi_t = psi^t psi_tilde^{1-t} e^{b_t}, where
/// psi_tilde is the quotient of chi + ddbar v.
ContinuityResult continuity_run(const Equation& eq, const ScalarField& v, const ScalarField& psi,
                                const NewtonConfig& cfg, const ContinuityOptions& opts = {});

struct FlowState {
  double time = 0.0;
  ScalarField u;  // mean zero
  double dt = 0.0;
  double drift = 0.0;  // mean of the right-hand side; tends to b
  double residual_inf = 0.0;  // sup |rhs - drift|
  long steps = 0;
};

struct FlowOptions {
  double dt = 0.05;  // requested step; never above the stability limit
  double t_end = 200.0;
  double tol = 1e-8;
  int max_rejections = 4;
  long record_every = 0;  // observer cadence in steps; 0 disables
  std::function<void(const FlowState&)> observer;
};

/// Forward Euler for du/dt = log_residual(u, 0, psi), mean removed each step.
/// Throws ArgumentError if opts.dt exceeds the stability limit at u0.
FlowState flow_run(const Equation& eq, const ScalarField& u0, const ScalarField& psi, const FlowOptions& opts);

ScalarField log_field(const ScalarField& psi);

}  // namespace hqlab

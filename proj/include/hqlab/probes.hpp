#pragma once

// Per-step monitoring of the quantities controlled by the a priori
// estimates, plus the dichotomy census against a cone certificate.

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "hqlab/cone.hpp"
#include "hqlab/solver.hpp"

namespace hqlab {

struct EstimateRecord {
  int step = 0;
  double t = 0.0;
  double b_t = 0.0;
  double osc = 0.0;
  double l1_gap = 0.0;
  double grad_sup = 0.0;
  double lambda1_sup = 0.0;
  double spec_min = 0.0;
  double spec_max = 0.0;
  double branch1_frac = 0.0;
  double branch2_frac = 0.0;
  double small_frac = 0.0;
  double sum_Gii_min = 0.0;
  int newton_iters = 0;
  double residual_inf = 0.0;
};

/// Solver-independent view of one state. `u` is the full potential (the
/// background v already added).
struct Snapshot {
  int step = 0;
  double t = 0.0;
  double b = 0.0;
  const ScalarField* u = nullptr;
  int newton_iters = 0;
  double residual_inf = 0.0;
};

/// Never throws on bad states: quantities that cannot be evaluated are NaN.
/// Without a certificate the census fractions are NaN.
EstimateRecord record_step(const Equation& eq, const Snapshot& snap, const ScalarField& ubar,
                           const ConeCertificate* cert);

EstimateRecord record_step(const Equation& eq, const ContinuityState& state, int step, const ScalarField& v,
                           const ScalarField& ubar, const ConeCertificate* cert);
EstimateRecord record_step(const Equation& eq, const FlowState& state, const ScalarField& ubar,
                           const ConeCertificate* cert);

inline constexpr const char* kProbeCsvHeader =
    "step,t,b_t,osc,l1_gap,grad_sup,lambda1_sup,spec_min,spec_max,branch1_frac,branch2_frac,small_frac,"
    "sum_Gii_min,newton_iters,residual_inf";

/// %.17g, so values round-trip exactly.
std::string format_real(double x);

void write_probe_header(std::ostream& os);
void write_probe_row(std::ostream& os, const EstimateRecord& r);

struct SweepRow {
  int N = 0;
  double error_inf = 0.0;
  double observed_order = 0.0;  // log2(error(N)/error(2N)); NaN when unavailable
  std::string status = "ok";
};

/// Runs solve_error(N) for each grid in order. The first failure is recorded
/// as a row with status "failed: ..." and ends the table.
std::vector<SweepRow> convergence_sweep(const std::vector<int>& grids, const std::function<double(int)>& solve_error);

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows);

}  // namespace hqlab

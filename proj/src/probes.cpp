#include "hqlab/probes.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "hqlab/parallel.hpp"

namespace hqlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Census {
  double spec_min = std::numeric_limits<double>::infinity();
  double spec_max = -std::numeric_limits<double>::infinity();
  double gsum_min = std::numeric_limits<double>::infinity();
  std::size_t branch1 = 0;
  std::size_t branch2 = 0;
  std::size_t small = 0;
  bool admissible = true;
};

Census combine(Census a, const Census& b) {
  a.spec_min = std::min(a.spec_min, b.spec_min);
  a.spec_max = std::max(a.spec_max, b.spec_max);
  a.gsum_min = std::min(a.gsum_min, b.gsum_min);
  a.branch1 += b.branch1;
  a.branch2 += b.branch2;
  a.small += b.small;
  a.admissible = a.admissible && b.admissible;
  return a;
}

}  // namespace

EstimateRecord record_step(const Equation& eq, const Snapshot& snap, const ScalarField& ubar,
                           const ConeCertificate* cert) {
  EstimateRecord rec;
  rec.step = snap.step;
  rec.t = snap.t;
  rec.b_t = snap.b;
  rec.newton_iters = snap.newton_iters;
  rec.residual_inf = snap.residual_inf;
  rec.osc = rec.l1_gap = rec.grad_sup = rec.lambda1_sup = kNaN;
  rec.spec_min = rec.spec_max = rec.sum_Gii_min = kNaN;
  rec.branch1_frac = rec.branch2_frac = rec.small_frac = kNaN;
  if (snap.u == nullptr) return rec;
  const ScalarField& u = *snap.u;

  try {
    const EstimateQuantities q = estimate_quantities(u, ubar, eq.metric());
    rec.osc = q.osc;
    rec.l1_gap = q.l1_gap;
    rec.grad_sup = q.grad_sup;
    rec.lambda1_sup = q.lambda1_sup;
  } catch (const std::exception&) {
    return rec;
  }

  const TorusGrid& grid = eq.grid();
  const QuotientParams& p = eq.params();
  const int n = p.n;
  Census total;
  try {
    const HermitianField gt = assemble_gtilde(eq.chi(), eq.metric().metric(), u);
    const HermitianField gbar = assemble_gtilde(eq.chi(), eq.metric().metric(), ubar);
    total = block_reduce(
        grid.size(), Census{},
        [&](std::size_t begin, std::size_t end) {
          Census c;
          for (std::size_t s = begin; s < end; ++s) {
            const auto dec = generalized_eigen(gt.at(s), eq.metric(), cert != nullptr);
            const SpectrumVec lam(std::span<const double>(dec.values.data(), static_cast<std::size_t>(n)));
            if (!lam.in_cone()) {
              c.admissible = false;
              return c;
            }
            c.spec_min = std::min(c.spec_min, lam.min());
            c.spec_max = std::max(c.spec_max, lam.max());
            const SpectrumVec gii = g_diagonal_derivative(lam, p);
            double gs = 0.0;
            for (int i = 0; i < n; ++i) gs += gii[i];
            c.gsum_min = std::min(c.gsum_min, gs);
            if (cert) {
              // Subsolution matrix in the eigenframe of chi_u.
              const CMat w = dec.vectors.adjoint() * gbar.at(s) * dec.vectors;
              SpectrumVec mu(n);
              for (int i = 0; i < n; ++i) mu[i] = w(i, i).real();
              switch (dichotomy_check(lam, mu, *cert, p).branch) {
                case DichotomyBranch::SubsolutionGap: ++c.branch1; break;
                case DichotomyBranch::DominatedDiagonal: ++c.branch2; break;
                case DichotomyBranch::SmallSpectrum: ++c.small; break;
              }
            }
          }
          return c;
        },
        combine);
  } catch (const std::exception&) {
    return rec;
  }
  if (!total.admissible) return rec;
  rec.spec_min = total.spec_min;
  rec.spec_max = total.spec_max;
  rec.sum_Gii_min = total.gsum_min;
  if (cert) {
    const double size = static_cast<double>(grid.size());
    rec.branch1_frac = static_cast<double>(total.branch1) / size;
    rec.branch2_frac = static_cast<double>(total.branch2) / size;
    rec.small_frac = static_cast<double>(total.small) / size;
  }
  return rec;
}

EstimateRecord record_step(const Equation& eq, const ContinuityState& state, int step, const ScalarField& v,
                           const ScalarField& ubar, const ConeCertificate* cert) {
  const ScalarField full = v + state.u_t;
  return record_step(eq, Snapshot{step, state.t, state.b_t, &full, state.newton_iters, state.residual_inf}, ubar,
                     cert);
}

EstimateRecord record_step(const Equation& eq, const FlowState& state, const ScalarField& ubar,
                           const ConeCertificate* cert) {
  return record_step(eq,
                     Snapshot{static_cast<int>(state.steps), state.time, state.drift, &state.u, 0, state.residual_inf},
                     ubar, cert);
}

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_probe_header(std::ostream& os) { os << kProbeCsvHeader << '\n'; }

void write_probe_row(std::ostream& os, const EstimateRecord& r) {
  os << r.step << ',' << format_real(r.t) << ',' << format_real(r.b_t) << ',' << format_real(r.osc) << ','
     << format_real(r.l1_gap) << ',' << format_real(r.grad_sup) << ',' << format_real(r.lambda1_sup) << ','
     << format_real(r.spec_min) << ',' << format_real(r.spec_max) << ',' << format_real(r.branch1_frac) << ','
     << format_real(r.branch2_frac) << ',' << format_real(r.small_frac) << ',' << format_real(r.sum_Gii_min) << ','
     << r.newton_iters << ',' << format_real(r.residual_inf) << '\n';
}

std::vector<SweepRow> convergence_sweep(const std::vector<int>& grids,
                                        const std::function<double(int)>& solve_error) {
  std::vector<SweepRow> rows;
  for (int N : grids) {
    SweepRow row;
    row.N = N;
    row.observed_order = kNaN;
    try {
      row.error_inf = solve_error(N);
    } catch (const std::exception& e) {
      row.error_inf = kNaN;
      row.status = std::string("failed: ") + e.what();
      for (char& ch : row.status)
        if (ch == ',' || ch == '\n') ch = ';';
      rows.push_back(row);
      break;
    }
    rows.push_back(row);
  }
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    const SweepRow& next = rows[k + 1];
    if (rows[k].status == "ok" && next.status == "ok" && next.N == 2 * rows[k].N)
      rows[k].observed_order = std::log2(rows[k].error_inf / next.error_inf);
  }
  return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "N,error_inf,observed_order,status\n";
  for (const SweepRow& r : rows)
    os << r.N << ',' << format_real(r.error_inf) << ',' << format_real(r.observed_order) << ',' << r.status << '\n';
}

}  // namespace hqlab

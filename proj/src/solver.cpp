#include "hqlab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "hqlab/errors.hpp"
#include "hqlab/krylov.hpp"
#include "hqlab/parallel.hpp"

namespace hqlab {

namespace {

constexpr std::size_t kNoSite = std::numeric_limits<std::size_t>::max();

CMat gtilde_at(const Equation& eq, std::span<const double> u, const SiteCursor& cur) {
  const int n = eq.params().n;
  CMat a = complex_hessian(real_hessian_at(u, eq.grid(), cur), n);
  const std::size_t s = cur.site();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) += eq.chi().entry(s, i, j);
  return a;
}

double log_quotient(const SpectrumVec& lam, const QuotientParams& p, double log_binom) {
  const auto e = all_sigmas(lam);
  return log_binom + std::log(e[static_cast<std::size_t>(p.n)]) - std::log(e[static_cast<std::size_t>(p.n - p.m)]);
}

SpectrumVec spectrum_of(const EigenDecomposition<CMat>& dec, int n) {
  return SpectrumVec(std::span<const double>(dec.values.data(), static_cast<std::size_t>(n)));
}

/// Runs body(site, cursor) over all sites; returns the first site for which
/// body returned false, or kNoSite.
template <class Body>
std::size_t first_failing_site(const TorusGrid& grid, Body&& body) {
  std::vector<std::size_t> bad(block_count(grid.size()), kNoSite);
  parallel_blocks(grid.size(), [&](std::size_t begin, std::size_t end) {
    SiteCursor cur(grid, begin);
    for (std::size_t s = begin; s < end; ++s, cur.advance()) {
      if (!body(s, cur)) {
        bad[begin / kBlockSize] = s;
        return;
      }
    }
  });
  for (std::size_t b : bad)
    if (b != kNoSite) return b;
  return kNoSite;
}

void remove_mean(ScalarField& u) { u += -u.mean(); }

}  // namespace

Equation::Equation(HermitianField chi, const CMat& g, const QuotientParams& p)
    : chi_(std::move(chi)), metric_(g), p_(p) {
  if (chi_.dim() != p.n) throw ArgumentError("equation: chi dimension does not match n");
  if (metric_.dim() != p.n) throw ArgumentError("equation: metric dimension does not match n");
}

Equation Equation::with_background(const ScalarField& v) const {
  return Equation(assemble_gtilde(chi_, metric_.metric(), v), metric_.metric(), p_);
}

void NewtonConfig::validate() const {
  if (!(tol_residual > 0.0) || max_iters < 1 || !(damping > 0.0 && damping < 1.0) || !(min_step > 0.0) ||
      !(linear_tol > 0.0) || linear_max_iters < 1)
    throw ArgumentError("newton config: all fields must be positive and damping must lie in (0, 1)");
}

ScalarField log_field(const ScalarField& psi) {
  ScalarField out(psi.grid());
  for (std::size_t s = 0; s < psi.size(); ++s) {
    if (!(psi[s] > 0.0) || !std::isfinite(psi[s]))
      throw SiteError("psi must be finite and strictly positive", s);
    out[s] = std::log(psi[s]);
  }
  return out;
}

ScalarField log_residual_from_log(const Equation& eq, const ScalarField& u, double b, const ScalarField& log_psi) {
  if (!(u.grid() == eq.grid()) || !(log_psi.grid() == eq.grid()))
    throw ArgumentError("log_residual: grid mismatch");
  const QuotientParams& p = eq.params();
  const double log_binom = std::log(p.binom());
  ScalarField out(eq.grid());
  const std::size_t bad = first_failing_site(eq.grid(), [&](std::size_t s, const SiteCursor& cur) {
    const auto dec = generalized_eigen(gtilde_at(eq, u.values(), cur), eq.metric(), false);
    const SpectrumVec lam = spectrum_of(dec, p.n);
    if (!lam.in_cone()) return false;
    out[s] = log_quotient(lam, p, log_binom) - log_psi[s] - b;
    return true;
  });
  if (bad != kNoSite) throw NonAdmissibleError("log_residual: inadmissible site", bad);
  return out;
}

ScalarField log_residual(const Equation& eq, const ScalarField& u, double b, const ScalarField& psi) {
  return log_residual_from_log(eq, u, b, log_field(psi));
}

Linearization::Linearization(const Equation& eq, const ScalarField& u, const ScalarField* log_psi, double b)
    : grid_(eq.grid()), d_(eq.grid().real_dim()), packed_(d_ * (d_ + 1) / 2) {
  if (!(u.grid() == grid_)) throw ArgumentError("linearization: grid mismatch");
  const QuotientParams& p = eq.params();
  const int n = p.n;
  const double h = grid_.spacing();
  const double log_binom = std::log(p.binom());
  coef_.assign(grid_.size() * static_cast<std::size_t>(packed_), 0.0);
  diag_.assign(grid_.size(), 0.0);
  if (log_psi) residual_.emplace(grid_);

  struct Extremes {
    double min_coef = std::numeric_limits<double>::infinity();
    double max_load = 0.0;
  };
  std::vector<Extremes> part(block_count(grid_.size()));

  const std::size_t bad = first_failing_site(grid_, [&](std::size_t s, const SiteCursor& cur) {
    const auto dec = generalized_eigen(gtilde_at(eq, u.values(), cur), eq.metric(), true);
    const SpectrumVec lam = spectrum_of(dec, n);
    if (!lam.in_cone()) return false;
    const SpectrumVec c = log_quotient_gradient(lam, p);
    CMat a = CMat::Zero(n, n);
    for (int k = 0; k < n; ++k) a += c[k] * dec.vectors.col(k) * dec.vectors.col(k).adjoint();

    // K on axes (x1, y1, ..., xn, yn).
    double K[kMaxRealDim][kMaxRealDim];
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const double re = 0.25 * a(i, j).real();
        K[2 * i][2 * j] = re;
        K[2 * i + 1][2 * j + 1] = re;
        K[2 * i][2 * j + 1] = 0.25 * a(i, j).imag();
        K[2 * j + 1][2 * i] = 0.25 * a(i, j).imag();
      }
    }
    double* out = coef_.data() + s * static_cast<std::size_t>(packed_);
    double trace = 0.0, cross = 0.0;
    for (int q = 0; q < d_; ++q) {
      out[q] = K[q][q];
      trace += K[q][q];
    }
    int k = d_;
    for (int q = 0; q < d_; ++q)
      for (int r = q + 1; r < d_; ++r) {
        out[k++] = 2.0 * K[q][r];
        cross += std::abs(K[q][r]);
      }
    diag_[s] = -2.0 * trace / (h * h);

    Extremes& e = part[s / kBlockSize];
    e.min_coef = std::min(e.min_coef, c.min());
    e.max_load = std::max(e.max_load, 2.0 * trace + cross);
    if (log_psi) (*residual_)[s] = log_quotient(lam, p, log_binom) - (*log_psi)[s] - b;
    return true;
  });
  if (bad != kNoSite) throw NonAdmissibleError("linearization: inadmissible site", bad);

  Extremes all;
  for (const Extremes& e : part) {
    all.min_coef = std::min(all.min_coef, e.min_coef);
    all.max_load = std::max(all.max_load, e.max_load);
  }
  min_coef_ = all.min_coef;
  stable_dt_ = 0.5 * h * h / all.max_load;
}

void Linearization::apply(std::span<const double> xi, std::span<double> out) const {
  const double h = grid_.spacing();
  const double inv2 = 1.0 / (h * h);
  const double inv4 = 0.25 * inv2;
  parallel_blocks(grid_.size(), [&](std::size_t begin, std::size_t end) {
    SiteCursor cur(grid_, begin);
    for (std::size_t s = begin; s < end; ++s, cur.advance()) {
      const double* k = coef_.data() + s * static_cast<std::size_t>(packed_);
      const double c = xi[s];
      double pure = 0.0;
      for (int a = 0; a < d_; ++a) pure += k[a] * (xi[cur.plus(a)] - 2.0 * c + xi[cur.minus(a)]);
      double mixed = 0.0;
      int q = d_;
      for (int a = 0; a < d_; ++a)
        for (int b = a + 1; b < d_; ++b, ++q) {
          if (k[q] == 0.0) continue;
          mixed += k[q] * (xi[cur.offset(cur.up(a) + cur.up(b))] - xi[cur.offset(cur.up(a) + cur.down(b))] -
                           xi[cur.offset(cur.down(a) + cur.up(b))] + xi[cur.offset(cur.down(a) + cur.down(b))]);
        }
      out[s] = pure * inv2 + mixed * inv4;
    }
  });
}

ScalarField Linearization::apply(const ScalarField& xi) const {
  if (!(xi.grid() == grid_)) throw ArgumentError("linearization: grid mismatch");
  ScalarField out(grid_);
  apply(xi.values(), out.values());
  return out;
}

ScalarField linearized_apply(const Equation& eq, const ScalarField& u, const ScalarField& xi) {
  return Linearization(eq, u).apply(xi);
}

NewtonResult newton_solve_log(const Equation& eq, const ScalarField& log_psi, const ScalarField& u0,
                              const NewtonConfig& cfg, double b0) {
  cfg.validate();
  if (!(u0.grid() == eq.grid()) || !(log_psi.grid() == eq.grid()))
    throw ArgumentError("newton_solve: grid mismatch");
  const TorusGrid& grid = eq.grid();
  const std::size_t size = grid.size();

  NewtonResult res{mean_zero(u0), b0, 0, 0, 0.0};
  ScalarField r = log_residual_from_log(eq, res.u, res.b, log_psi);
  double rnorm = r.sup_abs();

  std::vector<double> xi(size), rhs(size), work(size), lxi(size);
  for (int it = 0;; ++it) {
    res.residual_inf = rnorm;
    if (rnorm <= cfg.tol_residual) return res;
    if (it == cfg.max_iters) throw NoConvergence("newton_solve: iteration limit reached", rnorm);

    const Linearization lin(eq, res.u);
    const auto& diag = lin.diagonal();
    // Saddle system [L xi - beta = -r, mean(xi) = 0], solved on the
    // mean-zero subspace as P L xi = -P r with beta recovered afterwards.
    const double rmean = r.mean();
    for (std::size_t s = 0; s < size; ++s) rhs[s] = -(r[s] - rmean);
    const LinearMap op = [&](std::span<const double> in, std::span<double> out) {
      lin.apply(in, out);
      const double m = deterministic_sum(size, [&](std::size_t s) { return out[s]; }) / static_cast<double>(size);
      for (std::size_t s = 0; s < size; ++s) out[s] -= m;
    };
    const LinearMap precond = [&](std::span<const double> in, std::span<double> out) {
      for (std::size_t s = 0; s < size; ++s) out[s] = in[s] / diag[s];
      const double m = deterministic_sum(size, [&](std::size_t s) { return out[s]; }) / static_cast<double>(size);
      for (std::size_t s = 0; s < size; ++s) out[s] -= m;
    };
    std::fill(xi.begin(), xi.end(), 0.0);
    const double forcing = std::max(cfg.linear_tol, std::min(1e-2, rnorm));
    const KrylovResult kr = bicgstab(op, precond, rhs, xi, forcing, cfg.linear_max_iters);
    res.linear_iterations += kr.iterations;
    lin.apply(xi, lxi);
    const double beta = deterministic_sum(size, [&](std::size_t s) { return lxi[s] + r[s]; }) /
                        static_cast<double>(size);

    double step = 1.0;
    bool last_inadmissible = false;
    for (;;) {
      ScalarField trial = res.u;
      for (std::size_t s = 0; s < size; ++s) trial[s] += step * xi[s];
      remove_mean(trial);
      const double b_trial = res.b + step * beta;
      try {
        ScalarField r_trial = log_residual_from_log(eq, trial, b_trial, log_psi);
        const double n_trial = r_trial.sup_abs();
        if (n_trial < rnorm) {
          res.u = std::move(trial);
          res.b = b_trial;
          r = std::move(r_trial);
          rnorm = n_trial;
          break;
        }
        last_inadmissible = false;
      } catch (const NonAdmissibleError&) {
        last_inadmissible = true;
      }
      step *= cfg.damping;
      if (step < cfg.min_step) {
        if (last_inadmissible) throw NonAdmissibleStep("newton_solve: no admissible step above the minimum step");
        throw NoConvergence("newton_solve: line search stalled", rnorm);
      }
    }
    res.iterations = it + 1;
  }
}

NewtonResult newton_solve(const Equation& eq, const ScalarField& psi, const ScalarField& u0,
                          const NewtonConfig& cfg, double b0) {
  return newton_solve_log(eq, log_field(psi), u0, cfg, b0);
}

ContinuityResult continuity_run(const Equation& eq, const ScalarField& v, const ScalarField& psi,
                                const NewtonConfig& cfg, const ContinuityOptions& opts) {
  if (opts.steps < 1 || opts.max_halvings < 0) throw ArgumentError("continuity_run: bad step options");
  cfg.validate();
  const TorusGrid& grid = eq.grid();
  const Equation eq_v = eq.with_background(v);
  const ScalarField log_psi = log_field(psi);
  // log psi_tilde: the quotient of chi_v itself.
  const ScalarField log_tilde = log_residual_from_log(eq_v, ScalarField(grid), 0.0, ScalarField(grid));

  ContinuityResult out{{}, 0.0, ScalarField(grid), 0.0, 0.0};
  for (std::size_t s = 0; s < grid.size(); ++s)
    out.supersolution_violation = std::max(out.supersolution_violation, log_tilde[s] - log_psi[s]);

  ContinuityState current{0.0, ScalarField(grid), 0.0, 0, 0.0};
  const auto accept = [&](const ContinuityState& st) {
    if (opts.observer) opts.observer(st);
    if (opts.keep_fields || st.t == 1.0) {
      out.states.push_back(st);
    } else {
      out.states.push_back(ContinuityState{st.t, ScalarField(grid, 0.0), st.b_t, st.newton_iters, st.residual_inf});
    }
  };
  accept(current);

  const double base = 1.0 / opts.steps;
  double dt = base;
  int halvings = 0;
  ScalarField log_t(grid);
  while (current.t < 1.0) {
    double t_next = std::min(1.0, current.t + dt);
    const double k = std::round(t_next * opts.steps);
    if (std::abs(t_next * opts.steps - k) < 1e-9) t_next = k / opts.steps;
    for (std::size_t s = 0; s < grid.size(); ++s) log_t[s] = t_next * log_psi[s] + (1.0 - t_next) * log_tilde[s];
    try {
      NewtonResult nr = newton_solve_log(eq_v, log_t, current.u_t, cfg, current.b_t);
      current = ContinuityState{t_next, std::move(nr.u), nr.b, nr.iterations, nr.residual_inf};
      accept(current);
      halvings = 0;
      dt = std::min(base, 2.0 * dt);
    } catch (const SolverError&) {
      if (++halvings > opts.max_halvings)
        throw ContinuationStuck("continuity_run: t-step underflow at t = " + std::to_string(current.t), current);
      dt *= 0.5;
    }
  }

  // Output normalisation sup(v + u) = 0. Adding a constant leaves ddbar and
  // therefore b untouched.
  out.u_final = sup_zero(v + current.u_t);
  out.b = current.b_t;
  out.residual_inf = current.residual_inf;
  return out;
}

FlowState flow_run(const Equation& eq, const ScalarField& u0, const ScalarField& psi, const FlowOptions& opts) {
  if (!(opts.dt > 0.0) || !(opts.t_end >= 0.0) || !(opts.tol > 0.0) || opts.max_rejections < 0)
    throw ArgumentError("flow_run: dt and tol must be positive, t_end nonnegative");
  const ScalarField log_psi = log_field(psi);
  FlowState st{0.0, mean_zero(u0), 0.0, 0.0, 0.0, 0};
  auto lin = std::make_unique<Linearization>(eq, st.u, &log_psi, 0.0);
  if (opts.dt > lin->stability_dt())
    throw ArgumentError("flow_run: dt " + std::to_string(opts.dt) + " exceeds the stability limit " +
                        std::to_string(lin->stability_dt()));

  const auto deviation = [](const ScalarField& r, double mean) {
    double m = 0.0;
    for (std::size_t s = 0; s < r.size(); ++s) m = std::max(m, std::abs(r[s] - mean));
    return m;
  };
  st.drift = lin->residual()->mean();
  st.residual_inf = deviation(*lin->residual(), st.drift);
  st.dt = std::min(opts.dt, lin->stability_dt());
  if (opts.observer && opts.record_every > 0) opts.observer(st);

  while (st.time < opts.t_end && st.residual_inf > opts.tol) {
    double dt = std::min({opts.dt, lin->stability_dt(), opts.t_end - st.time});
    const ScalarField& r = *lin->residual();
    for (int attempt = 0;; ++attempt) {
      ScalarField trial = st.u;
      for (std::size_t s = 0; s < trial.size(); ++s) trial[s] += dt * r[s];
      remove_mean(trial);
      std::unique_ptr<Linearization> next;
      try {
        next = std::make_unique<Linearization>(eq, trial, &log_psi, 0.0);
      } catch (const NonAdmissibleError& e) {
        if (attempt >= opts.max_rejections) throw FlowBlowup(std::string("flow_run: ") + e.what(), st.time);
        dt *= 0.5;
        continue;
      }
      const double drift = next->residual()->mean();
      const double dev = deviation(*next->residual(), drift);
      // A growing residual halves dt; after max_rejections halvings the step
      // is taken anyway.
      if (dev > st.residual_inf && attempt < opts.max_rejections) {
        dt *= 0.5;
        continue;
      }
      st.u = std::move(trial);
      st.time += dt;
      st.dt = dt;
      st.drift = drift;
      st.residual_inf = dev;
      ++st.steps;
      lin = std::move(next);
      break;
    }
    if (!std::isfinite(st.residual_inf)) throw FlowBlowup("flow_run: residual is not finite", st.time);
    if (opts.observer && opts.record_every > 0 && st.steps % opts.record_every == 0) opts.observer(st);
  }
  return st;
}

}  // namespace hqlab

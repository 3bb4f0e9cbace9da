// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any failure.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <fstream>
#include <functional>
#include <iterator>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hqlab/app.hpp"
#include "hqlab/cone.hpp"
#include "hqlab/config.hpp"
#include "hqlab/geometry.hpp"
#include "hqlab/probes.hpp"
#include "hqlab/solver.hpp"
#include "hqlab/symfunc.hpp"
#include "support.hpp"

using namespace hqlab;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

// Pinned tolerances and limits.
constexpr double kHomogeneityTol = 1e-12;
constexpr double kEulerTol = 1e-12;
constexpr double kConcavityTol = 1e-10;
constexpr double kKappaTarget = 0.5;
constexpr double kKappaTol = 0.01;
constexpr double kQuadFormFloor = -1e-12;
constexpr double kJacobianTol = 1e-6;
constexpr double kTrivialTol = 1e-8;
constexpr double kNewtonResidual = 1e-10;
constexpr double kMinOrder = 1.85;
constexpr double kMinRatio = 3.6;
constexpr double kPoissonTol = 1e-8;
constexpr double kCrossMethodTol = 1e-6;
constexpr double kBtSlack = 1e-10;
constexpr double kProbeDrift = 0.10;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;
std::vector<std::string> selected;  // criterion ids from the command line; empty runs all

void report(const char* id, const char* name, double limit_s, const std::function<Outcome()>& body) {
  if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end()) return;
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool pass = out.pass;
  std::ostringstream line;
  line << out.detail << "; " << secs << " s";
  if (limit_s > 0.0) {
    line << " (limit " << limit_s << " s)";
    if (secs >= limit_s) pass = false;
  }
  if (!pass) ++failures;
  std::printf("%s %s %s: %s\n", pass ? "PASS" : "FAIL", id, name, line.str().c_str());
  std::fflush(stdout);
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

Equation flat_equation(int n, int m, int N) {
  const TorusGrid grid(n, N);
  return Equation(HermitianField(grid, CMat::Identity(n, n)), CMat::Identity(n, n), {n, m});
}

ScalarField random_smooth(hqtest::Rng& rng, const TorusGrid& grid, double amp) {
  const int d = grid.real_dim();
  std::vector<std::array<double, 10>> modes;
  for (int k = 0; k < 4; ++k) {
    std::array<double, 10> md{};
    for (int a = 0; a < d; ++a) md[static_cast<std::size_t>(a)] = rng.integer(-1, 1);
    md[8] = rng.uniform(-amp, amp);
    md[9] = rng.uniform(0.0, 2.0 * kPi);
    modes.push_back(md);
  }
  return ScalarField::from_function(grid, [&](auto x) {
    double v = 0.0;
    for (const auto& md : modes) {
      double phase = md[9];
      for (int a = 0; a < d; ++a) phase += md[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
      v += md[8] * std::cos(phase);
    }
    return v;
  });
}

// (1/4)(D_xx + D_yy) u = f on the N x N torus by the discrete Fourier symbol.
ScalarField poisson_dft(const ScalarField& f) {
  const TorusGrid& grid = f.grid();
  const int N = grid.points();
  const double h = grid.spacing();
  using C = std::complex<double>;
  auto w = [&](int k, int j) { return std::polar(1.0, -2.0 * kPi * k * j / N); };
  std::vector<C> fhat(static_cast<std::size_t>(N * N));
  for (int k1 = 0; k1 < N; ++k1)
    for (int k2 = 0; k2 < N; ++k2) {
      C acc = 0.0;
      for (int j1 = 0; j1 < N; ++j1)
        for (int j2 = 0; j2 < N; ++j2) acc += f[static_cast<std::size_t>(j1 * N + j2)] * w(k1, j1) * w(k2, j2);
      fhat[static_cast<std::size_t>(k1 * N + k2)] = acc;
    }
  auto symbol = [&](int k) { return (2.0 * std::cos(2.0 * kPi * k / N) - 2.0) / (h * h); };
  for (int k1 = 0; k1 < N; ++k1)
    for (int k2 = 0; k2 < N; ++k2) {
      auto& z = fhat[static_cast<std::size_t>(k1 * N + k2)];
      z = (k1 == 0 && k2 == 0) ? C(0.0) : z / (0.25 * (symbol(k1) + symbol(k2)));
    }
  ScalarField u(grid);
  for (int j1 = 0; j1 < N; ++j1)
    for (int j2 = 0; j2 < N; ++j2) {
      C acc = 0.0;
      for (int k1 = 0; k1 < N; ++k1)
        for (int k2 = 0; k2 < N; ++k2)
          acc += fhat[static_cast<std::size_t>(k1 * N + k2)] * std::conj(w(k1, j1) * w(k2, j2));
      u[static_cast<std::size_t>(j1 * N + j2)] = acc.real() / (N * N);
    }
  return u;
}

std::string manufactured_config(int m, int N) {
  return R"j({"n": 2, "m": )j" + std::to_string(m) + R"j(, "N": )j" + std::to_string(N) +
         R"j(, "manufactured": {"u": "0.2*sin(x1)*cos(y2)"}, "seed": 11})j";
}

Outcome c1_symfunc() {
  hqtest::Rng rng(1001);
  double worst_hom = 0.0, worst_euler = 0.0, worst_conc = 0.0;
  int bad_grad = 0;
  for (int k = 0; k < 10000; ++k) {
    const int n = rng.integer(1, 4);
    const QuotientParams p{n, rng.integer(1, n)};
    const auto l = hqtest::cone_point(rng, n);
    const auto l2 = hqtest::cone_point(rng, n);
    const double s = rng.log_uniform(1e-3, 1e3);
    const double f = f_quotient(l, p);
    worst_hom = std::max(worst_hom, hqtest::rel_err(f_quotient(l.scaled(s), p), s * f));
    const auto g = grad_f(l, p);
    double dot = 0.0;
    for (int i = 0; i < n; ++i) {
      dot += g[i] * l[i];
      if (!(g[i] > 0.0)) ++bad_grad;
    }
    worst_euler = std::max(worst_euler, hqtest::rel_err(dot, f));
    SpectrumVec mid(n);
    for (int i = 0; i < n; ++i) mid[i] = 0.5 * (l[i] + l2[i]);
    const double lhs = f_quotient(mid, p);
    const double rhs = 0.5 * (f + f_quotient(l2, p));
    worst_conc = std::max(worst_conc, (rhs - lhs) / std::max(1.0, std::abs(rhs)));
  }
  const bool pass = worst_hom <= kHomogeneityTol && worst_euler <= kEulerTol && worst_conc <= kConcavityTol &&
                    bad_grad == 0;
  return {pass, "homogeneity " + fmt(worst_hom) + ", euler " + fmt(worst_euler) + ", concavity " + fmt(worst_conc) +
                    ", nonpositive gradients " + std::to_string(bad_grad)};
}

// Walks rays mu + t xi out to |lambda| = 1e6 and reports whether one stays at or below h.
struct RayVerdict {
  bool escapes = false;
  double closest = 1e300;
};

RayVerdict ray_oracle(const SpectrumVec& mu, double h, const QuotientParams& p, hqtest::Rng& rng) {
  const int n = p.n;
  RayVerdict v;
  auto probe = [&](const SpectrumVec& xi) {
    const double scale = 1e6 / xi.norm();
    SpectrumVec pt(n);
    for (int i = 0; i < n; ++i) pt[i] = mu[i] + scale * xi[i];
    const double val = f_quotient(pt, p);
    if (val <= h) v.escapes = true;
    v.closest = std::min(v.closest, std::abs(val / h - 1.0));
  };
  for (int i = 0; i < n; ++i) {
    SpectrumVec e(n, 0.0);
    e[i] = 1.0;
    probe(e);
  }
  for (int k = 0; k < 64; ++k) {
    SpectrumVec xi(n, 0.0);
    const unsigned mask = 1u + static_cast<unsigned>(rng.integer(0, (1 << n) - 2));
    for (int i = 0; i < n; ++i)
      if (mask & (1u << i)) xi[i] = rng.uniform(0.01, 1.0);
    probe(xi);
  }
  return v;
}

Outcome c2_cone() {
  hqtest::Rng rng(1002);
  int decided = 0, skipped = 0, disagree = 0;
  while (decided < 1000) {
    const int n = rng.integer(1, 4);
    const QuotientParams p{n, rng.integer(1, n)};
    const auto mu = hqtest::cone_point(rng, n, 0.1, 10.0);
    const double h = rng.log_uniform(0.05, 5.0);
    const auto verdict = ray_oracle(mu, h, p, rng);
    if (verdict.closest < 1e-3 && p.m < p.n) {
      ++skipped;
      continue;
    }
    ++decided;
    if (is_c_subsolution_at(mu, h, p) == verdict.escapes) ++disagree;
  }
  const double kappa = kappa_probe(1.0, {2, 1}, 100000);
  const bool pass = disagree == 0 && std::abs(kappa - kKappaTarget) <= kKappaTol;
  return {pass, "disagreements " + std::to_string(disagree) + "/1000 (skipped " + std::to_string(skipped) +
                    " too close to call), kappa(2,1) = " + fmt(kappa)};
}

Outcome c3_inequalities() {
  hqtest::Rng rng(1003);
  double worst_glz = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const int n = rng.integer(1, 4);
    const QuotientParams p{n, rng.integer(1, n)};
    const auto l = hqtest::cone_point(rng, n);
    std::vector<cplx> xi(static_cast<std::size_t>(n));
    for (auto& z : xi) z = cplx(rng.normal(), rng.normal());
    worst_glz = std::min(worst_glz, glz_quadratic_form(l, xi, p.m));
  }
  int det_bad = 0;
  for (int k = 0; k < 10000; ++k) {
    const int n = rng.integer(1, 4);
    const CMat a = hqtest::random_pd(rng, n);
    const CMat b = hqtest::random_pd(rng, n);
    const double lhs = std::pow(hermitian_pd_det(a + b), 1.0 / n);
    const double rhs = std::pow(hermitian_pd_det(a), 1.0 / n) + std::pow(hermitian_pd_det(b), 1.0 / n);
    if (lhs < rhs * (1.0 - 1e-12)) ++det_bad;
  }
  return {worst_glz >= kQuadFormFloor && det_bad == 0,
          "min quadratic form " + fmt(worst_glz) + ", det violations " + std::to_string(det_bad) + "/10000"};
}

Outcome c4_jacobian() {
  hqtest::Rng rng(1004);
  const auto eq = flat_equation(2, 1, 8);
  const ScalarField one(eq.grid(), 1.0);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto u = random_smooth(rng, eq.grid(), 0.1);
    const auto xi = random_smooth(rng, eq.grid(), 1.0);
    const double s = 1e-5;
    ScalarField sxi = xi;
    sxi *= s;
    ScalarField fd = log_residual(eq, u + sxi, 0.0, one) - log_residual(eq, u - sxi, 0.0, one);
    fd *= 1.0 / (2.0 * s);
    const auto lxi = linearized_apply(eq, u, xi);
    worst = std::max(worst, (fd - lxi).sup_abs() / lxi.sup_abs());
  }
  return {worst <= kJacobianTol, "max relative error " + fmt(worst)};
}

Outcome c5_trivial() {
  double worst_u = 0.0, worst_b = 0.0;
  for (auto [n, m] : {std::pair{1, 1}, {2, 1}, {2, 2}, {3, 2}}) {
    const auto eq = flat_equation(n, m, 8);
    const ScalarField zero(eq.grid());
    const auto res = continuity_run(eq, zero, ScalarField(eq.grid(), 1.0), NewtonConfig{});
    worst_u = std::max(worst_u, res.u_final.sup_abs());
    worst_b = std::max(worst_b, std::abs(res.b));
  }
  return {worst_u <= kTrivialTol && worst_b <= kTrivialTol, "max |u| " + fmt(worst_u) + ", max |b| " + fmt(worst_b)};
}

Outcome c6_manufactured() {
  bool pass = true;
  std::string detail;
  for (int m : {1, 2}) {
    const auto cfg = parse_config(manufactured_config(m, 8));
    std::vector<double> err;
    double worst_res = 0.0;
    for (int N : {8, 16, 32}) {
      const auto r = manufactured_run(cfg, N);
      err.push_back(r.error_inf);
      worst_res = std::max(worst_res, r.residual_inf);
    }
    const double o1 = std::log2(err[0] / err[1]);
    const double o2 = std::log2(err[1] / err[2]);
    const double ratio = std::min(err[0] / err[1], err[1] / err[2]);
    pass = pass && worst_res <= kNewtonResidual && std::min(o1, o2) >= kMinOrder && ratio >= kMinRatio;
    detail += (detail.empty() ? "" : "; ") + std::string("m=") + std::to_string(m) + " errors " + fmt(err[0]) + "/" +
              fmt(err[1]) + "/" + fmt(err[2]) + " orders " + fmt(o1) + "/" + fmt(o2) + " residual " + fmt(worst_res);
  }
  return {pass, detail};
}

Outcome c7_poisson() {
  double worst = 0.0;
  for (int N : {8, 16}) {
    const TorusGrid grid(1, N);
    const Equation eq(HermitianField(grid, CMat::Identity(1, 1)), CMat::Identity(1, 1), {1, 1});
    const auto psi =
        ScalarField::from_function(grid, [](auto x) { return 1.0 + 0.3 * std::cos(x[0]) * std::sin(2.0 * x[1]); });
    const auto res = newton_solve(eq, psi, ScalarField(grid), NewtonConfig{});
    // 1 + (1/4) Delta u = psi e^b with e^b = 1/mean(psi).
    ScalarField rhs = psi;
    rhs *= 1.0 / psi.mean();
    rhs -= ScalarField(grid, 1.0);
    const auto direct = mean_zero(poisson_dft(rhs));
    worst = std::max({worst, (res.u - direct).sup_abs(), std::abs(res.b + std::log(psi.mean()))});
  }
  return {worst <= kPoissonTol, "max deviation from the Fourier solve " + fmt(worst)};
}

Outcome c8_cross_method() {
  const auto cfg = parse_config(manufactured_config(1, 16));
  const auto eq = build_equation(cfg, build_grid(cfg, 16));
  const auto psi = build_psi(cfg, eq);
  const ScalarField zero(eq.grid());
  ContinuityOptions co;
  co.keep_fields = false;
  const auto cont = continuity_run(eq, zero, psi, NewtonConfig{}, co);
  FlowOptions fo;
  fo.dt = Linearization(eq, zero).stability_dt();
  fo.t_end = 1000.0;
  fo.tol = 1e-10;
  const auto flow = flow_run(eq, zero, psi, fo);
  const double du = (mean_zero(cont.u_final) - mean_zero(flow.u)).sup_abs();
  const double db = std::abs(cont.b - flow.drift);
  return {du <= kCrossMethodTol && db <= kCrossMethodTol,
          "|u diff| " + fmt(du) + ", |b diff| " + fmt(db) + ", flow time " + fmt(flow.time)};
}

Outcome c9_bt_bound() {
  // Each case has psi_tilde <= psi sitewise, where psi_tilde is the quotient at v.
  struct Case {
    int m;
    std::function<double(std::span<const double>)> v;
    double lift;
  };
  const std::vector<Case> cases = {
      {1, [](auto) { return 0.0; }, 0.0},
      {2, [](auto) { return 0.0; }, 0.0},
      {1, [](auto x) { return 0.1 * std::cos(x[0]) + 0.05 * std::sin(x[3]); }, 0.1},
      {2, [](auto x) { return 0.1 * std::cos(x[0]) * std::cos(x[2]); }, 0.2},
  };
  double worst = -1e300;
  std::size_t states = 0;
  bool recorded_ok = true;
  for (const auto& c : cases) {
    const auto eq = flat_equation(2, c.m, 8);
    const auto v = ScalarField::from_function(eq.grid(), c.v);
    const auto psi_tilde = quotient_ratio(assemble_gtilde(eq.chi(), eq.metric().metric(), v), eq.metric(), eq.params());
    const auto bump = ScalarField::from_function(eq.grid(), [&](auto x) {
      return 1.2 + c.lift + 0.3 * std::cos(x[0]) * std::cos(x[3]);
    });
    ScalarField psi(eq.grid());
    for (std::size_t s = 0; s < psi.size(); ++s) psi[s] = psi_tilde[s] * bump[s] / 0.85;
    for (std::size_t s = 0; s < psi.size(); ++s) recorded_ok = recorded_ok && psi_tilde[s] <= psi[s];
    ContinuityOptions co;
    co.keep_fields = false;
    const auto res = continuity_run(eq, v, psi, NewtonConfig{}, co);
    recorded_ok = recorded_ok && res.supersolution_violation == 0.0;
    for (const auto& st : res.states) worst = std::max(worst, std::exp(st.b_t));
    states += res.states.size();
  }
  return {recorded_ok && worst <= 1.0 + kBtSlack,
          "max e^b_t " + fmt(worst) + " over " + std::to_string(states) + " states"};
}

Outcome c10_probe_stability() {
  auto probe_at = [](int N) {
    const auto eq = flat_equation(2, 1, N);
    const auto psi =
        ScalarField::from_function(eq.grid(), [](auto x) { return 1.0 + 0.3 * std::cos(x[0]) * std::cos(x[3]); });
    const ScalarField zero(eq.grid());
    ContinuityOptions co;
    co.keep_fields = false;
    const auto res = continuity_run(eq, zero, psi, NewtonConfig{}, co);
    Snapshot snap;
    snap.t = 1.0;
    snap.b = res.b;
    snap.u = &res.u_final;
    return record_step(eq, snap, zero, nullptr);
  };
  const auto a = probe_at(16);
  const auto b = probe_at(32);
  auto drift = [](double x, double y) { return std::abs(x - y) / std::abs(y); };
  const double d_osc = drift(a.osc, b.osc);
  const double d_grad = drift(a.grad_sup, b.grad_sup);
  const double d_l1 = drift(a.lambda1_sup, b.lambda1_sup);
  return {std::max({d_osc, d_grad, d_l1}) <= kProbeDrift, "relative change osc " + fmt(d_osc) + ", grad_sup " +
                                                             fmt(d_grad) + ", lambda1_sup " + fmt(d_l1)};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

Outcome c11_determinism() {
  const fs::path root = fs::temp_directory_path() / "hqlab_acceptance";
  fs::remove_all(root);
  const auto cfg = parse_config(manufactured_config(1, 16));
  std::vector<std::string> csv;
  for (const char* tag : {"a", "b"}) {
    RunOptions opts;
    opts.output_dir = (root / tag).string();
    opts.quiet = true;
    std::ostringstream sink;
    opts.diagnostics = &sink;
    if (run(cfg, Subcommand::Solve, opts) != kExitOk) return {false, std::string("run ") + tag + " failed"};
    csv.push_back(slurp(root / tag / "probes.csv"));
  }
  const bool same = !csv[0].empty() && csv[0] == csv[1];
  return {same, std::to_string(csv[0].size()) + " bytes, " + (same ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  selected.assign(argv + 1, argv + argc);
  report("C1", "symmetric-function suite", 5.0, c1_symfunc);
  report("C2", "cone suite", 30.0, c2_cone);
  report("C3", "inequality suite", 10.0, c3_inequalities);
  report("C4", "jacobian check", 30.0, c4_jacobian);
  report("C5", "trivial solve", 60.0, c5_trivial);
  report("C6", "manufactured convergence", 600.0, c6_manufactured);
  report("C7", "linear degeneration", 5.0, c7_poisson);
  report("C8", "cross-method agreement", 600.0, c8_cross_method);
  report("C9", "b_t bound", 0.0, c9_bt_bound);
  report("C10", "estimate-probe stability", 900.0, c10_probe_stability);
  report("C11", "determinism", 0.0, c11_determinism);
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}

#include "hqlab/app.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <iostream>
#include <json.hpp>

#include "hqlab/errors.hpp"
#include "hqlab/field_io.hpp"
#include "hqlab/probes.hpp"

namespace hqlab {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::optional<Subcommand> parse_subcommand(const std::string& name) {
  if (name == "certify") return Subcommand::Certify;
  if (name == "solve") return Subcommand::Solve;
  if (name == "flow") return Subcommand::Flow;
  if (name == "sweep") return Subcommand::Sweep;
  return std::nullopt;
}

namespace {

/// JSON has no NaN; unavailable numbers become null.
ordered_json number(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

void write_json(const fs::path& path, const ordered_json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

class Session {
 public:
  Session(const RunConfig& cfg, const RunOptions& opts)
      : cfg_(cfg),
        out_dir_(opts.output_dir.value_or(cfg.output_dir)),
        quiet_(opts.quiet),
        log_(opts.diagnostics ? *opts.diagnostics : std::cerr),
        start_(std::chrono::steady_clock::now()) {}

  int dispatch(Subcommand cmd) {
    fs::create_directories(out_dir_);
    switch (cmd) {
      case Subcommand::Certify: return certify();
      case Subcommand::Solve: return solve();
      case Subcommand::Flow: return flow();
      case Subcommand::Sweep: return sweep();
    }
    return kExitValidation;
  }

  void write_summary(double b, double residual, int status, ordered_json extra = ordered_json::object()) {
    ordered_json j;
    j["b"] = number(b);
    j["residual_inf"] = number(residual);
    j["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    j["exit_status"] = status;
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    write_json(out_dir_ / "summary.json", j);
  }

  std::ostream& log() { return log_; }
  bool quiet() const { return quiet_; }

 private:
  void note(const std::string& msg) {
    if (!quiet_) log_ << msg << '\n';
  }

  std::optional<ConeCertificate> try_certificate(const Equation& eq, const ScalarField& psi) {
    try {
      return certify_config(cfg_, eq, psi);
    } catch (const std::exception& e) {
      log_ << "warning: no cone certificate, census columns left empty: " << e.what() << '\n';
      return std::nullopt;
    }
  }

  int certify() {
    const TorusGrid grid = build_grid(cfg_, cfg_.N);
    const Equation eq = build_equation(cfg_, grid);
    const ScalarField psi = build_psi(cfg_, eq);
    const ConeCertificate cert = certify_config(cfg_, eq, psi);
    ordered_json j;
    j["delta"] = cert.delta;
    j["radius"] = cert.radius;
    j["theta"] = cert.theta;
    j["theta_cap"] = cert.theta_cap;
    j["kappa"] = cert.kappa;
    j["tau"] = cert.tau;
    j["seed"] = cert.seed;
    write_json(out_dir_ / "certificate.json", j);
    note("certificate: delta " + format_real(cert.delta) + ", R " + format_real(cert.radius) + ", theta " +
         format_real(cert.theta));
    return kExitOk;
  }

  int solve() {
    const TorusGrid grid = build_grid(cfg_, cfg_.N);
    const Equation eq = build_equation(cfg_, grid);
    const ScalarField psi = build_psi(cfg_, eq);
    const ScalarField v = sample_expression(cfg_.supersolution, grid);
    const ScalarField ubar = sample_expression(cfg_.subsolution, grid);
    const auto cert = try_certificate(eq, psi);
    const ConeCertificate* cp = cert ? &*cert : nullptr;

    if (cfg_.method == "flow") return run_flow(eq, psi, v, ubar, cp, "probes.csv");

    std::ofstream csv(out_dir_ / "probes.csv");
    write_probe_header(csv);
    int step = 0;
    ContinuityOptions co;
    co.steps = cfg_.steps;
    co.keep_fields = false;
    co.observer = [&](const ContinuityState& st) {
      write_probe_row(csv, record_step(eq, st, step++, v, ubar, cp));
      note("t = " + format_real(st.t) + "  b_t = " + format_real(st.b_t) + "  newton " +
           std::to_string(st.newton_iters));
    };
    ContinuityResult res = continuity_run(eq, v, psi, cfg_.newton, co);
    csv.close();
    if (res.supersolution_violation > 0.0)
      log_ << "warning: background is not a supersolution (max log excess " << format_real(res.supersolution_violation)
           << ")\n";
    write_field(out_dir_ / "final_u", res.u_final);

    ordered_json extra;
    extra["supersolution_violation"] = res.supersolution_violation;
    extra["t_steps"] = res.states.size() - 1;
    if (cfg_.method == "both") {
      const FlowState fs = flow_only(eq, psi, v, ubar, cp, "probes_flow.csv");
      extra["flow_b"] = number(fs.drift);
      extra["flow_residual_inf"] = number(fs.residual_inf);
      extra["cross_method_u_diff"] = number((mean_zero(res.u_final) - mean_zero(fs.u)).sup_abs());
    }
    write_summary(res.b, res.residual_inf, kExitOk, extra);
    return kExitOk;
  }

  FlowState flow_only(const Equation& eq, const ScalarField& psi, const ScalarField& u0, const ScalarField& ubar,
                      const ConeCertificate* cp, const char* csv_name) {
    std::ofstream csv(out_dir_ / csv_name);
    write_probe_header(csv);
    FlowOptions fo;
    fo.dt = std::min(cfg_.flow_dt_max, Linearization(eq, u0).stability_dt());
    fo.t_end = cfg_.flow_t_end;
    fo.tol = cfg_.flow_tol;
    fo.record_every = cfg_.flow_record_every;
    long last = -1;
    fo.observer = [&](const FlowState& st) {
      write_probe_row(csv, record_step(eq, st, ubar, cp));
      last = st.steps;
      note("flow t = " + format_real(st.time) + "  residual " + format_real(st.residual_inf));
    };
    FlowState st = flow_run(eq, u0, psi, fo);
    if (st.steps != last) write_probe_row(csv, record_step(eq, st, ubar, cp));
    return st;
  }

  int run_flow(const Equation& eq, const ScalarField& psi, const ScalarField& u0, const ScalarField& ubar,
               const ConeCertificate* cp, const char* csv_name) {
    const FlowState st = flow_only(eq, psi, u0, ubar, cp, csv_name);
    write_field(out_dir_ / "final_u", sup_zero(st.u));
    ordered_json extra;
    extra["time"] = st.time;
    extra["steps"] = st.steps;
    extra["converged"] = st.residual_inf <= cfg_.flow_tol;
    write_summary(st.drift, st.residual_inf, kExitOk, extra);
    return kExitOk;
  }

  int flow() {
    const TorusGrid grid = build_grid(cfg_, cfg_.N);
    const Equation eq = build_equation(cfg_, grid);
    const ScalarField psi = build_psi(cfg_, eq);
    const ScalarField v = sample_expression(cfg_.supersolution, grid);
    const ScalarField ubar = sample_expression(cfg_.subsolution, grid);
    const auto cert = try_certificate(eq, psi);
    return run_flow(eq, psi, v, ubar, cert ? &*cert : nullptr, "probes.csv");
  }

  int sweep() {
    if (!cfg_.manufactured) throw ConfigError("sweep needs a manufactured solution");
    const std::vector<int> grids = cfg_.sweep_grids.empty() ? std::vector<int>{cfg_.N} : cfg_.sweep_grids;
    double last_residual = std::nan("");
    double last_b = std::nan("");
    const auto rows = convergence_sweep(grids, [&](int N) {
      const ManufacturedRun r = manufactured_run(cfg_, N);
      last_residual = r.residual_inf;
      last_b = r.b;
      note("N = " + std::to_string(N) + "  error " + format_real(r.error_inf));
      return r.error_inf;
    });
    std::ofstream csv(out_dir_ / "sweep.csv");
    write_sweep_csv(csv, rows);
    const bool ok = rows.empty() || rows.back().status == "ok";
    write_summary(last_b, last_residual, ok ? kExitOk : kExitSolver);
    if (!ok) log_ << "error: " << rows.back().status << '\n';
    return ok ? kExitOk : kExitSolver;
  }

  const RunConfig& cfg_;
  fs::path out_dir_;
  bool quiet_;
  std::ostream& log_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

ConeCertificate certify_config(const RunConfig& cfg, const Equation& eq, const ScalarField& psi) {
  const TorusGrid& grid = eq.grid();
  const QuotientParams& p = eq.params();
  const ScalarField ubar = sample_expression(cfg.subsolution, grid);
  const HermitianField gbar = assemble_gtilde(eq.chi(), eq.metric().metric(), ubar);
  const std::vector<SpectrumVec> mu = eigen_rel(gbar, eq.metric());
  double mu_min = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < mu.size(); ++s) {
    if (!mu[s].in_cone()) throw NonAdmissibleError("subsolution candidate is not admissible", s);
    mu_min = std::min(mu_min, mu[s].min());
  }
  std::vector<double> h(grid.size());
  for (std::size_t s = 0; s < grid.size(); ++s) h[s] = std::pow(psi[s] / p.binom(), 1.0 / p.m);

  CertifyOptions opts;
  opts.samples = cfg.cert_samples;
  opts.theta_sites = cfg.cert_theta_sites;
  opts.seed = cfg.seed;
  if (cfg.cert_delta) return certify_field(mu, h, p, *cfg.cert_delta, opts);
  double delta = 0.1 * mu_min;
  for (int k = 0;; ++k) {
    try {
      return certify_field(mu, h, p, delta, opts);
    } catch (const CertificationError&) {
      if (k == 20) throw;
      delta *= 0.5;
    }
  }
}

ManufacturedRun manufactured_run(const RunConfig& cfg, int N) {
  if (!cfg.manufactured) throw ConfigError("no manufactured solution in the config");
  const TorusGrid grid = build_grid(cfg, N);
  const Equation eq = build_equation(cfg, grid);
  const ScalarField psi = build_psi(cfg, eq);
  const ScalarField v = sample_expression(cfg.supersolution, grid);
  ContinuityOptions co;
  co.steps = cfg.steps;
  co.keep_fields = false;
  const ContinuityResult res = continuity_run(eq, v, psi, cfg.newton, co);
  const ScalarField exact = sample_expression(*cfg.manufactured, grid);
  return ManufacturedRun{(mean_zero(res.u_final) - mean_zero(exact)).sup_abs(), res.residual_inf, res.b};
}

int run(const RunConfig& cfg, Subcommand cmd, const RunOptions& opts) {
  std::ostream& err = opts.diagnostics ? *opts.diagnostics : std::cerr;
  std::optional<Session> session;
  try {
    session.emplace(cfg, opts);
    return session->dispatch(cmd);
  } catch (const ConfigError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ExprParseError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ArgumentError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "solver failure: " << e.what() << '\n';
    try {
      if (session) session->write_summary(std::nan(""), std::nan(""), kExitSolver);
    } catch (const std::exception&) {
    }
    return kExitSolver;
  }
}

int run(const fs::path& config_path, Subcommand cmd, const RunOptions& opts) {
  std::ostream& err = opts.diagnostics ? *opts.diagnostics : std::cerr;
  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "validation error: " << e.what() << '\n';
    return kExitValidation;
  }
  return run(cfg, cmd, opts);
}

}  // namespace hqlab

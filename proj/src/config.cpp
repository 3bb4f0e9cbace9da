#include "hqlab/config.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>
#include <set>
#include <sstream>

#include "hqlab/errors.hpp"

namespace hqlab {

using nlohmann::json;

namespace {

Expression zero_expr() { return Expression(make_number(0.0)); }

Expression parse_field(const std::string& where, const std::string& src) {
  try {
    return parse_expr(src);
  } catch (const ExprParseError& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

/// Number or expression text.
Expression expression_value(const std::string& where, const json& v) {
  if (v.is_number()) return Expression(make_number(v.get<double>()));
  if (v.is_string()) return parse_field(where, v.get<std::string>());
  throw ConfigError(where + ": expected a number or an expression string");
}

CMat matrix_value(const std::string& where, const json& v, int n) {
  if (!v.is_array() || static_cast<int>(v.size()) != n) throw ConfigError(where + ": expected " + std::to_string(n) + " rows");
  CMat out(n, n);
  for (int i = 0; i < n; ++i) {
    const json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<int>(row.size()) != n)
      throw ConfigError(where + ": row " + std::to_string(i + 1) + " must have " + std::to_string(n) + " entries");
    for (int j = 0; j < n; ++j) {
      const json& e = row[static_cast<std::size_t>(j)];
      if (e.is_number()) {
        out(i, j) = cplx(e.get<double>(), 0.0);
      } else if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        out(i, j) = cplx(e[0].get<double>(), e[1].get<double>());
      } else {
        throw ConfigError(where + ": entries are numbers or [re, im] pairs");
      }
    }
  }
  if (!is_hermitian(out)) throw ConfigError(where + ": matrix is not Hermitian");
  return out;
}

template <class T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> known) {
  std::set<std::string> names(known.begin(), known.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!names.count(it.key())) throw ConfigError(where + ": unknown field '" + it.key() + "'");
}

}  // namespace

RunConfig::RunConfig()
    : g(CMat::Identity(2, 2)),
      chi_base(CMat::Identity(2, 2)),
      subsolution(zero_expr()),
      supersolution(zero_expr()) {}

void check_grid_size(int n, int N) {
  if (n == 2) {
    if (N != 8 && N != 16 && N != 32 && N != 64) throw ConfigError("N must be one of 8, 16, 32, 64 when n = 2");
    return;
  }
  if (N < 4 || N % 2 != 0) throw ConfigError("N must be even and at least 4");
  if (std::pow(static_cast<double>(N), 2 * n) > 4.0e6)
    throw ConfigError("grid too large: N^(2n) must stay below 4e6 sites");
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, "config",
                 {"n", "m", "N", "L", "g", "chi", "psi", "manufactured", "subsolution", "supersolution", "method",
                  "newton", "flow", "steps", "seed", "output_dir", "sweep", "certificate"});

  RunConfig c;
  c.n = get_or(j, "n", 2);
  c.m = get_or(j, "m", 1);
  if (c.n < 1 || c.n > 4) throw ConfigError("n must lie in [1, 4]");
  if (c.m < 1 || c.m > c.n) throw ConfigError("m must satisfy 1 <= m <= n");
  c.N = get_or(j, "N", 8);
  check_grid_size(c.n, c.N);
  c.L = get_or(j, "L", 2.0 * std::numbers::pi);
  if (!(c.L > 0.0) || !std::isfinite(c.L)) throw ConfigError("L must be positive");

  c.g = j.contains("g") ? matrix_value("g", j["g"], c.n) : CMat(CMat::Identity(c.n, c.n));
  try {
    MetricFactor check(c.g);
  } catch (const std::exception&) {
    throw ConfigError("g must be positive definite");
  }

  c.chi_base = CMat::Identity(c.n, c.n);
  if (j.contains("chi")) {
    const json& chi = j["chi"];
    if (!chi.is_object()) throw ConfigError("chi must be an object");
    reject_unknown(chi, "chi", {"kind", "base", "perturbation"});
    const std::string kind = get_or<std::string>(chi, "kind", "constant");
    if (kind != "constant" && kind != "expression") throw ConfigError("chi.kind must be 'constant' or 'expression'");
    if (chi.contains("base")) c.chi_base = matrix_value("chi.base", chi["base"], c.n);
    if (chi.contains("perturbation")) {
      if (kind != "expression") throw ConfigError("chi.perturbation requires chi.kind = 'expression'");
      for (const json& p : chi["perturbation"]) {
        reject_unknown(p, "chi.perturbation", {"i", "j", "re", "im"});
        ChiPerturbation e{get_or(p, "i", 0), get_or(p, "j", 0), zero_expr(), zero_expr()};
        if (e.i < 1 || e.i > c.n || e.j < 1 || e.j > c.n)
          throw ConfigError("chi.perturbation indices must lie in [1, n]");
        if (p.contains("re")) e.re = expression_value("chi.perturbation.re", p["re"]);
        if (p.contains("im")) e.im = expression_value("chi.perturbation.im", p["im"]);
        if (e.i == e.j && !e.im.is_constant())
          throw ConfigError("chi.perturbation: diagonal entries must be real");
        if (e.i == e.j && e.im.eval({}) != 0.0) throw ConfigError("chi.perturbation: diagonal entries must be real");
        c.chi_perturbation.push_back(std::move(e));
      }
    }
  }

  if (j.contains("psi") && j.contains("manufactured"))
    throw ConfigError("give either psi or manufactured, not both");
  if (j.contains("psi")) {
    const json& psi = j["psi"];
    if (psi.is_object()) {
      reject_unknown(psi, "psi", {"kind", "value", "source"});
      const std::string kind = get_or<std::string>(psi, "kind", "constant");
      if (kind == "constant") {
        if (!psi.contains("value") || !psi["value"].is_number()) throw ConfigError("psi.value must be a number");
        c.psi = Expression(make_number(psi["value"].get<double>()));
      } else if (kind == "expression") {
        c.psi = parse_field("psi.source", get_or<std::string>(psi, "source", ""));
      } else {
        throw ConfigError("psi.kind must be 'constant' or 'expression'");
      }
    } else {
      c.psi = expression_value("psi", psi);
    }
  }
  if (j.contains("manufactured")) {
    const json& man = j["manufactured"];
    if (!man.is_object() || !man.contains("u")) throw ConfigError("manufactured must be an object with field 'u'");
    reject_unknown(man, "manufactured", {"u"});
    c.manufactured = expression_value("manufactured.u", man["u"]);
  }
  if (!c.psi && !c.manufactured) c.psi = Expression(make_number(1.0));
  if (j.contains("subsolution")) c.subsolution = expression_value("subsolution", j["subsolution"]);
  if (j.contains("supersolution")) c.supersolution = expression_value("supersolution", j["supersolution"]);

  const auto check_axes = [&](const Expression& e, const char* what) {
    if (e.max_axis() >= 2 * c.n)
      throw ConfigError(std::string(what) + " uses a coordinate beyond x" + std::to_string(c.n) + ", y" +
                        std::to_string(c.n));
  };
  if (c.psi) check_axes(*c.psi, "psi");
  if (c.manufactured) check_axes(*c.manufactured, "manufactured.u");
  check_axes(c.subsolution, "subsolution");
  check_axes(c.supersolution, "supersolution");
  for (const auto& p : c.chi_perturbation) {
    check_axes(p.re, "chi.perturbation");
    check_axes(p.im, "chi.perturbation");
  }

  c.method = get_or<std::string>(j, "method", "continuity");
  if (c.method != "continuity" && c.method != "flow" && c.method != "both")
    throw ConfigError("method must be continuity, flow or both");

  if (j.contains("newton")) {
    const json& nw = j["newton"];
    reject_unknown(nw, "newton", {"tol_residual", "max_iters", "linear_tol", "linear_max_iters"});
    c.newton.tol_residual = get_or(nw, "tol_residual", c.newton.tol_residual);
    c.newton.max_iters = get_or(nw, "max_iters", c.newton.max_iters);
    c.newton.linear_tol = get_or(nw, "linear_tol", c.newton.linear_tol);
    c.newton.linear_max_iters = get_or(nw, "linear_max_iters", c.newton.linear_max_iters);
    try {
      c.newton.validate();
    } catch (const ArgumentError& e) {
      throw ConfigError(e.what());
    }
  }
  if (j.contains("flow")) {
    const json& fl = j["flow"];
    reject_unknown(fl, "flow", {"dt_max", "t_end", "tol", "record_every"});
    c.flow_dt_max = get_or(fl, "dt_max", c.flow_dt_max);
    c.flow_t_end = get_or(fl, "t_end", c.flow_t_end);
    c.flow_tol = get_or(fl, "tol", c.flow_tol);
    c.flow_record_every = get_or(fl, "record_every", c.flow_record_every);
    if (!(c.flow_dt_max > 0.0) || !(c.flow_t_end > 0.0) || !(c.flow_tol > 0.0) || c.flow_record_every < 1)
      throw ConfigError("flow fields must be positive");
  }
  c.steps = get_or(j, "steps", c.steps);
  if (c.steps < 1) throw ConfigError("steps must be positive");
  c.seed = get_or<std::uint64_t>(j, "seed", 0);
  c.output_dir = get_or<std::string>(j, "output_dir", c.output_dir);
  if (j.contains("sweep")) {
    const json& sw = j["sweep"];
    reject_unknown(sw, "sweep", {"grids"});
    c.sweep_grids = get_or<std::vector<int>>(sw, "grids", {});
    for (int N : c.sweep_grids) check_grid_size(c.n, N);
  }
  if (j.contains("certificate")) {
    const json& ce = j["certificate"];
    reject_unknown(ce, "certificate", {"delta", "samples", "theta_sites"});
    if (ce.contains("delta")) {
      c.cert_delta = get_or(ce, "delta", 0.0);
      if (!(*c.cert_delta > 0.0)) throw ConfigError("certificate.delta must be positive");
    }
    c.cert_samples = get_or(ce, "samples", c.cert_samples);
    c.cert_theta_sites = get_or(ce, "theta_sites", c.cert_theta_sites);
    if (c.cert_samples < 1 || c.cert_theta_sites < 1) throw ConfigError("certificate sample counts must be positive");
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

TorusGrid build_grid(const RunConfig& cfg, int N) { return TorusGrid(cfg.n, N, cfg.L); }

ScalarField sample_expression(const Expression& e, const TorusGrid& grid) {
  return ScalarField::from_function(grid, [&](std::span<const double> x) { return e.eval(x); });
}

HermitianField build_chi(const RunConfig& cfg, const TorusGrid& grid) {
  HermitianField chi(grid, cfg.chi_base);
  for (const ChiPerturbation& p : cfg.chi_perturbation) {
    const ScalarField re = sample_expression(p.re, grid);
    const ScalarField im = sample_expression(p.im, grid);
    const int i = p.i - 1, j = p.j - 1;
    for (std::size_t s = 0; s < grid.size(); ++s) {
      CMat a = chi.at(s);
      a(i, j) += cplx(re[s], im[s]);
      if (i != j) a(j, i) += cplx(re[s], -im[s]);
      chi.set(s, a);
    }
  }
  return chi;
}

Equation build_equation(const RunConfig& cfg, const TorusGrid& grid) {
  return Equation(build_chi(cfg, grid), cfg.g, QuotientParams(cfg.n, cfg.m));
}

ScalarField exact_quotient(const Equation& eq, const Expression& u) {
  const TorusGrid& grid = eq.grid();
  const int d = grid.real_dim();
  const QuotientParams& p = eq.params();
  std::vector<Expression> second;
  for (int a = 0; a < d; ++a) {
    const Expression da = u.derivative(a);
    for (int b = 0; b < d; ++b) second.push_back(da.derivative(b));
  }
  ScalarField out(grid);
  for (std::size_t s = 0; s < grid.size(); ++s) {
    const auto x = grid.coords(s);
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(d));
    RealHessian h{};
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        h[static_cast<std::size_t>(a * kMaxRealDim + b)] = second[static_cast<std::size_t>(a * d + b)].eval(xs);
    const CMat a = eq.chi().at(s) + complex_hessian(h, p.n);
    const auto dec = generalized_eigen(a, eq.metric(), false);
    const SpectrumVec lam(std::span<const double>(dec.values.data(), static_cast<std::size_t>(p.n)));
    if (!lam.in_cone()) throw ConfigError("manufactured solution is not admissible at site " + std::to_string(s));
    const auto e = all_sigmas(lam);
    out[s] = p.binom() * e[static_cast<std::size_t>(p.n)] / e[static_cast<std::size_t>(p.n - p.m)];
  }
  return out;
}

ScalarField build_psi(const RunConfig& cfg, const Equation& eq) {
  const ScalarField psi = cfg.manufactured ? exact_quotient(eq, *cfg.manufactured) : sample_expression(*cfg.psi, eq.grid());
  for (std::size_t s = 0; s < psi.size(); ++s)
    if (!(psi[s] > 0.0) || !std::isfinite(psi[s]))
      throw ConfigError("psi must be strictly positive on the whole grid (psi >= c > 0); fails at site " +
                        std::to_string(s));
  return psi;
}

}  // namespace hqlab

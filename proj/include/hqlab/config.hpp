#pragma once

// JSON run configuration and the fields it describes.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hqlab/expr.hpp"
#include "hqlab/solver.hpp"

namespace hqlab {

/// Invalid configuration; maps to exit status 2.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ChiPerturbation {
  int i = 1;  // 1-based row
  int j = 1;  // 1-based column; (j, i) receives the conjugate
  Expression re;
  Expression im;
};

struct RunConfig {
  int n = 2;
  int m = 1;
  int N = 8;
  double L = 0.0;  // set to 2 pi when absent
  CMat g;
  CMat chi_base;
  std::vector<ChiPerturbation> chi_perturbation;
  std::optional<Expression> psi;           // absent when manufactured
  std::optional<Expression> manufactured;  // exact solution u*
  Expression subsolution;                  // u-bar, default 0
  Expression supersolution;                // v, default 0
  std::string method = "continuity";       // continuity | flow | both
  NewtonConfig newton;
  double flow_dt_max = 1.0;  // clipped to the stability limit
  double flow_t_end = 400.0;
  double flow_tol = 1e-8;
  long flow_record_every = 50;
  int steps = 20;
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  std::vector<int> sweep_grids;
  std::optional<double> cert_delta;  // automatic when absent
  int cert_samples = 4096;
  int cert_theta_sites = 64;

  RunConfig();
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

/// Checks N against the memory guard for n; throws ConfigError.
void check_grid_size(int n, int N);

TorusGrid build_grid(const RunConfig& cfg, int N);
HermitianField build_chi(const RunConfig& cfg, const TorusGrid& grid);
Equation build_equation(const RunConfig& cfg, const TorusGrid& grid);
ScalarField sample_expression(const Expression& e, const TorusGrid& grid);

/// psi on the grid: the configured expression, or for a manufactured
/// problem the exact quotient of chi + ddbar u* from analytic second
/// derivatives. Throws ConfigError unless psi > 0 at every site.
ScalarField build_psi(const RunConfig& cfg, const Equation& eq);

/// binom(n,m) sigma_n/sigma_{n-m} of chi + ddbar u with ddbar u taken from
/// the exact derivatives of the expression.
ScalarField exact_quotient(const Equation& eq, const Expression& u);

}  // namespace hqlab

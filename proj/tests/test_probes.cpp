#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "hqlab/probes.hpp"
#include "support.hpp"

using namespace hqlab;

namespace {

Equation flat_equation(int n, int m, int N, const CMat& chi) {
  const TorusGrid grid(n, N);
  return Equation(HermitianField(grid, chi), CMat::Identity(n, n), {n, m});
}

}  // namespace

TEST_CASE("record of the trivial state") {
  const auto eq = flat_equation(2, 1, 8, CMat::Identity(2, 2));
  const ScalarField zero(eq.grid());
  ConeCertificate cert;
  cert.radius = 3.0;
  cert.theta = 0.1;
  const ContinuityState st{1.0, zero, 0.0, 0, 0.0};
  const auto rec = record_step(eq, st, 20, zero, zero, &cert);
  CHECK(rec.step == 20);
  CHECK(rec.t == 1.0);
  CHECK(rec.osc == 0.0);
  CHECK(rec.l1_gap == 0.0);
  CHECK(rec.grad_sup == 0.0);
  CHECK(rec.lambda1_sup == 0.0);
  CHECK(rec.small_frac == 1.0);
  CHECK(rec.branch1_frac == 0.0);
  CHECK(rec.branch2_frac == 0.0);
  CHECK(rec.spec_min == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rec.spec_max == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rec.sum_Gii_min == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("census without a certificate and on bad states") {
  const auto eq = flat_equation(2, 1, 8, CMat::Identity(2, 2));
  const TorusGrid& grid = eq.grid();
  const ScalarField zero(grid);
  Snapshot snap;
  snap.u = &zero;
  const auto rec = record_step(eq, snap, zero, nullptr);
  CHECK(std::isnan(rec.branch1_frac));
  CHECK(std::isnan(rec.small_frac));
  CHECK(rec.sum_Gii_min == doctest::Approx(2.0));

  const auto bad = ScalarField::from_function(grid, [](auto x) { return 8.0 * std::cos(x[0]); });
  snap.u = &bad;
  const auto rb = record_step(eq, snap, zero, nullptr);
  CHECK(std::isnan(rb.spec_min));
  CHECK(std::isfinite(rb.osc));
  snap.u = nullptr;
  CHECK(std::isnan(record_step(eq, snap, zero, nullptr).osc));
}

TEST_CASE("branch fractions partition the grid") {
  const auto eq = flat_equation(2, 1, 8, CMat::Identity(2, 2));
  const TorusGrid& grid = eq.grid();
  const auto u = ScalarField::from_function(grid, [](auto x) { return 0.5 * std::sin(x[0]) * std::cos(x[3]); });
  const ScalarField zero(grid);
  ConeCertificate cert;
  cert.theta = 0.2;
  for (double radius : {0.0, 1.42, 1.5, 10.0}) {
    cert.radius = radius;
    FlowState st{0.0, u, 0.1, 0.0, 0.0, 0};
    const auto rec = record_step(eq, st, zero, &cert);
    CHECK(rec.branch1_frac >= 0.0);
    CHECK(rec.branch2_frac >= 0.0);
    CHECK(rec.small_frac >= 0.0);
    CHECK(std::abs(rec.branch1_frac + rec.branch2_frac + rec.small_frac - 1.0) <= 1e-12);
    CHECK(rec.spec_min > 0.0);
    CHECK(rec.sum_Gii_min > 0.0);
  }
}

TEST_CASE("csv output") {
  std::ostringstream os;
  write_probe_header(os);
  CHECK(os.str() ==
        "step,t,b_t,osc,l1_gap,grad_sup,lambda1_sup,spec_min,spec_max,branch1_frac,branch2_frac,small_frac,"
        "sum_Gii_min,newton_iters,residual_inf\n");
  EstimateRecord r;
  r.step = 3;
  r.t = 0.15;
  r.b_t = std::nan("");
  r.newton_iters = 4;
  std::ostringstream row;
  write_probe_row(row, r);
  const std::string line = row.str();
  CHECK(line.rfind("3,0.14999999999999999,nan,", 0) == 0);
  CHECK(std::count(line.begin(), line.end(), ',') == 14);
  CHECK(format_real(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_real(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("sweep table") {
  CHECK(convergence_sweep({}, [](int) { return 1.0; }).empty());
  std::ostringstream empty;
  write_sweep_csv(empty, {});
  CHECK(empty.str() == "N,error_inf,observed_order,status\n");

  const auto rows = convergence_sweep({8, 16, 32}, [](int N) { return 1.0 / (N * N); });
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].observed_order == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(rows[1].observed_order == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::isnan(rows[2].observed_order));

  const auto partial = convergence_sweep({8, 16, 32}, [](int N) -> double {
    if (N == 16) throw std::runtime_error("diverged, badly\nreally");
    return 1.0;
  });
  REQUIRE(partial.size() == 2);
  CHECK(partial[0].status == "ok");
  CHECK(partial[1].status.rfind("failed: ", 0) == 0);
  CHECK(partial[1].status.find(',') == std::string::npos);
  CHECK(partial[1].status.find('\n') == std::string::npos);
}

TEST_CASE("sweep of the linear case is second order") {
  // n = 1: the solution of 1 + u_{z zbar} = psi e^b for u* = cos(x1) sin(y1) / 2.
  auto error_at = [](int N) {
    const TorusGrid grid(1, N);
    const Equation eq(HermitianField(grid, CMat::Identity(1, 1)), CMat::Identity(1, 1), {1, 1});
    const auto psi = ScalarField::from_function(grid, [](auto x) { return 1.0 - 0.25 * std::cos(x[0]) * std::sin(x[1]); });
    const auto ustar = ScalarField::from_function(grid, [](auto x) { return 0.5 * std::cos(x[0]) * std::sin(x[1]); });
    const auto res = newton_solve(eq, psi, ScalarField(grid), NewtonConfig{});
    return (res.u - mean_zero(ustar)).sup_abs();
  };
  const auto rows = convergence_sweep({8, 16, 32, 64}, error_at);
  REQUIRE(rows.size() == 4);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(rows[static_cast<std::size_t>(k)].observed_order - 2.0) <= 0.15);
}

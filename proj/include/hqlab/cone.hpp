#pragma once

// Geometry of the positive cone Gamma_n and its level sets
// Gamma_n^sigma = {f > sigma}: the C-subsolution test, the (delta, R)
// certificate, the two-branch dichotomy and sampled lower bounds.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hqlab/symfunc.hpp"

namespace hqlab {

struct ConeCertificate {
  double delta = 0.0;      // cone-shift margin
  double radius = 0.0;     // R: shifted set at level h lies in B_R(0)
  double theta = 0.0;      // dichotomy constant
  double theta_cap = 0.0;  // lower bound for sum_i G^{ii} on the level set
  double kappa = 0.0;      // lower bound for sum_i f_i on the level set
  double tau = 0.0;        // tau <= mu <= 1/tau sitewise, in (0, 1)
  std::uint64_t seed = 0;

  bool valid() const noexcept;
};

/// Certification failed at a site; direction is -1 when the shift itself
/// left the cone.
class CertificationError : public std::runtime_error {
 public:
  CertificationError(const std::string& what, std::size_t site, int direction);
  std::size_t site() const noexcept { return site_; }
  int direction() const noexcept { return direction_; }

 private:
  std::size_t site_;
  int direction_;
};

enum class DichotomyBranch { SubsolutionGap, DominatedDiagonal, SmallSpectrum };

const char* to_string(DichotomyBranch b) noexcept;

struct DichotomyReport {
  DichotomyBranch branch = DichotomyBranch::SmallSpectrum;
  double margin = 0.0;
  std::size_t site = 0;
};

/// (mu + Gamma_n) meets the level set {f = h} in a bounded set, i.e. every
/// coordinate limit of f from mu exceeds h. Always true when m == n.
bool is_c_subsolution_at(const SpectrumVec& mu, double h, const QuotientParams& p);

struct CertifyOptions {
  int samples = 4096;         // boundary samples for kappa, Theta and theta
  int theta_sites = 64;       // sites visited when sampling theta
  std::uint64_t seed = 0;
};

ConeCertificate certify_field(std::span<const SpectrumVec> mu_field, std::span<const double> h_field,
                              const QuotientParams& p, double delta, const CertifyOptions& opts = {});

/// Solves f(mu + t e_i) = h for t >= 0 by bisection (0 if f(mu) >= h already).
double level_crossing(const SpectrumVec& mu, int i, double h, const QuotientParams& p);

/// Evaluates the two alternatives at a spectrum lambda_sol. `mu` holds the
/// diagonal of the subsolution matrix in the eigenframe of the solution, so
/// sum_i G^{ii} (mu_i - lambda_i) is the full contraction.
DichotomyReport dichotomy_check(const SpectrumVec& lambda_sol, const SpectrumVec& mu,
                                const ConeCertificate& cert, const QuotientParams& p);

/// Minimum of sum_i f_i over `samples` points of the level set {f = sigma}.
double kappa_probe(double sigma_level, const QuotientParams& p, int samples, std::uint64_t seed = 0);

/// Deterministic sample source. The engine output is fixed by the standard;
/// the uniform map is done here so results do not depend on the library's
/// distribution implementations.
class SampleStream {
 public:
  explicit SampleStream(std::uint64_t seed) : engine_(seed) {}
  double uniform() noexcept;  // in (0, 1)
  /// Uniform point on the open simplex {d_i > 0, sum d_i = 1}.
  SpectrumVec simplex(int n);
  /// Simplex point pushed toward the faces: entries raised to `power` and
  /// renormalised. Produces level-set points of large norm.
  SpectrumVec skewed_simplex(int n, double power);

 private:
  std::mt19937_64 engine_;
};

/// Rescales a cone direction onto the level set {f = sigma}.
SpectrumVec project_to_level(const SpectrumVec& direction, double sigma_level, const QuotientParams& p);

}  // namespace hqlab

#include "hqlab/cone.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hqlab/errors.hpp"
#include "hqlab/parallel.hpp"

namespace hqlab {

bool ConeCertificate::valid() const noexcept {
  return delta > 0.0 && radius > 0.0 && theta > 0.0 && theta_cap > 0.0 && kappa > 0.0 && tau > 0.0 &&
         tau < 1.0 && std::isfinite(radius);
}

CertificationError::CertificationError(const std::string& what, std::size_t site, int direction)
    : std::runtime_error(what + " (site " + std::to_string(site) +
                         (direction >= 0 ? ", direction " + std::to_string(direction) : std::string()) + ")"),
      site_(site),
      direction_(direction) {}

const char* to_string(DichotomyBranch b) noexcept {
  switch (b) {
    case DichotomyBranch::SubsolutionGap: return "SubsolutionGap";
    case DichotomyBranch::DominatedDiagonal: return "DominatedDiagonal";
    case DichotomyBranch::SmallSpectrum: return "SmallSpectrum";
  }
  return "?";
}

double SampleStream::uniform() noexcept {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

SpectrumVec SampleStream::simplex(int n) {
  SpectrumVec d(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    d[i] = -std::log(uniform());
    total += d[i];
  }
  for (int i = 0; i < n; ++i) d[i] /= total;
  return d;
}

SpectrumVec SampleStream::skewed_simplex(int n, double power) {
  SpectrumVec d = simplex(n);
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    d[i] = std::pow(d[i], power);
    total += d[i];
  }
  for (int i = 0; i < n; ++i) d[i] = std::max(d[i] / total, 1e-300);
  return d;
}

SpectrumVec project_to_level(const SpectrumVec& direction, double sigma_level, const QuotientParams& p) {
  return direction.scaled(sigma_level / f_quotient(direction, p));
}

bool is_c_subsolution_at(const SpectrumVec& mu, double h, const QuotientParams& p) {
  if (mu.size() != p.n) throw ArgumentError("is_c_subsolution_at: spectrum length does not match n");
  if (!mu.in_cone()) throw DomainError("is_c_subsolution_at: mu is not in the positive cone");
  if (!(h > 0.0)) throw DomainError("is_c_subsolution_at: level must be positive");
  if (p.m == p.n) return true;
  for (int i = 0; i < p.n; ++i)
    if (!(directional_limit(mu, i, p) > h)) return false;
  return true;
}

double level_crossing(const SpectrumVec& mu, int i, double h, const QuotientParams& p) {
  if (f_quotient(mu, p) >= h) return 0.0;
  if (!(directional_limit(mu, i, p) > h))
    throw DomainError("level_crossing: the coordinate ray never reaches the level");
  double lo = 0.0;
  double hi = std::max(1.0, mu.norm());
  while (f_quotient(mu.plus_basis(i, hi), p) < h) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) throw DomainError("level_crossing: no bracket found");
  }
  while (hi - lo > 1e-10 * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    (f_quotient(mu.plus_basis(i, mid), p) < h ? lo : hi) = mid;
  }
  return hi;
}

namespace {

double sum_of(const SpectrumVec& v) {
  double s = 0.0;
  for (int i = 0; i < v.size(); ++i) s += v[i];
  return s;
}

struct SiteScan {
  double extent = 0.0;
  std::size_t bad_site = std::numeric_limits<std::size_t>::max();
  int bad_direction = -1;
  bool shift_left_cone = false;
};

}  // namespace

ConeCertificate certify_field(std::span<const SpectrumVec> mu_field, std::span<const double> h_field,
                              const QuotientParams& p, double delta, const CertifyOptions& opts) {
  if (mu_field.size() != h_field.size()) throw ArgumentError("certify_field: field sizes differ");
  if (mu_field.empty()) throw ArgumentError("certify_field: empty field");
  if (!(delta > 0.0)) throw ArgumentError("certify_field: delta must be positive");
  if (opts.samples < 1) throw ArgumentError("certify_field: need at least one sample");
  const std::size_t sites = mu_field.size();

  const SiteScan scan = block_reduce(
      sites, SiteScan{},
      [&](std::size_t begin, std::size_t end) {
        SiteScan out;
        for (std::size_t s = begin; s < end; ++s) {
          const SpectrumVec& mu = mu_field[s];
          const double h = h_field[s];
          if (mu.size() != p.n || !mu.in_cone() || !(h > 0.0)) {
            out.bad_site = s;
            out.shift_left_cone = true;
            return out;
          }
          const SpectrumVec shifted = mu.shifted(-delta);
          if (!shifted.in_cone()) {
            out.bad_site = s;
            out.shift_left_cone = true;
            return out;
          }
          double ext2 = 0.0;
          for (int i = 0; i < p.n; ++i) {
            if (p.m < p.n && !(directional_limit(shifted, i, p) > h)) {
              out.bad_site = s;
              out.bad_direction = i;
              return out;
            }
            const double t = level_crossing(shifted, i, h, p);
            ext2 += (shifted[i] + t) * (shifted[i] + t);
          }
          out.extent = std::max(out.extent, std::sqrt(ext2));
        }
        return out;
      },
      [](SiteScan a, const SiteScan& b) {
        if (a.bad_site != std::numeric_limits<std::size_t>::max()) return a;
        if (b.bad_site != std::numeric_limits<std::size_t>::max()) return b;
        a.extent = std::max(a.extent, b.extent);
        return a;
      });

  if (scan.bad_site != std::numeric_limits<std::size_t>::max()) {
    if (scan.shift_left_cone)
      throw CertificationError("certify_field: shifted spectrum leaves the positive cone", scan.bad_site, -1);
    throw CertificationError("certify_field: subsolution test fails", scan.bad_site, scan.bad_direction);
  }

  ConeCertificate cert;
  cert.delta = delta;
  cert.seed = opts.seed;
  cert.radius = 2.0 * scan.extent;

  double tau = 1.0;
  double h_min = std::numeric_limits<double>::infinity();
  double h_max = 0.0;
  for (std::size_t s = 0; s < sites; ++s) {
    tau = std::min({tau, mu_field[s].min(), 1.0 / mu_field[s].max()});
    h_min = std::min(h_min, h_field[s]);
    h_max = std::max(h_max, h_field[s]);
  }
  cert.tau = std::min(tau, std::nextafter(1.0, 0.0));

  cert.kappa = kappa_probe(h_min, p, opts.samples, opts.seed);

  // Theta: sum_i G^{ii} on the level set is m h^{-m-1} sum_i f_i, smallest
  // at the highest level.
  {
    SampleStream rng(opts.seed + 1);
    double theta_cap = std::numeric_limits<double>::infinity();
    for (int k = 0; k < opts.samples; ++k) {
      const SpectrumVec lam = project_to_level(rng.simplex(p.n), h_max, p);
      theta_cap = std::min(theta_cap, sum_of(g_diagonal_derivative(lam, p)));
    }
    cert.theta_cap = theta_cap;
  }

  // theta: sampled minimum over level-set points outside B_R of the better
  // of the two dichotomy quotients.
  {
    SampleStream rng(opts.seed + 2);
    const std::size_t visit = std::max<std::size_t>(1, std::min<std::size_t>(sites, static_cast<std::size_t>(std::max(1, opts.theta_sites))));
    const std::size_t stride = sites / visit;
    const int per_site = std::max(32, opts.samples / static_cast<int>(visit));
    double best_outside = std::numeric_limits<double>::infinity();
    double best_any = std::numeric_limits<double>::infinity();
    static constexpr double kPowers[] = {1.0, 2.0, 4.0, 8.0};
    for (std::size_t v = 0; v < visit; ++v) {
      const std::size_t s = v * stride;
      const SpectrumVec& mu = mu_field[s];
      for (int k = 0; k < per_site; ++k) {
        const SpectrumVec lam = project_to_level(rng.skewed_simplex(p.n, kPowers[k % 4]), h_field[s], p);
        const SpectrumVec fi = grad_f(lam, p);
        const double total = sum_of(fi);
        double gap = 0.0;
        double min_fi = fi[0];
        for (int i = 0; i < p.n; ++i) {
          gap += fi[i] * (mu[i] - lam[i]);
          min_fi = std::min(min_fi, fi[i]);
        }
        const double q = std::max(gap / total, min_fi / total);
        best_any = std::min(best_any, q);
        if (lam.norm() > cert.radius) best_outside = std::min(best_outside, q);
      }
    }
    const double raw = std::isfinite(best_outside) ? best_outside : best_any;
    cert.theta = std::max(raw, 1e-6);
  }
  return cert;
}

DichotomyReport dichotomy_check(const SpectrumVec& lambda_sol, const SpectrumVec& mu, const ConeCertificate& cert,
                                const QuotientParams& p) {
  if (!lambda_sol.in_cone()) throw DomainError("dichotomy_check: solution spectrum is not in the positive cone");
  if (mu.size() != p.n || lambda_sol.size() != p.n) throw ArgumentError("dichotomy_check: length mismatch");
  DichotomyReport rep;
  const double norm = lambda_sol.norm();
  if (norm <= cert.radius) {
    rep.branch = DichotomyBranch::SmallSpectrum;
    rep.margin = cert.radius - norm;
    return rep;
  }
  const SpectrumVec gii = g_diagonal_derivative(lambda_sol, p);
  const double total = sum_of(gii);
  double gap = 0.0;
  double min_g = gii[0];
  for (int i = 0; i < p.n; ++i) {
    gap += gii[i] * (mu[i] - lambda_sol[i]);
    min_g = std::min(min_g, gii[i]);
  }
  const double m1 = gap - cert.theta * total;
  const double m2 = min_g - cert.theta * total;
  if (m1 >= m2) {
    rep.branch = DichotomyBranch::SubsolutionGap;
    rep.margin = m1;
  } else {
    rep.branch = DichotomyBranch::DominatedDiagonal;
    rep.margin = m2;
  }
  return rep;
}

double kappa_probe(double sigma_level, const QuotientParams& p, int samples, std::uint64_t seed) {
  if (!(sigma_level > 0.0)) throw DomainError("kappa_probe: level must be positive");
  if (samples < 1) throw ArgumentError("kappa_probe: need at least one sample");
  SampleStream rng(seed);
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < samples; ++k) {
    const SpectrumVec lam = project_to_level(rng.simplex(p.n), sigma_level, p);
    best = std::min(best, sum_of(grad_f(lam, p)));
  }
  return best;
}

}  // namespace hqlab

#include "hqlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "hqlab/errors.hpp"
#include "hqlab/parallel.hpp"

namespace hqlab {

RealHessian real_hessian_at(std::span<const double> u, const TorusGrid& grid, const SiteCursor& at) {
  RealHessian h{};
  const int d = grid.real_dim();
  const double dx = grid.spacing();
  const double inv2 = 1.0 / (dx * dx);
  const double inv4 = 0.25 * inv2;
  const double c = u[at.site()];
  for (int a = 0; a < d; ++a) {
    h[static_cast<std::size_t>(a * kMaxRealDim + a)] = (u[at.plus(a)] - 2.0 * c + u[at.minus(a)]) * inv2;
    for (int b = a + 1; b < d; ++b) {
      const double v = (u[at.offset(at.up(a) + at.up(b))] - u[at.offset(at.up(a) + at.down(b))] -
                        u[at.offset(at.down(a) + at.up(b))] + u[at.offset(at.down(a) + at.down(b))]) *
                       inv4;
      h[static_cast<std::size_t>(a * kMaxRealDim + b)] = v;
      h[static_cast<std::size_t>(b * kMaxRealDim + a)] = v;
    }
  }
  return h;
}

CMat complex_hessian(const RealHessian& h, int n) {
  const auto H = [&](int a, int b) { return h[static_cast<std::size_t>(a * kMaxRealDim + b)]; };
  CMat m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int xi = 2 * i, yi = 2 * i + 1, xj = 2 * j, yj = 2 * j + 1;
      m(i, j) = 0.25 * cplx(H(xi, xj) + H(yi, yj), H(xi, yj) - H(yi, xj));
    }
  }
  return m;
}

HermitianField ddbar(const ScalarField& u) {
  const TorusGrid& grid = u.grid();
  HermitianField out(grid);
  parallel_blocks(grid.size(), [&](std::size_t begin, std::size_t end) {
    SiteCursor cur(grid, begin);
    for (std::size_t s = begin; s < end; ++s, cur.advance())
      out.set(s, complex_hessian(real_hessian_at(u.values(), grid, cur), grid.n()));
  });
  return out;
}

HermitianField assemble_gtilde(const HermitianField& chi, const CMat& g, const ScalarField& u) {
  if (!(chi.grid() == u.grid())) throw ArgumentError("assemble_gtilde: chi and u live on different grids");
  if (g.rows() != chi.dim() || g.cols() != chi.dim())
    throw ArgumentError("assemble_gtilde: metric shape does not match chi");
  HermitianField out = ddbar(u);
  auto dst = out.raw();
  const auto src = chi.raw();
  for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  return out;
}

HermitianField assemble_gtilde(const HermitianField& chi, const HermitianField& g, const ScalarField& u) {
  if (!(chi.grid() == g.grid())) throw ArgumentError("assemble_gtilde: chi and g live on different grids");
  return assemble_gtilde(chi, g.at(0), u);
}

CMat constant_metric(const HermitianField& g) {
  if (!g.is_constant()) throw ArgumentError("metric must be constant over the torus");
  return g.at(0);
}

std::vector<SpectrumVec> eigen_rel(const HermitianField& a, const MetricFactor& g) {
  if (g.dim() != a.dim()) throw ArgumentError("eigen_rel: metric shape does not match field");
  std::vector<SpectrumVec> out(a.size());
  parallel_blocks(a.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t s = begin; s < end; ++s) {
      const auto dec = generalized_eigen(a.at(s), g, false);
      out[s] = SpectrumVec(std::span<const double>(dec.values.data(), static_cast<std::size_t>(a.dim())));
    }
  });
  return out;
}

std::vector<SpectrumVec> eigen_rel(const HermitianField& a, const HermitianField& g) {
  if (!(a.grid() == g.grid())) throw ArgumentError("eigen_rel: grid mismatch");
  if (g.is_constant()) {
    try {
      return eigen_rel(a, MetricFactor(g.at(0)));
    } catch (const DomainError&) {
      throw NotPositiveDefiniteError("eigen_rel: metric is not positive definite", 0);
    }
  }
  std::vector<SpectrumVec> out(a.size());
  for (std::size_t s = 0; s < a.size(); ++s) {
    std::optional<MetricFactor> factor;
    try {
      factor.emplace(g.at(s));
    } catch (const DomainError&) {
      throw NotPositiveDefiniteError("eigen_rel: metric is not positive definite", s);
    }
    const auto dec = generalized_eigen(a.at(s), *factor, false);
    out[s] = SpectrumVec(std::span<const double>(dec.values.data(), static_cast<std::size_t>(a.dim())));
  }
  return out;
}

ScalarField quotient_ratio(const HermitianField& gtilde, const MetricFactor& g, const QuotientParams& p) {
  if (gtilde.dim() != p.n) throw ArgumentError("quotient_ratio: dimension mismatch");
  const auto spectra = eigen_rel(gtilde, g);
  ScalarField out(gtilde.grid());
  const double c = p.binom();
  for (std::size_t s = 0; s < spectra.size(); ++s) {
    if (!spectra[s].in_cone()) throw NonAdmissibleError("quotient_ratio: inadmissible site", s);
    const auto e = all_sigmas(spectra[s]);
    out[s] = c * e[static_cast<std::size_t>(p.n)] / e[static_cast<std::size_t>(p.n - p.m)];
  }
  return out;
}

ScalarField quotient_ratio(const HermitianField& gtilde, const HermitianField& g, const QuotientParams& p) {
  return quotient_ratio(gtilde, MetricFactor(constant_metric(g)), p);
}

EstimateQuantities estimate_quantities(const ScalarField& u, const ScalarField& ubar, const MetricFactor& g) {
  if (!(u.grid() == ubar.grid())) throw ArgumentError("estimate_quantities: grid mismatch");
  const TorusGrid& grid = u.grid();
  const ScalarField w = u - ubar;
  const int n = grid.n();
  const int d = grid.real_dim();
  const double dx = grid.spacing();
  const CMat& ginv = g.inverse();

  struct Partial {
    double grad = 0.0;
    double lam = -std::numeric_limits<double>::infinity();
    double l1 = 0.0;
  };
  const Partial total = block_reduce(
      grid.size(), Partial{},
      [&](std::size_t begin, std::size_t end) {
        Partial p;
        SiteCursor cur(grid, begin);
        for (std::size_t s = begin; s < end; ++s, cur.advance()) {
          CVec dw(n);
          for (int i = 0; i < n; ++i) {
            const double ux = (w[cur.plus(2 * i)] - w[cur.minus(2 * i)]) / (2.0 * dx);
            const double uy = (w[cur.plus(2 * i + 1)] - w[cur.minus(2 * i + 1)]) / (2.0 * dx);
            dw(i) = cplx(ux, -uy) / std::sqrt(2.0);
          }
          const double grad2 = (dw.adjoint() * ginv * dw)(0, 0).real();
          p.grad = std::max(p.grad, std::sqrt(std::max(grad2, 0.0)));

          const RealHessian h = real_hessian_at(w.values(), grid, cur);
          RMat hm(d, d);
          for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) hm(a, b) = h[static_cast<std::size_t>(a * kMaxRealDim + b)];
          p.lam = std::max(p.lam, jacobi_eigen(hm, false).values(0));
          p.l1 += std::abs(w[s]);
        }
        return p;
      },
      [](Partial a, const Partial& b) {
        a.grad = std::max(a.grad, b.grad);
        a.lam = std::max(a.lam, b.lam);
        a.l1 += b.l1;
        return a;
      });

  EstimateQuantities q;
  q.osc = w.oscillation();
  q.grad_sup = total.grad;
  q.lambda1_sup = total.lam;
  q.l1_gap = total.l1 * std::pow(dx, d) * g.determinant();
  return q;
}

EstimateQuantities estimate_quantities(const ScalarField& u, const ScalarField& ubar, const HermitianField& g) {
  return estimate_quantities(u, ubar, MetricFactor(constant_metric(g)));
}

ScalarField mean_zero(const ScalarField& u) {
  ScalarField out(u);
  out += -u.mean();
  return out;
}

ScalarField sup_zero(const ScalarField& u) {
  ScalarField out(u);
  out += -u.max();
  return out;
}

}  // namespace hqlab

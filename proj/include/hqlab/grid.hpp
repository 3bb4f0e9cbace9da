#pragma once

#include <array>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "hqlab/linalg.hpp"

namespace hqlab {

/// Periodic grid on the flat torus (R/L)^{2n}. Axes are ordered
/// (x1, y1, ..., xn, yn); sites are row-major with x1 slowest.
class TorusGrid {
 public:
  TorusGrid(int n, int points_per_axis, double period = 2.0 * std::numbers::pi);

  int n() const noexcept { return n_; }
  int real_dim() const noexcept { return 2 * n_; }
  int points() const noexcept { return N_; }
  double period() const noexcept { return L_; }
  double spacing() const noexcept { return L_ / N_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t stride(int axis) const noexcept { return stride_[static_cast<std::size_t>(axis)]; }

  int coord_index(std::size_t site, int axis) const noexcept {
    return static_cast<int>((site / stride(axis)) % static_cast<std::size_t>(N_));
  }
  double coord(std::size_t site, int axis) const noexcept { return coord_index(site, axis) * spacing(); }
  /// Real coordinates (x1, y1, ..., xn, yn) of a site.
  std::array<double, kMaxRealDim> coords(std::size_t site) const noexcept;

  bool operator==(const TorusGrid& o) const noexcept {
    return n_ == o.n_ && N_ == o.N_ && L_ == o.L_;
  }

 private:
  int n_;
  int N_;
  double L_;
  std::size_t size_;
  std::array<std::size_t, kMaxRealDim> stride_{};
};

/// Walks sites in order, tracking the +/- neighbour offsets along each axis.
class SiteCursor {
 public:
  SiteCursor(const TorusGrid& grid, std::size_t site);

  std::size_t site() const noexcept { return site_; }
  std::size_t plus(int axis) const noexcept {
    return site_ + static_cast<std::size_t>(up_[static_cast<std::size_t>(axis)]);
  }
  std::size_t minus(int axis) const noexcept {
    return site_ + static_cast<std::size_t>(down_[static_cast<std::size_t>(axis)]);
  }
  /// Offsets (signed) for composing diagonal neighbours.
  long long up(int axis) const noexcept { return up_[static_cast<std::size_t>(axis)]; }
  long long down(int axis) const noexcept { return down_[static_cast<std::size_t>(axis)]; }
  std::size_t offset(long long delta) const noexcept { return site_ + static_cast<std::size_t>(delta); }

  void advance() noexcept;

 private:
  void refresh(int axis) noexcept;

  const TorusGrid* grid_;
  std::size_t site_;
  std::array<int, kMaxRealDim> idx_{};
  std::array<long long, kMaxRealDim> up_{};
  std::array<long long, kMaxRealDim> down_{};
};

/// Real-valued grid function.
class ScalarField {
 public:
  explicit ScalarField(const TorusGrid& grid, double fill = 0.0);
  ScalarField(const TorusGrid& grid, std::vector<double> values);

  const TorusGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  double mean() const;
  double min() const;
  double max() const;
  double sup_abs() const;
  double oscillation() const { return max() - min(); }
  bool all_finite() const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField& operator-=(const ScalarField& o);
  ScalarField& operator+=(double c);
  ScalarField& operator*=(double c);
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }

  /// Fills from a function of the real coordinates.
  template <class Fn>
  static ScalarField from_function(const TorusGrid& grid, Fn&& fn) {
    ScalarField out(grid);
    for (std::size_t s = 0; s < grid.size(); ++s) {
      const auto x = grid.coords(s);
      out[s] = fn(std::span<const double>(x.data(), static_cast<std::size_t>(grid.real_dim())));
    }
    return out;
  }

 private:
  TorusGrid grid_;
  std::vector<double> values_;
};

/// n x n Hermitian matrix per site, stored row-major.
class HermitianField {
 public:
  explicit HermitianField(const TorusGrid& grid);
  HermitianField(const TorusGrid& grid, const CMat& constant);

  const TorusGrid& grid() const noexcept { return grid_; }
  int dim() const noexcept { return grid_.n(); }
  std::size_t size() const noexcept { return grid_.size(); }

  CMat at(std::size_t site) const;
  void set(std::size_t site, const CMat& m);
  cplx entry(std::size_t site, int i, int j) const noexcept {
    return data_[site * static_cast<std::size_t>(dim() * dim()) + static_cast<std::size_t>(i * dim() + j)];
  }
  std::span<const cplx> raw() const noexcept { return data_; }
  std::span<cplx> raw() noexcept { return data_; }

  /// Largest |A - A^*| entry over all sites.
  double hermitian_defect() const;
  /// True when every site holds the same matrix.
  bool is_constant() const;

 private:
  TorusGrid grid_;
  std::vector<cplx> data_;
};

}  // namespace hqlab

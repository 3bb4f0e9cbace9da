#include "hqlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hqlab/errors.hpp"
#include "hqlab/parallel.hpp"

namespace hqlab {

TorusGrid::TorusGrid(int n, int points_per_axis, double period)
    : n_(n), N_(points_per_axis), L_(period) {
  if (n < 1 || n > kMaxComplexDim) throw ArgumentError("grid: complex dimension must be in [1, 4]");
  if (points_per_axis < 4 || points_per_axis % 2 != 0)
    throw ArgumentError("grid: points per axis must be even and at least 4");
  if (!(period > 0.0) || !std::isfinite(period)) throw ArgumentError("grid: period must be positive");
  const int dims = 2 * n;
  double total = std::pow(static_cast<double>(N_), dims);
  if (total > 1.0e8) throw ArgumentError("grid: too many sites");
  size_ = 1;
  for (int a = dims - 1; a >= 0; --a) {
    stride_[static_cast<std::size_t>(a)] = size_;
    size_ *= static_cast<std::size_t>(N_);
  }
}

std::array<double, kMaxRealDim> TorusGrid::coords(std::size_t site) const noexcept {
  std::array<double, kMaxRealDim> x{};
  for (int a = 0; a < real_dim(); ++a) x[static_cast<std::size_t>(a)] = coord(site, a);
  return x;
}

SiteCursor::SiteCursor(const TorusGrid& grid, std::size_t site) : grid_(&grid), site_(site) {
  for (int a = 0; a < grid.real_dim(); ++a) {
    idx_[static_cast<std::size_t>(a)] = grid.coord_index(site, a);
    refresh(a);
  }
}

void SiteCursor::refresh(int axis) noexcept {
  const auto a = static_cast<std::size_t>(axis);
  const long long s = static_cast<long long>(grid_->stride(axis));
  const long long wrap = static_cast<long long>(grid_->points() - 1) * s;
  up_[a] = idx_[a] == grid_->points() - 1 ? -wrap : s;
  down_[a] = idx_[a] == 0 ? wrap : -s;
}

void SiteCursor::advance() noexcept {
  ++site_;
  for (int a = grid_->real_dim() - 1; a >= 0; --a) {
    auto& i = idx_[static_cast<std::size_t>(a)];
    if (++i < grid_->points()) {
      refresh(a);
      return;
    }
    i = 0;
    refresh(a);
  }
}

ScalarField::ScalarField(const TorusGrid& grid, double fill) : grid_(grid), values_(grid.size(), fill) {}

ScalarField::ScalarField(const TorusGrid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw ArgumentError("scalar field: value count does not match grid");
}

double ScalarField::mean() const {
  return deterministic_sum(values_.size(), [&](std::size_t i) { return values_[i]; }) /
         static_cast<double>(values_.size());
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

double ScalarField::sup_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool ScalarField::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  if (!(grid_ == o.grid_)) throw ArgumentError("scalar field: grid mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& o) {
  if (!(grid_ == o.grid_)) throw ArgumentError("scalar field: grid mismatch");
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

ScalarField& ScalarField::operator+=(double c) {
  for (double& v : values_) v += c;
  return *this;
}

ScalarField& ScalarField::operator*=(double c) {
  for (double& v : values_) v *= c;
  return *this;
}

HermitianField::HermitianField(const TorusGrid& grid)
    : grid_(grid), data_(grid.size() * static_cast<std::size_t>(grid.n() * grid.n())) {}

HermitianField::HermitianField(const TorusGrid& grid, const CMat& constant) : HermitianField(grid) {
  if (constant.rows() != grid.n() || constant.cols() != grid.n())
    throw ArgumentError("hermitian field: matrix shape does not match grid dimension");
  for (std::size_t s = 0; s < grid.size(); ++s) set(s, constant);
}

CMat HermitianField::at(std::size_t site) const {
  const int n = dim();
  CMat m(n, n);
  const cplx* p = data_.data() + site * static_cast<std::size_t>(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = p[i * n + j];
  return m;
}

void HermitianField::set(std::size_t site, const CMat& m) {
  const int n = dim();
  cplx* p = data_.data() + site * static_cast<std::size_t>(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p[i * n + j] = m(i, j);
}

double HermitianField::hermitian_defect() const {
  const int n = dim();
  double worst = 0.0;
  for (std::size_t s = 0; s < size(); ++s)
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        worst = std::max(worst, std::abs(entry(s, i, j) - std::conj(entry(s, j, i))));
  return worst;
}

bool HermitianField::is_constant() const {
  const std::size_t block = static_cast<std::size_t>(dim() * dim());
  for (std::size_t s = 1; s < size(); ++s)
    if (!std::equal(data_.begin(), data_.begin() + static_cast<long>(block),
                    data_.begin() + static_cast<long>(s * block)))
      return false;
  return true;
}

}  // namespace hqlab

#include "mfdb/grid_surface.hpp"

#include <algorithm>
#include <cmath>

#include "mfdb/error.hpp"

namespace mfdb {

std::size_t GridSurface::node_count(const std::vector<std::vector<double>>& axes) {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.size();
  return axes.empty() ? 0 : n;
}

GridSurface::GridSurface(std::vector<std::vector<double>> axes, std::vector<double> values)
    : axes_(std::move(axes)), values_(std::move(values)) {
  if (axes_.empty()) throw UsageError("a grid surface needs at least one axis");
  for (const auto& a : axes_) {
    if (a.empty()) throw UsageError("grid axes must be nonempty");
    for (std::size_t i = 1; i < a.size(); ++i) {
      if (!(a[i] > a[i - 1])) throw UsageError("grid axes must be strictly increasing");
    }
  }
  if (values_.size() != node_count(axes_)) {
    throw UsageError("grid surface has " + std::to_string(values_.size()) + " values for " +
                     std::to_string(node_count(axes_)) + " nodes");
  }
  strides_.assign(axes_.size(), 1);
  for (std::size_t d = axes_.size() - 1; d > 0; --d) {
    strides_[d - 1] = strides_[d] * axes_[d].size();
  }
}

double GridSurface::operator()(const std::vector<double>& x, bool* extrapolated) const {
  if (x.size() != axes_.size()) throw UsageError("grid surface query has the wrong dimension");
  return (*this)(x.data(), extrapolated);
}

double GridSurface::operator()(const double* x, bool* extrapolated) const {
  const std::size_t m = axes_.size();
  // Lower cell index and fractional position per axis; a single-node axis is
  // constant along that direction.
  std::size_t lo[8];
  double frac[8];
  if (m > 8) throw UsageError("grid surfaces support at most 8 axes");
  for (std::size_t d = 0; d < m; ++d) {
    const auto& a = axes_[d];
    if (a.size() == 1) {
      lo[d] = 0;
      frac[d] = 0.0;
      continue;
    }
    const double v = x[d];
    if ((v < a.front() || v > a.back()) && extrapolated) *extrapolated = true;
    auto it = std::upper_bound(a.begin(), a.end(), v);
    std::size_t i = it == a.begin() ? 0 : static_cast<std::size_t>(it - a.begin()) - 1;
    i = std::min(i, a.size() - 2);
    lo[d] = i;
    frac[d] = (v - a[i]) / (a[i + 1] - a[i]);
  }
  double sum = 0.0;
  const std::size_t corners = std::size_t{1} << m;
  for (std::size_t c = 0; c < corners; ++c) {
    double w = 1.0;
    std::size_t offset = 0;
    bool skip = false;
    for (std::size_t d = 0; d < m; ++d) {
      const bool upper = (c >> d) & 1U;
      if (axes_[d].size() == 1) {
        if (upper) skip = true;
        continue;
      }
      w *= upper ? frac[d] : 1.0 - frac[d];
      offset += (lo[d] + (upper ? 1 : 0)) * strides_[d];
    }
    if (!skip && w != 0.0) sum += w * values_[offset];
  }
  return sum;
}

Eigen::MatrixXd GridSurface::nodes(const std::vector<std::vector<double>>& axes) {
  const std::size_t n = node_count(axes);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(axes.size()));
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rem = i;
    for (std::size_t d = axes.size(); d-- > 0;) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = axes[d][rem % axes[d].size()];
      rem /= axes[d].size();
    }
  }
  return out;
}

}  // namespace mfdb

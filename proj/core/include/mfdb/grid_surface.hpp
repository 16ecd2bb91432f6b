#pragma once

#include <vector>

#include <Eigen/Dense>

namespace mfdb {

/// Scalar field tabulated on a tensor grid and evaluated by multilinear
/// interpolation. Outside the grid the end cells are extended linearly.
/// Values are stored with the last axis varying fastest.
class GridSurface {
 public:
  GridSurface() = default;
  GridSurface(std::vector<std::vector<double>> axes, std::vector<double> values);

  std::size_t dim() const { return axes_.size(); }
  std::size_t size() const { return values_.size(); }
  const std::vector<std::vector<double>>& axes() const { return axes_; }
  const std::vector<double>& values() const { return values_; }

  /// `extrapolated` (optional) is set to true when any coordinate lies
  /// outside its axis; it is never reset to false.
  double operator()(const double* x, bool* extrapolated = nullptr) const;
  double operator()(const std::vector<double>& x, bool* extrapolated = nullptr) const;

  /// All grid nodes as rows, in storage order.
  static Eigen::MatrixXd nodes(const std::vector<std::vector<double>>& axes);
  static std::size_t node_count(const std::vector<std::vector<double>>& axes);

 private:
  std::vector<std::vector<double>> axes_;
  std::vector<double> values_;
  std::vector<std::size_t> strides_;
};

}  // namespace mfdb

#pragma once

#include <cstdint>
#include <functional>

#include <Eigen/Dense>

namespace mfdb {

struct NelderMeadOptions {
  int max_evaluations = 600;
  double x_tolerance = 1e-6;   // simplex diameter
  double f_tolerance = 1e-10;  // spread of vertex values
  double initial_step = 0.5;
};

struct OptimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evaluations = 0;
};

/// Minimizes `f` over the box [lower, upper] with Nelder-Mead. Trial points
/// are projected onto the box. Non-finite objective values count as +inf.
OptimizeResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& start, const Eigen::VectorXd& lower,
                           const Eigen::VectorXd& upper, const NelderMeadOptions& options = {});

/// Multi-start wrapper: start 0 is `first`, the rest are drawn uniformly from
/// [start_lower, start_upper] with a generator seeded by `seed`. Ties keep the
/// first-found minimum.
OptimizeResult multi_start_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& first,
                                    const Eigen::VectorXd& start_lower,
                                    const Eigen::VectorXd& start_upper,
                                    const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                    int starts, std::uint64_t seed,
                                    const NelderMeadOptions& options = {});

}  // namespace mfdb

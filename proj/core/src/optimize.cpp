#include "mfdb/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace mfdb {

namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                        const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

}  // namespace

OptimizeResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& start, const Eigen::VectorXd& lower,
                           const Eigen::VectorXd& upper, const NelderMeadOptions& options) {
  const Eigen::Index n = start.size();
  int evaluations = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evaluations;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n + 1));
  std::vector<double> values(static_cast<std::size_t>(n + 1));
  simplex[0] = project(start, lower, upper);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd v = simplex[0];
    v(i) += options.initial_step;
    if (v(i) > upper(i)) v(i) = simplex[0](i) - options.initial_step;
    simplex[static_cast<std::size_t>(i + 1)] = project(v, lower, upper);
  }
  for (std::size_t i = 0; i < simplex.size(); ++i) values[i] = eval(simplex[i]);

  std::vector<std::size_t> order(simplex.size());
  while (evaluations < options.max_evaluations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];

    double diameter = 0.0;
    for (const auto& v : simplex) diameter = std::max(diameter, (v - simplex[best]).cwiseAbs().maxCoeff());
    const double spread = values[worst] - values[best];
    if (diameter < options.x_tolerance ||
        (std::isfinite(spread) && spread < options.f_tolerance * (1.0 + std::abs(values[best])))) {
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i != worst) centroid += simplex[i];
    }
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = project(centroid + (centroid - simplex[worst]), lower, upper);
    const double fr = eval(reflected);
    if (fr < values[best]) {
      const Eigen::VectorXd expanded =
          project(centroid + 2.0 * (centroid - simplex[worst]), lower, upper);
      const double fe = eval(expanded);
      if (fe < fr) {
        simplex[worst] = expanded;
        values[worst] = fe;
      } else {
        simplex[worst] = reflected;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = reflected;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const Eigen::VectorXd contracted =
        outside ? project(centroid + 0.5 * (reflected - centroid), lower, upper)
                : project(centroid + 0.5 * (simplex[worst] - centroid), lower, upper);
    const double fc = eval(contracted);
    if (fc < (outside ? fr : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = fc;
      continue;
    }
    // shrink toward the best vertex
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best) continue;
      simplex[i] = simplex[best] + 0.5 * (simplex[i] - simplex[best]);
      values[i] = eval(simplex[i]);
    }
  }

  const auto best_it = std::min_element(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(std::distance(values.begin(), best_it));
  return {simplex[idx], values[idx], evaluations};
}

OptimizeResult multi_start_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& first,
                                    const Eigen::VectorXd& start_lower,
                                    const Eigen::VectorXd& start_upper,
                                    const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                    int starts, std::uint64_t seed,
                                    const NelderMeadOptions& options) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  OptimizeResult best;
  best.value = std::numeric_limits<double>::infinity();
  int total = 0;
  for (int s = 0; s < std::max(starts, 1); ++s) {
    Eigen::VectorXd x0 = first;
    if (s > 0) {
      for (Eigen::Index i = 0; i < x0.size(); ++i) {
        x0(i) = start_lower(i) + unit(rng) * (start_upper(i) - start_lower(i));
      }
    }
    auto r = nelder_mead(f, x0, lower, upper, options);
    total += r.evaluations;
    if (r.value < best.value || best.x.size() == 0) best = r;
  }
  best.evaluations = total;
  return best;
}

}  // namespace mfdb

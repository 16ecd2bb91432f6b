#include "mfdb/mfgp.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mfdb/error.hpp"

namespace mfdb::mfgp {

namespace {

// Level-t regression design J_t = [ g(x) * mu_{t-1}(x) | h(x) ], one row per point.
MatrixXd joint_design(const MatrixXd& g, const VectorXd& prev_mean, const MatrixXd& f) {
  MatrixXd j(g.rows(), g.cols() + f.cols());
  j.leftCols(g.cols()) = prev_mean.asDiagonal() * g;
  j.rightCols(f.cols()) = f;
  return j;
}

MatrixXd level_noise_covariance(const Dataset& data, const gp::KernelParams& kernel) {
  MatrixXd v = gp::kernel_matrix(data.inputs(), data.inputs(), kernel);
  v.diagonal() += data.noise_sd().cwiseAbs2();
  return v;
}

void check_level_inputs(const MFGPModel& prev, const Dataset& data,
                        const gp::BasisSpec& level_basis, const gp::BasisSpec& trend_basis) {
  if (prev.levels() < 1) throw UsageError("fit_level needs a fitted lower level");
  if (data.empty()) throw DataError("fidelity level " + std::to_string(prev.levels() + 1) +
                                    " has no data");
  if (data.dim() != prev.dim()) {
    throw DataError("fidelity level " + std::to_string(prev.levels() + 1) + " has input dimension " +
                    std::to_string(data.dim()) + ", lower levels have " +
                    std::to_string(prev.dim()));
  }
  const auto q = trend_basis.size(data.dim());
  const auto p = level_basis.size(data.dim());
  if (data.size() < q + p) {
    throw DataError("fidelity level " + std::to_string(prev.levels() + 1) + " has " +
                    std::to_string(data.size()) + " points, needs at least q + p = " +
                    std::to_string(q + p));
  }
}

}  // namespace

Eigen::Index MFGPModel::dim() const { return base().data().dim(); }

const gp::GPModel& MFGPModel::base() const {
  if (!base_) throw UsageError("multi-fidelity model has no fitted levels");
  return *base_;
}

const FidelityLevel& MFGPModel::level(int t) const {
  if (t < 2 || t > levels()) throw UsageError("no fidelity level " + std::to_string(t));
  return upper_[static_cast<std::size_t>(t - 2)];
}

MFGPModel MFGPModel::with_level(FidelityLevel level) const {
  if (level.index != levels() + 1 || level.index < 2) {
    throw UsageError("fidelity level " + std::to_string(level.index) +
                     " cannot be added to a model with " + std::to_string(levels()) +
                     " levels; levels are fitted bottom-up");
  }
  MFGPModel out = *this;
  out.upper_.push_back(std::move(level));
  return out;
}

MFGPModel MFGPModel::extend(const LevelSpec& spec) const {
  if (levels() == 0) {
    return MFGPModel(gp::GPModel::fit(spec.data, spec.level_basis, spec.optimizer));
  }
  return with_level(fit_level(*this, spec));
}

MFGPModel MFGPModel::build(const std::vector<LevelSpec>& specs) {
  if (specs.empty()) throw UsageError("a multi-fidelity model needs at least one level");
  MFGPModel model;
  for (const auto& spec : specs) model = model.extend(spec);
  return model;
}

double level_log_likelihood(const MFGPModel& prev, const Dataset& data,
                            const gp::BasisSpec& level_basis, const gp::BasisSpec& trend_basis,
                            const gp::KernelParams& kernel) {
  check_level_inputs(prev, data, level_basis, trend_basis);
  kernel.validate(data.dim());
  const VectorXd prev_mean = prev.predict(data.inputs()).mean;
  const MatrixXd j = joint_design(trend_basis.evaluate(data.inputs()), prev_mean,
                                  level_basis.evaluate(data.inputs()));
  return gp::gls_fit(level_noise_covariance(data, kernel), kernel.signal_variance, j,
                     data.outputs())
      .log_likelihood;
}

FidelityLevel assemble_level(const MFGPModel& prev, Dataset data, gp::BasisSpec level_basis,
                             gp::BasisSpec trend_basis, gp::KernelParams kernel) {
  check_level_inputs(prev, data, level_basis, trend_basis);
  kernel.validate(data.dim());

  FidelityLevel lvl;
  lvl.index = prev.levels() + 1;
  const auto prev_pred = prev.predict(data.inputs());
  lvl.prev_mean = prev_pred.mean;
  lvl.prev_cov = prev_pred.covariance;

  const MatrixXd g = trend_basis.evaluate(data.inputs());
  const MatrixXd f = level_basis.evaluate(data.inputs());
  const MatrixXd j = joint_design(g, lvl.prev_mean, f);
  const MatrixXd v = level_noise_covariance(data, kernel);
  auto gls = gp::gls_fit(v, kernel.signal_variance, j, data.outputs());
  lvl.log_likelihood = gls.log_likelihood;
  lvl.beta_rho = gls.beta.head(g.cols());
  lvl.beta = gls.beta.tail(f.cols());
  lvl.rho_train = g * lvl.beta_rho;

  MatrixXd c = (lvl.rho_train * lvl.rho_train.transpose()).cwiseProduct(lvl.prev_cov) +
               gp::kernel_matrix(data.inputs(), data.inputs(), kernel);
  const double scale = c.diagonal().mean();
  c.diagonal() += data.noise_sd().cwiseAbs2();
  lvl.factor = gp::SpdFactor::compute(c, scale);
  const VectorXd residual =
      data.outputs() - lvl.rho_train.cwiseProduct(lvl.prev_mean) - f * lvl.beta;
  lvl.weights = lvl.factor.refined_solve(c, residual);

  lvl.data = std::move(data);
  lvl.level_basis = level_basis;
  lvl.trend_basis = trend_basis;
  lvl.kernel = std::move(kernel);
  return lvl;
}

FidelityLevel fit_level(const MFGPModel& prev, const LevelSpec& spec) {
  check_level_inputs(prev, spec.data, spec.level_basis, spec.trend_basis);
  const auto& x = spec.data.inputs();
  const VectorXd prev_mean = prev.predict(x).mean;
  const MatrixXd j =
      joint_design(spec.trend_basis.evaluate(x), prev_mean, spec.level_basis.evaluate(x));
  const auto box = gp::HyperBox::for_data(x, gp::output_scale(spec.data.outputs()));

  auto objective = [&](const VectorXd& theta) {
    const auto k = gp::kernel_from_log(theta);
    try {
      return -gp::gls_fit(level_noise_covariance(spec.data, k), k.signal_variance, j,
                          spec.data.outputs())
                  .log_likelihood;
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const auto best =
      multi_start_minimize(objective, box.first, box.start_lower, box.start_upper, box.lower,
                           box.upper, spec.optimizer.starts, spec.optimizer.seed,
                           spec.optimizer.local);
  if (!std::isfinite(best.value)) {
    throw NumericalError("fidelity level " + std::to_string(prev.levels() + 1) +
                         ": no hyperparameters give a factorizable covariance");
  }
  return assemble_level(prev, spec.data, spec.level_basis, spec.trend_basis,
                        gp::kernel_from_log(best.x));
}

gp::Prediction MFGPModel::predict_joint(const MatrixXd& points, int t) const {
  if (t == 1) return base().predict(points);
  const auto& lvl = level(t);
  const Eigen::Index np = points.rows();
  const Eigen::Index nt = lvl.data.size();

  MatrixXd stacked(np + nt, points.cols());
  stacked.topRows(np) = points;
  stacked.bottomRows(nt) = lvl.data.inputs();
  const auto prev = predict_joint(stacked, t - 1);

  const VectorXd prev_mean = prev.mean.head(np);
  const MatrixXd s_pp = prev.covariance.topLeftCorner(np, np);
  const MatrixXd s_px = prev.covariance.topRightCorner(np, nt);

  const VectorXd rho = lvl.trend_basis.evaluate(points) * lvl.beta_rho;
  const MatrixXd w = (rho * lvl.rho_train.transpose()).cwiseProduct(s_px) +
                     gp::kernel_matrix(points, lvl.data.inputs(), lvl.kernel);

  gp::Prediction out;
  out.mean = rho.cwiseProduct(prev_mean) + lvl.level_basis.evaluate(points) * lvl.beta +
             w * lvl.weights;
  const MatrixXd a = lvl.factor.llt.matrixL().solve(w.transpose());
  out.covariance = (rho * rho.transpose()).cwiseProduct(s_pp) +
                   gp::kernel_matrix(points, points, lvl.kernel) - a.transpose() * a;
  return out;
}

gp::Prediction MFGPModel::predict(const MatrixXd& query, int t) const {
  if (levels() == 0) throw UsageError("multi-fidelity model has no fitted levels");
  if (t <= 0) t = levels();
  if (t > levels()) {
    throw UsageError("requested level " + std::to_string(t) + " but the model has " +
                     std::to_string(levels()));
  }
  if (query.cols() != dim()) {
    throw UsageError("query dimension " + std::to_string(query.cols()) +
                     " does not match training dimension " + std::to_string(dim()));
  }
  if (t == 1) return base().predict(query);
  auto out = predict_joint(query, t);
  MatrixXd& cov = out.covariance;
  cov = 0.5 * (cov + cov.transpose()).eval();
  for (Eigen::Index i = 0; i < cov.rows(); ++i) cov(i, i) = std::max(cov(i, i), 0.0);
  return out;
}

MatrixXd MFGPModel::sample(const MatrixXd& query, int t, int count, std::uint64_t seed) const {
  const auto pred = predict(query, t);
  return gp::draw(pred.mean, gp::covariance_sqrt(pred.covariance), count, seed);
}

}  // namespace mfdb::mfgp

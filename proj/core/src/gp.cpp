#include "mfdb/gp.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "mfdb/error.hpp"

namespace mfdb::gp {

void KernelParams::validate(Eigen::Index dim) const {
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
    throw UsageError("kernel signal variance must be positive and finite");
  }
  if (length_scales.size() != dim) {
    throw UsageError("kernel has " + std::to_string(length_scales.size()) +
                     " length scales for input dimension " + std::to_string(dim));
  }
  for (Eigen::Index d = 0; d < length_scales.size(); ++d) {
    if (!(length_scales(d) > 0.0) || !std::isfinite(length_scales(d))) {
      throw UsageError("kernel length scales must be positive and finite");
    }
  }
}

double kernel_eval(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b,
                   const KernelParams& params) {
  if (a.size() != b.size()) throw UsageError("kernel_eval: point dimensions differ");
  params.validate(a.size());
  double s = 0.0;
  for (Eigen::Index d = 0; d < a.size(); ++d) {
    const double diff = a(d) - b(d);
    s += diff * diff / (2.0 * params.length_scales(d));
  }
  return params.signal_variance * std::exp(-s);
}

MatrixXd kernel_matrix(const MatrixXd& a, const MatrixXd& b, const KernelParams& params) {
  if (a.cols() != b.cols()) throw UsageError("kernel_matrix: point dimensions differ");
  params.validate(a.cols());
  const VectorXd inv = (2.0 * params.length_scales).cwiseInverse();
  MatrixXd k(a.rows(), b.rows());
  for (Eigen::Index j = 0; j < b.rows(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      double s = 0.0;
      for (Eigen::Index d = 0; d < a.cols(); ++d) {
        const double diff = a(i, d) - b(j, d);
        s += diff * diff * inv(d);
      }
      k(i, j) = params.signal_variance * std::exp(-s);
    }
  }
  return k;
}

Eigen::Index BasisSpec::size(Eigen::Index dim) const {
  if (degree < 0) throw UsageError("basis degree must be >= 0");
  return 1 + static_cast<Eigen::Index>(degree) * dim;
}

MatrixXd BasisSpec::evaluate(const MatrixXd& x) const {
  MatrixXd h(x.rows(), size(x.cols()));
  h.col(0).setOnes();
  Eigen::Index c = 1;
  for (Eigen::Index d = 0; d < x.cols(); ++d) {
    VectorXd power = VectorXd::Ones(x.rows());
    for (int k = 1; k <= degree; ++k) {
      power = power.cwiseProduct(x.col(d));
      h.col(c++) = power;
    }
  }
  return h;
}

SpdFactor SpdFactor::compute(MatrixXd v, double scale) {
  if (!v.allFinite()) throw NumericalError("covariance matrix has non-finite entries");
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
  SpdFactor f;
  double jitter = 1e-10 * scale;
  const double max_jitter = 1e-6 * scale * (1.0 + 1e-9);
  const VectorXd base_diag = v.diagonal();
  while (jitter <= max_jitter) {
    v.diagonal() = base_diag.array() + jitter;
    f.llt.compute(v);
    if (f.llt.info() == Eigen::Success) {
      f.jitter = jitter;
      return f;
    }
    jitter *= 10.0;
  }
  throw NumericalError("covariance matrix is not positive definite even with jitter " +
                       std::to_string(1e-6 * scale));
}

VectorXd SpdFactor::refined_solve(const MatrixXd& v, const VectorXd& b, int max_steps) const {
  VectorXd x = solve(b);
  if (jitter == 0.0) return x;
  VectorXd r = b - v * x;
  double norm = r.norm();
  const double target = 1e-15 * b.norm();
  for (int step = 0; step < max_steps && norm > target; ++step) {
    const VectorXd trial = x + solve(r);
    VectorXd trial_r = b - v * trial;
    const double trial_norm = trial_r.norm();
    if (!(trial_norm < 0.999 * norm)) break;
    x = trial;
    r = std::move(trial_r);
    norm = trial_norm;
  }
  return x;
}

double SpdFactor::log_determinant() const {
  const auto& l = llt.matrixLLT();
  double s = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

double gaussian_log_likelihood(const SpdFactor& factor, const VectorXd& residual) {
  const VectorXd z = factor.llt.matrixL().solve(residual);
  const double n = static_cast<double>(residual.size());
  return -0.5 * factor.log_determinant() - 0.5 * z.squaredNorm() -
         0.5 * n * std::log(2.0 * std::numbers::pi);
}

GlsFit gls_fit(MatrixXd v, double jitter_scale, const MatrixXd& design, const VectorXd& y) {
  if (design.rows() != y.size() || v.rows() != y.size()) {
    throw UsageError("gls_fit: dimension mismatch");
  }
  if (design.rows() < design.cols()) {
    throw NumericalError("underdetermined regression: " + std::to_string(design.rows()) +
                         " observations for " + std::to_string(design.cols()) + " coefficients");
  }
  GlsFit out;
  out.factor = SpdFactor::compute(std::move(v), jitter_scale);
  const auto l = out.factor.llt.matrixL();
  const MatrixXd wj = l.solve(design);
  const VectorXd wy = l.solve(y);
  // A collinear basis leaves beta non-unique but the fitted trend unique; take
  // the minimum-norm coefficients so the fit stays deterministic.
  Eigen::ColPivHouseholderQR<MatrixXd> qr(wj);
  if (qr.rank() < design.cols()) {
    out.beta = Eigen::CompleteOrthogonalDecomposition<MatrixXd>(wj).solve(wy);
  } else {
    out.beta = qr.solve(wy);
  }
  out.residual = y - design * out.beta;
  out.log_likelihood = gaussian_log_likelihood(out.factor, out.residual);
  return out;
}

MatrixXd covariance_sqrt(const MatrixXd& cov) {
  if (!cov.allFinite()) throw NumericalError("covariance has non-finite entries");
  if (cov.rows() == 0) return MatrixXd(0, 0);
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  const VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

MatrixXd draw(const VectorXd& mean, const MatrixXd& sqrt_factor, int count, std::uint64_t seed) {
  if (count < 0) throw UsageError("sample count must be >= 0");
  if (sqrt_factor.rows() != mean.size()) throw UsageError("draw: factor/mean size mismatch");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd out(count, mean.size());
  VectorXd u(sqrt_factor.cols());
  for (int s = 0; s < count; ++s) {
    for (Eigen::Index i = 0; i < u.size(); ++i) u(i) = normal(rng);
    out.row(s) = (mean + sqrt_factor * u).transpose();
  }
  return out;
}

double output_scale(const VectorXd& y) {
  if (y.size() < 2) return 1.0;
  const double mean = y.mean();
  const double var = (y.array() - mean).square().sum() / static_cast<double>(y.size());
  return var > 0.0 ? var : 1.0;
}

HyperBox HyperBox::for_data(const MatrixXd& inputs, double scale) {
  const Eigen::Index m = inputs.cols();
  HyperBox box;
  box.lower.resize(m + 1);
  box.upper.resize(m + 1);
  box.start_lower.resize(m + 1);
  box.start_upper.resize(m + 1);
  box.first.resize(m + 1);
  const double ls = std::log(scale);
  box.lower(0) = ls + std::log(1e-6);
  box.upper(0) = ls + std::log(1e6);
  box.start_lower(0) = ls + std::log(1e-2);
  box.start_upper(0) = ls + std::log(1e2);
  box.first(0) = ls;
  for (Eigen::Index d = 0; d < m; ++d) {
    double range = inputs.rows() > 0 ? inputs.col(d).maxCoeff() - inputs.col(d).minCoeff() : 0.0;
    if (!(range > 0.0)) range = 1.0;
    const double lr = std::log(range * range);
    box.lower(d + 1) = lr + std::log(1e-6);
    box.upper(d + 1) = lr + std::log(1e6);
    box.start_lower(d + 1) = lr + std::log(1e-3);
    box.start_upper(d + 1) = lr + std::log(1e1);
    box.first(d + 1) = lr + std::log(1.0 / 16.0);
  }
  return box;
}

KernelParams kernel_from_log(const VectorXd& theta) {
  KernelParams k;
  k.signal_variance = std::exp(theta(0));
  k.length_scales = theta.tail(theta.size() - 1).array().exp();
  return k;
}

VectorXd kernel_to_log(const KernelParams& kernel) {
  VectorXd theta(kernel.length_scales.size() + 1);
  theta(0) = std::log(kernel.signal_variance);
  theta.tail(kernel.length_scales.size()) = kernel.length_scales.array().log();
  return theta;
}

namespace {

MatrixXd noisy_covariance(const Dataset& data, const KernelParams& kernel) {
  MatrixXd v = kernel_matrix(data.inputs(), data.inputs(), kernel);
  v.diagonal() += data.noise_sd().cwiseAbs2();
  return v;
}

}  // namespace

double log_marginal_likelihood(const Dataset& data, const BasisSpec& basis,
                               const KernelParams& kernel) {
  kernel.validate(data.dim());
  return gls_fit(noisy_covariance(data, kernel), kernel.signal_variance,
                 basis.evaluate(data.inputs()), data.outputs())
      .log_likelihood;
}

GPModel GPModel::assemble(Dataset data, BasisSpec basis, KernelParams kernel) {
  if (data.empty()) throw DataError("cannot build a GP from an empty dataset");
  kernel.validate(data.dim());
  const Eigen::Index p = basis.size(data.dim());
  if (data.size() < p) {
    throw DataError("dataset has " + std::to_string(data.size()) + " points but the basis has " +
                    std::to_string(p) + " functions");
  }
  GPModel m;
  const MatrixXd v = noisy_covariance(data, kernel);
  auto gls = gls_fit(v, kernel.signal_variance, basis.evaluate(data.inputs()), data.outputs());
  m.data_ = std::move(data);
  m.basis_ = basis;
  m.kernel_ = std::move(kernel);
  m.beta_ = std::move(gls.beta);
  // Refinement undoes the jitter's smoothing, so noiseless data is interpolated.
  m.weights_ = gls.factor.refined_solve(v, gls.residual);
  m.factor_ = std::move(gls.factor);
  m.log_likelihood_ = gls.log_likelihood;
  return m;
}

GPModel GPModel::fit(const Dataset& data, const BasisSpec& basis, const OptimizerConfig& config) {
  if (data.empty()) throw DataError("cannot fit a GP to an empty dataset");
  const Eigen::Index p = basis.size(data.dim());
  if (data.size() < p) {
    throw DataError("dataset has " + std::to_string(data.size()) + " points but the basis has " +
                    std::to_string(p) + " functions");
  }
  const auto box = HyperBox::for_data(data.inputs(), output_scale(data.outputs()));
  const MatrixXd h = basis.evaluate(data.inputs());
  auto objective = [&](const VectorXd& theta) {
    const KernelParams k = kernel_from_log(theta);
    try {
      return -gls_fit(noisy_covariance(data, k), k.signal_variance, h, data.outputs())
                  .log_likelihood;
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const auto best = multi_start_minimize(objective, box.first, box.start_lower, box.start_upper,
                                         box.lower, box.upper, config.starts, config.seed,
                                         config.local);
  if (!std::isfinite(best.value)) {
    throw NumericalError("no hyperparameters in the search box give a factorizable covariance");
  }
  return assemble(data, basis, kernel_from_log(best.x));
}

Prediction GPModel::predict(const MatrixXd& query) const {
  if (query.cols() != data_.dim()) {
    throw UsageError("query dimension " + std::to_string(query.cols()) +
                     " does not match training dimension " + std::to_string(data_.dim()));
  }
  Prediction out;
  const MatrixXd ks = kernel_matrix(query, data_.inputs(), kernel_);
  out.mean = basis_.evaluate(query) * beta_ + ks * weights_;
  const MatrixXd a = factor_.llt.matrixL().solve(ks.transpose());
  MatrixXd cov = kernel_matrix(query, query, kernel_) - a.transpose() * a;
  cov = 0.5 * (cov + cov.transpose()).eval();
  for (Eigen::Index i = 0; i < cov.rows(); ++i) cov(i, i) = std::max(cov(i, i), 0.0);
  out.covariance = std::move(cov);
  return out;
}

VectorXd GPModel::predict_mean(const MatrixXd& query) const {
  if (query.cols() != data_.dim()) throw UsageError("query dimension mismatch");
  return basis_.evaluate(query) * beta_ + kernel_matrix(query, data_.inputs(), kernel_) * weights_;
}

MatrixXd GPModel::sample(const MatrixXd& query, int count, std::uint64_t seed) const {
  const auto pred = predict(query);
  return draw(pred.mean, covariance_sqrt(pred.covariance), count, seed);
}

}  // namespace mfdb::gp

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mfdb/gp.hpp"

namespace mfdb::mfgp {

/// Everything needed to fit one fidelity level.
struct LevelSpec {
  Dataset data;
  gp::BasisSpec level_basis{1};  // h: trend of the discrepancy
  gp::BasisSpec trend_basis{0};  // g: multiplicative correction rho(x) = g(x)^T beta_rho
  gp::OptimizerConfig optimizer;
};

/// A fitted level t >= 2: Z_t(x) = rho(x) Z_{t-1}(x) + delta_t(x).
///
/// The previous level's mean and covariance at this level's inputs are
/// evaluated once at fit time and cached with the factorization of
///   C_t = (rho rho^T) o sigma^2_{t-1}(X_t, X_t) + K_t(X_t, X_t) + Sigma_t.
struct FidelityLevel {
  int index = 0;
  Dataset data;
  gp::BasisSpec level_basis;
  gp::BasisSpec trend_basis;
  gp::KernelParams kernel;
  VectorXd beta;      // level_basis coefficients
  VectorXd beta_rho;  // trend_basis coefficients
  double log_likelihood = 0.0;

  VectorXd prev_mean;
  MatrixXd prev_cov;
  VectorXd rho_train;
  gp::SpdFactor factor;
  VectorXd weights;  // C_t^{-1} (y - rho o mu_{t-1} - F beta)
};

/// Recursive auto-regressive multi-fidelity GP. Level 1 is a plain GPModel;
/// each later level corrects the one below it. Levels are added bottom-up and
/// the model is immutable once built.
class MFGPModel {
 public:
  MFGPModel() = default;
  explicit MFGPModel(gp::GPModel base) : base_(std::move(base)) {}

  /// Fits all levels bottom-up (lowest fidelity first).
  static MFGPModel build(const std::vector<LevelSpec>& specs);

  /// Returns a copy with `level` appended; its index must be levels() + 1.
  MFGPModel with_level(FidelityLevel level) const;

  /// Fits one more level on top of this model. On an empty model this is a
  /// plain gp::GPModel::fit.
  MFGPModel extend(const LevelSpec& spec) const;

  int levels() const { return base_ ? 1 + static_cast<int>(upper_.size()) : 0; }
  Eigen::Index dim() const;
  const gp::GPModel& base() const;
  const std::vector<FidelityLevel>& upper_levels() const { return upper_; }
  const FidelityLevel& level(int t) const;  // t >= 2

  /// Mean and covariance of Z_t at `query`; `level` <= 0 means the top level.
  gp::Prediction predict(const MatrixXd& query, int level = 0) const;
  MatrixXd sample(const MatrixXd& query, int level, int count, std::uint64_t seed) const;

 private:
  gp::Prediction predict_joint(const MatrixXd& points, int level) const;

  std::optional<gp::GPModel> base_;
  std::vector<FidelityLevel> upper_;
};

/// Fits level prev.levels() + 1 (>= 2) on top of `prev`.
FidelityLevel fit_level(const MFGPModel& prev, const LevelSpec& spec);

/// Builds level t for fixed kernel hyperparameters (beta and beta_rho by GLS).
FidelityLevel assemble_level(const MFGPModel& prev, Dataset data, gp::BasisSpec level_basis,
                             gp::BasisSpec trend_basis, gp::KernelParams kernel);

/// Log marginal likelihood of level t for a given discrepancy kernel.
double level_log_likelihood(const MFGPModel& prev, const Dataset& data,
                            const gp::BasisSpec& level_basis, const gp::BasisSpec& trend_basis,
                            const gp::KernelParams& kernel);

}  // namespace mfdb::mfgp

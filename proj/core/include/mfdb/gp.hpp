#pragma once

#include <cstdint>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "mfdb/dataset.hpp"
#include "mfdb/optimize.hpp"

namespace mfdb::gp {

/// Squared-exponential kernel hyperparameters.
///
/// `length_scales` holds l_d in k = sf2 * exp(-sum (a_d - b_d)^2 / (2 l_d)), so
/// each entry is a squared length (l_d = ell^2 in the usual parameterization).
struct KernelParams {
  double signal_variance = 1.0;
  VectorXd length_scales;

  /// Throws UsageError on non-positive values or a dimension mismatch.
  void validate(Eigen::Index dim) const;
};

double kernel_eval(const Eigen::Ref<const VectorXd>& a, const Eigen::Ref<const VectorXd>& b,
                   const KernelParams& params);

/// K(A, B) with rows of A and B as points.
MatrixXd kernel_matrix(const MatrixXd& a, const MatrixXd& b, const KernelParams& params);

/// Monomial basis: constant plus x_d^k for k = 1..degree in each input dimension.
struct BasisSpec {
  int degree = 1;

  Eigen::Index size(Eigen::Index dim) const;
  /// n x p design matrix (one row per point). The transpose of H in the usual notation.
  MatrixXd evaluate(const MatrixXd& x) const;
};

struct OptimizerConfig {
  int starts = 8;
  std::uint64_t seed = 0;
  NelderMeadOptions local;
};

struct Prediction {
  VectorXd mean;
  MatrixXd covariance;

  VectorXd variance() const { return covariance.diagonal(); }
};

/// Cholesky factor of an SPD matrix after the jitter policy: add
/// 1e-10 * scale to the diagonal and multiply by 10 until it factors, giving up
/// beyond 1e-6 * scale.
struct SpdFactor {
  Eigen::LLT<MatrixXd> llt;
  double jitter = 0.0;

  static SpdFactor compute(MatrixXd v, double scale);
  double log_determinant() const;
  VectorXd solve(const VectorXd& b) const { return llt.solve(b); }
  MatrixXd solve(const MatrixXd& b) const { return llt.solve(b); }
  /// Solves v x = b for the un-jittered `v`, using this factor as a
  /// preconditioner for iterative refinement. Steps that do not shrink the
  /// residual are rejected, so the result is never worse than solve(b).
  VectorXd refined_solve(const MatrixXd& v, const VectorXd& b, int max_steps = 50) const;
};

/// Generalized least squares for y ~ J beta with covariance V, plus the
/// Gaussian log marginal likelihood of the residual.
struct GlsFit {
  SpdFactor factor;
  VectorXd beta;
  VectorXd residual;
  double log_likelihood = 0.0;
};

/// Throws NumericalError if V is not positive definite after jitter. A
/// rank-deficient J gets the minimum-norm beta.
GlsFit gls_fit(MatrixXd v, double jitter_scale, const MatrixXd& design, const VectorXd& y);

/// -1/2 log|V| - 1/2 r^T V^{-1} r - n/2 log(2 pi).
double gaussian_log_likelihood(const SpdFactor& factor, const VectorXd& residual);

/// Square root L with L L^T = cov: Cholesky when it succeeds, otherwise an
/// eigendecomposition with negative eigenvalues clamped to zero.
MatrixXd covariance_sqrt(const MatrixXd& cov);

/// `count` x n matrix of draws mean + L u, u ~ N(0, I), from a generator
/// seeded with `seed`.
MatrixXd draw(const VectorXd& mean, const MatrixXd& sqrt_factor, int count, std::uint64_t seed);

/// Log marginal likelihood with beta at its GLS estimate.
double log_marginal_likelihood(const Dataset& data, const BasisSpec& basis,
                               const KernelParams& kernel);

/// Search box for the hyperparameters of a squared-exponential kernel in
/// log space: [log sf2, log l_1, ..., log l_m].
struct HyperBox {
  VectorXd lower, upper;              // hard bounds
  VectorXd start_lower, start_upper;  // random-start box
  VectorXd first;                     // data-scaled default start

  static HyperBox for_data(const MatrixXd& inputs, double output_scale);
};

KernelParams kernel_from_log(const VectorXd& theta);
VectorXd kernel_to_log(const KernelParams& kernel);

/// Single-fidelity GP with explicit basis and per-point Gaussian noise.
/// Immutable once built; predict and sample are const and thread-safe.
class GPModel {
 public:
  /// Maximizes the log marginal likelihood over the kernel hyperparameters.
  static GPModel fit(const Dataset& data, const BasisSpec& basis,
                     const OptimizerConfig& config = {});

  /// Builds the model for fixed hyperparameters; beta from GLS.
  static GPModel assemble(Dataset data, BasisSpec basis, KernelParams kernel);

  const Dataset& data() const { return data_; }
  const BasisSpec& basis() const { return basis_; }
  const KernelParams& kernel() const { return kernel_; }
  const VectorXd& beta() const { return beta_; }
  double log_marginal_likelihood() const { return log_likelihood_; }
  double jitter() const { return factor_.jitter; }

  Prediction predict(const MatrixXd& query) const;
  VectorXd predict_mean(const MatrixXd& query) const;
  MatrixXd sample(const MatrixXd& query, int count, std::uint64_t seed) const;

 private:
  GPModel() = default;

  Dataset data_;
  BasisSpec basis_;
  KernelParams kernel_;
  VectorXd beta_;
  SpdFactor factor_;
  VectorXd weights_;  // V^{-1} (y - H beta)
  double log_likelihood_ = 0.0;
};

/// Variance of the outputs, or 1 when they are constant. Used to scale
/// hyperparameter bounds.
double output_scale(const VectorXd& y);

}  // namespace mfdb::gp

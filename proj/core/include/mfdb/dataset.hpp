#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mfdb {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Observations of one scalar quantity at one fidelity level.
///
/// Rows of `inputs` are sample locations; `noise_sd` carries a per-point
/// Gaussian standard deviation in the units of `outputs`. Construction
/// validates shapes, finiteness and non-negative noise.
class Dataset {
 public:
  Dataset() = default;
  Dataset(MatrixXd inputs, VectorXd outputs, VectorXd noise_sd,
          std::vector<std::string> input_names = {});

  /// Noise-free observations.
  static Dataset exact(MatrixXd inputs, VectorXd outputs);

  const MatrixXd& inputs() const { return inputs_; }
  const VectorXd& outputs() const { return outputs_; }
  const VectorXd& noise_sd() const { return noise_sd_; }
  const std::vector<std::string>& input_names() const { return input_names_; }

  Eigen::Index size() const { return outputs_.size(); }
  Eigen::Index dim() const { return inputs_.cols(); }
  bool empty() const { return outputs_.size() == 0; }

  Dataset with_noise(VectorXd noise_sd) const;

 private:
  MatrixXd inputs_;
  VectorXd outputs_;
  VectorXd noise_sd_;
  std::vector<std::string> input_names_;
};

/// Reads `x1,...,xm,y,sigma` CSV. Column names other than the last two are
/// kept as input names.
Dataset read_dataset_csv(const std::string& path);
void write_dataset_csv(const std::string& path, const Dataset& data);

}  // namespace mfdb

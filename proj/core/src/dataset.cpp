#include "mfdb/dataset.hpp"

#include "mfdb/csv.hpp"
#include "mfdb/error.hpp"

namespace mfdb {

Dataset::Dataset(MatrixXd inputs, VectorXd outputs, VectorXd noise_sd,
                 std::vector<std::string> input_names)
    : inputs_(std::move(inputs)),
      outputs_(std::move(outputs)),
      noise_sd_(std::move(noise_sd)),
      input_names_(std::move(input_names)) {
  if (inputs_.rows() != outputs_.size() || outputs_.size() != noise_sd_.size()) {
    throw DataError("dataset shape mismatch: " + std::to_string(inputs_.rows()) + " input rows, " +
                    std::to_string(outputs_.size()) + " outputs, " +
                    std::to_string(noise_sd_.size()) + " noise values");
  }
  if (!inputs_.allFinite() || !outputs_.allFinite() || !noise_sd_.allFinite()) {
    throw DataError("dataset contains non-finite values");
  }
  if (noise_sd_.size() > 0 && noise_sd_.minCoeff() < 0.0) {
    throw DataError("dataset noise standard deviations must be >= 0");
  }
  if (!input_names_.empty() && static_cast<Eigen::Index>(input_names_.size()) != inputs_.cols()) {
    throw DataError("dataset input names do not match input dimension");
  }
}

Dataset Dataset::exact(MatrixXd inputs, VectorXd outputs) {
  VectorXd zeros = VectorXd::Zero(outputs.size());
  return Dataset(std::move(inputs), std::move(outputs), std::move(zeros));
}

Dataset Dataset::with_noise(VectorXd noise_sd) const {
  return Dataset(inputs_, outputs_, std::move(noise_sd), input_names_);
}

Dataset read_dataset_csv(const std::string& path) {
  const auto table = csv::read(path);
  const auto ncol = table.header.size();
  if (ncol < 3 || table.header[ncol - 2] != "y" || table.header[ncol - 1] != "sigma") {
    throw DataError(path + ": dataset header must be x1,...,xm,y,sigma");
  }
  const auto m = static_cast<Eigen::Index>(ncol - 2);
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  MatrixXd x(n, m);
  VectorXd y(n), sd(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < m; ++j) x(i, j) = row[static_cast<std::size_t>(j)];
    y(i) = row[ncol - 2];
    sd(i) = row[ncol - 1];
  }
  std::vector<std::string> names(table.header.begin(), table.header.end() - 2);
  try {
    return Dataset(std::move(x), std::move(y), std::move(sd), std::move(names));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  csv::Table table;
  for (Eigen::Index j = 0; j < data.dim(); ++j) {
    table.header.push_back(data.input_names().empty() ? "x" + std::to_string(j + 1)
                                                      : data.input_names()[static_cast<std::size_t>(j)]);
  }
  table.header.emplace_back("y");
  table.header.emplace_back("sigma");
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    std::vector<double> row;
    for (Eigen::Index j = 0; j < data.dim(); ++j) row.push_back(data.inputs()(i, j));
    row.push_back(data.outputs()(i));
    row.push_back(data.noise_sd()(i));
    table.rows.push_back(std::move(row));
  }
  csv::write(path, table);
}

}  // namespace mfdb

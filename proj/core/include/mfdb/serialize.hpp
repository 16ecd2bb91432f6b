#pragma once

#include <string>

#include <json.hpp>

#include "mfdb/gp.hpp"
#include "mfdb/mfgp.hpp"

namespace mfdb {

using Json = nlohmann::json;

// Model documents carry hyperparameters, regression coefficients and the
// training data. Caches and factorizations are rebuilt on load, so a loaded
// model predicts exactly like the one that was saved.

Json to_json(const Dataset& data);
Dataset dataset_from_json(const Json& j);

Json to_json(const gp::KernelParams& kernel);
gp::KernelParams kernel_from_json(const Json& j);

Json to_json(const gp::GPModel& model);
gp::GPModel gp_from_json(const Json& j);

Json to_json(const mfgp::MFGPModel& model);
/// Accepts both "gp" and "mfgp" documents.
mfgp::MFGPModel mfgp_from_json(const Json& j);

Json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const Json& j);

}  // namespace mfdb

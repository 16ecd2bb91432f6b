#include <cmath>
#include <fstream>

#include "mfdb/error.hpp"
#include "mfdb/serialize.hpp"

namespace mfdb {

namespace {

Json vector_json(const VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

VectorXd vector_from(const Json& j, const char* what) {
  if (!j.is_array()) throw DataError(std::string("model field '") + what + "' must be an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

const Json& field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) {
    throw DataError(std::string("model document is missing '") + name + "'");
  }
  return j.at(name);
}

void check_coefficients(const VectorXd& stored, const VectorXd& rebuilt, const char* what) {
  if (stored.size() != rebuilt.size()) {
    throw DataError(std::string("stored ") + what + " has the wrong length");
  }
  for (Eigen::Index i = 0; i < stored.size(); ++i) {
    const double tol = 1e-6 * (1.0 + std::abs(rebuilt(i)));
    if (!(std::abs(stored(i) - rebuilt(i)) <= tol)) {
      throw DataError(std::string("stored ") + what + " is inconsistent with the stored data");
    }
  }
}

}  // namespace

Json to_json(const Dataset& data) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    Json r = Json::array();
    for (Eigen::Index d = 0; d < data.dim(); ++d) r.push_back(data.inputs()(i, d));
    rows.push_back(std::move(r));
  }
  Json j;
  j["input_names"] = data.input_names();
  j["inputs"] = std::move(rows);
  j["outputs"] = vector_json(data.outputs());
  j["noise_sd"] = vector_json(data.noise_sd());
  return j;
}

Dataset dataset_from_json(const Json& j) {
  const auto& rows = field(j, "inputs");
  const VectorXd y = vector_from(field(j, "outputs"), "outputs");
  const VectorXd sd = vector_from(field(j, "noise_sd"), "noise_sd");
  const auto n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index m = n > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  MatrixXd x(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(r.size()) != m) throw DataError("ragged input rows in model");
    for (Eigen::Index d = 0; d < m; ++d) x(i, d) = r[static_cast<std::size_t>(d)].get<double>();
  }
  std::vector<std::string> names;
  if (j.contains("input_names")) names = j.at("input_names").get<std::vector<std::string>>();
  return Dataset(std::move(x), y, sd, std::move(names));
}

Json to_json(const gp::KernelParams& kernel) {
  return Json{{"signal_variance", kernel.signal_variance},
              {"length_scales", vector_json(kernel.length_scales)}};
}

gp::KernelParams kernel_from_json(const Json& j) {
  gp::KernelParams k;
  k.signal_variance = field(j, "signal_variance").get<double>();
  k.length_scales = vector_from(field(j, "length_scales"), "length_scales");
  return k;
}

Json to_json(const gp::GPModel& model) {
  Json j;
  j["type"] = "gp";
  j["basis_degree"] = model.basis().degree;
  j["kernel"] = to_json(model.kernel());
  j["beta"] = vector_json(model.beta());
  j["data"] = to_json(model.data());
  return j;
}

gp::GPModel gp_from_json(const Json& j) {
  if (field(j, "type") != "gp") throw DataError("not a GP model document");
  try {
    auto model = gp::GPModel::assemble(dataset_from_json(field(j, "data")),
                                       gp::BasisSpec{field(j, "basis_degree").get<int>()},
                                       kernel_from_json(field(j, "kernel")));
    check_coefficients(vector_from(field(j, "beta"), "beta"), model.beta(), "beta");
    return model;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed GP model document: ") + e.what());
  }
}

Json to_json(const mfgp::MFGPModel& model) {
  Json levels = Json::array();
  if (model.levels() >= 1) {
    Json base = to_json(model.base());
    base["index"] = 1;
    levels.push_back(std::move(base));
  }
  for (const auto& lvl : model.upper_levels()) {
    Json l;
    l["index"] = lvl.index;
    l["basis_degree"] = lvl.level_basis.degree;
    l["trend_degree"] = lvl.trend_basis.degree;
    l["kernel"] = to_json(lvl.kernel);
    l["beta"] = vector_json(lvl.beta);
    l["beta_rho"] = vector_json(lvl.beta_rho);
    l["data"] = to_json(lvl.data);
    levels.push_back(std::move(l));
  }
  return Json{{"type", "mfgp"}, {"levels", std::move(levels)}};
}

mfgp::MFGPModel mfgp_from_json(const Json& j) {
  const auto& type = field(j, "type");
  if (type == "gp") return mfgp::MFGPModel(gp_from_json(j));
  if (type != "mfgp") throw DataError("not a surrogate model document");
  try {
    const auto& levels = field(j, "levels");
    if (!levels.is_array() || levels.empty()) throw DataError("model has no levels");
    Json base = levels[0];
    base["type"] = "gp";
    mfgp::MFGPModel model(gp_from_json(base));
    for (std::size_t i = 1; i < levels.size(); ++i) {
      const auto& l = levels[i];
      if (field(l, "index").get<int>() != static_cast<int>(i + 1)) {
        throw DataError("model levels are out of order");
      }
      auto lvl = mfgp::assemble_level(model, dataset_from_json(field(l, "data")),
                                      gp::BasisSpec{field(l, "basis_degree").get<int>()},
                                      gp::BasisSpec{field(l, "trend_degree").get<int>()},
                                      kernel_from_json(field(l, "kernel")));
      check_coefficients(vector_from(field(l, "beta"), "beta"), lvl.beta, "beta");
      check_coefficients(vector_from(field(l, "beta_rho"), "beta_rho"), lvl.beta_rho, "beta_rho");
      model = model.with_level(std::move(lvl));
    }
    return model;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed multi-fidelity model document: ") + e.what());
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace mfdb

#include "mfdb/aero_db.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <random>
#include <set>
#include <thread>

#include "mfdb/csv.hpp"
#include "mfdb/error.hpp"

namespace mfdb::aero {

namespace {

const std::vector<std::string> kAeroKinds = {"C_L",  "C_D",  "C_SF", "C_l",  "C_m", "C_n",
                                             "C_mq", "C_lp", "C_lr", "C_np", "C_nr"};
const std::vector<std::string> kMomentKinds = {"C_l", "C_m", "C_n"};
const std::vector<std::string> kForceMomentKinds = {"C_L", "C_D", "C_SF", "C_l", "C_m", "C_n"};

bool is_stability_derivative(const std::string& kind) {
  return kind == "C_mq" || kind == "C_lp" || kind == "C_lr" || kind == "C_np" || kind == "C_nr";
}

const std::vector<std::string>& control_kinds(Surface s) {
  return s == Surface::kFlap ? kForceMomentKinds : kMomentKinds;
}

bool in_catalog(const CoefficientKey& key) {
  if (!key.surface) {
    return std::find(kAeroKinds.begin(), kAeroKinds.end(), key.kind) != kAeroKinds.end();
  }
  const auto& kinds = control_kinds(*key.surface);
  return std::find(kinds.begin(), kinds.end(), key.kind) != kinds.end();
}

std::vector<double> axis_from_json(const Json& j, const char* name) {
  if (j.is_array()) return j.get<std::vector<double>>();
  if (j.is_object()) {
    const double start = j.at("start").get<double>();
    const double stop = j.at("stop").get<double>();
    const double step = j.at("step").get<double>();
    if (!(step > 0.0) || stop < start) {
      throw DataError(std::string("grid axis '") + name + "' needs step > 0 and stop >= start");
    }
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> axis;
    for (long i = 0; i < n; ++i) axis.push_back(start + static_cast<double>(i) * step);
    return axis;
  }
  throw DataError(std::string("grid axis '") + name + "' must be a list or {start, stop, step}");
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<double> range_axis(double start, double stop, double step) {
  std::vector<double> axis;
  for (double v = start; v <= stop + 1e-9; v += step) axis.push_back(v);
  return axis;
}

Json reference_json(const Reference& r) {
  return Json{{"mac", r.mac},   {"span", r.span}, {"area", r.area}, {"mass", r.mass},
              {"ixx", r.ixx},   {"iyy", r.iyy},   {"izz", r.izz}};
}

Reference reference_from_json(const Json& j) {
  Reference r;
  r.mac = j.value("mac", r.mac);
  r.span = j.value("span", r.span);
  r.area = j.value("area", r.area);
  r.mass = j.value("mass", r.mass);
  r.ixx = j.value("ixx", r.ixx);
  r.iyy = j.value("iyy", r.iyy);
  r.izz = j.value("izz", r.izz);
  for (double v : {r.mac, r.span, r.area, r.ixx, r.iyy, r.izz}) {
    if (!(v > 0.0)) throw DataError("reference dimensions and inertias must be positive");
  }
  if (!(r.mass >= 0.0)) throw DataError("aircraft mass must be >= 0");
  return r;
}

// Index of the delta axis in a control key's signature.
std::size_t delta_axis(const CoefficientKey& key) { return key.input_signature().size() - 1; }

}  // namespace

std::string to_string(Surface s) {
  switch (s) {
    case Surface::kAileron: return "aileron";
    case Surface::kElevator: return "elevator";
    case Surface::kRudder: return "rudder";
    case Surface::kFlap: return "flap";
    case Surface::kSpoiler: return "spoiler";
  }
  return "unknown";
}

Surface surface_from_string(const std::string& name) {
  for (auto s : {Surface::kAileron, Surface::kElevator, Surface::kRudder, Surface::kFlap,
                 Surface::kSpoiler}) {
    if (to_string(s) == name) return s;
  }
  throw DataError("unknown control surface '" + name + "'");
}

CoefficientKey CoefficientKey::parse(const std::string& text) {
  CoefficientKey key;
  const auto colon = text.find(':');
  key.kind = text.substr(0, colon);
  if (colon != std::string::npos) key.surface = surface_from_string(text.substr(colon + 1));
  if (!in_catalog(key)) throw DataError("unknown coefficient '" + text + "'");
  return key;
}

std::string CoefficientKey::str() const {
  return surface ? kind + ":" + to_string(*surface) : kind;
}

std::vector<std::string> CoefficientKey::input_signature() const {
  if (surface) {
    if (*surface == Surface::kElevator) return {"alpha", "delta"};
    return {"alpha", "beta", "delta"};
  }
  if (is_stability_derivative(kind)) return {"alpha"};
  return {"alpha", "beta"};
}

const std::vector<std::string>& aero_kinds() { return kAeroKinds; }

std::vector<CoefficientKey> catalog() {
  std::vector<CoefficientKey> keys;
  for (const auto& k : kAeroKinds) keys.push_back({k, std::nullopt});
  for (auto s : {Surface::kAileron, Surface::kElevator, Surface::kRudder, Surface::kFlap,
                 Surface::kSpoiler}) {
    for (const auto& k : control_kinds(s)) keys.push_back({k, s});
  }
  return keys;
}

std::vector<CoefficientKey> simulator_keys() {
  std::vector<CoefficientKey> keys;
  for (const auto& k : kAeroKinds) keys.push_back({k, std::nullopt});
  for (auto s : {Surface::kAileron, Surface::kElevator, Surface::kRudder}) {
    for (const auto& k : kMomentKinds) keys.push_back({k, s});
  }
  return keys;
}

DeflectionRange deflection_range(Surface s) {
  switch (s) {
    case Surface::kAileron: return {-25.0, 25.0};
    case Surface::kElevator: return {-30.0, 30.0};
    case Surface::kRudder: return {0.0, 35.0};
    case Surface::kFlap: return {0.0, 60.0};
    case Surface::kSpoiler: return {0.0, 60.0};
  }
  return {};
}

double avl_uncertainty(double c_at_origin, double c_range, double x_norm) {
  if (c_range < 0.0) throw UsageError("coefficient range must be >= 0");
  return std::max(0.1 * std::abs(c_at_origin), 0.002 * x_norm * c_range);
}

double wt_uncertainty(double c_range) {
  if (c_range < 0.0) throw UsageError("coefficient range must be >= 0");
  return std::max(1e-4, 0.05 * c_range);
}

VectorXd wt_control_uncertainty(const VectorXd& delta, const VectorXd& values) {
  if (delta.size() != values.size()) throw UsageError("delta and value columns differ in length");
  VectorXd sd(values.size());
  std::map<double, std::pair<double, double>> slice;  // delta -> (min, max)
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    auto [it, fresh] = slice.try_emplace(delta(i), values(i), values(i));
    if (!fresh) {
      it->second.first = std::min(it->second.first, values(i));
      it->second.second = std::max(it->second.second, values(i));
    }
  }
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const auto& [lo, hi] = slice.at(delta(i));
    sd(i) = wt_uncertainty(hi - lo);
  }
  return sd;
}

double control_increment(double deflected, double baseline) { return deflected - baseline; }

double control_increment(const Condition& at_deflected, double deflected,
                         const Condition& at_baseline, double baseline) {
  if (at_deflected.alpha != at_baseline.alpha || at_deflected.beta != at_baseline.beta) {
    throw UsageError("control increment needs both coefficients at the same alpha and beta");
  }
  return control_increment(deflected, baseline);
}

UncertaintyModel uncertainty_model_from_string(const std::string& name) {
  if (name == "column") return UncertaintyModel::kColumn;
  if (name == "avl-formula" || name == "avl") return UncertaintyModel::kAvl;
  if (name == "wt-formula" || name == "wt") return UncertaintyModel::kWt;
  if (name == "exact") return UncertaintyModel::kExact;
  throw DataError("unknown uncertainty model '" + name + "'");
}

std::string to_string(UncertaintyModel m) {
  switch (m) {
    case UncertaintyModel::kColumn: return "column";
    case UncertaintyModel::kAvl: return "avl-formula";
    case UncertaintyModel::kWt: return "wt-formula";
    case UncertaintyModel::kExact: return "exact";
  }
  return "unknown";
}

Manifest Manifest::load(const std::string& path) {
  const auto dir = std::filesystem::path(path).parent_path().string();
  return from_json(read_json_file(path), dir);
}

Manifest Manifest::from_json(const Json& j, const std::string& base_dir) {
  Manifest m;
  try {
    if (j.contains("reference")) m.reference = reference_from_json(j.at("reference"));
    m.basis_degree = j.value("basis_degree", m.basis_degree);
    m.trend_degree = j.value("trend_degree", m.trend_degree);
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      m.optimizer.starts = o.value("starts", m.optimizer.starts);
      m.optimizer.seed = o.value("seed", m.optimizer.seed);
      m.optimizer.local.max_evaluations =
          o.value("max_evaluations", m.optimizer.local.max_evaluations);
    }
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      if (g.contains("alpha")) m.grid.alpha = axis_from_json(g.at("alpha"), "alpha");
      if (g.contains("beta")) m.grid.beta = axis_from_json(g.at("beta"), "beta");
      if (g.contains("delta")) {
        for (const auto& [name, axis] : g.at("delta").items()) {
          m.grid.delta[surface_from_string(name)] = axis_from_json(axis, name.c_str());
        }
      }
    }
    const auto& coefs = j.at("coefficients");
    std::set<std::string> seen;
    for (const auto& c : coefs) {
      CoefficientSpec spec;
      spec.key = CoefficientKey::parse(c.at("key").get<std::string>());
      if (!seen.insert(spec.key.str()).second) {
        throw DataError("coefficient '" + spec.key.str() + "' listed twice");
      }
      for (const auto& s : c.at("sources")) {
        SourceSpec src;
        src.fidelity = s.at("fidelity").get<int>();
        std::filesystem::path p = s.at("csv").get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        src.csv = p.string();
        src.uncertainty = uncertainty_model_from_string(s.value("uncertainty", "column"));
        spec.sources.push_back(std::move(src));
      }
      std::sort(spec.sources.begin(), spec.sources.end(),
                [](const SourceSpec& a, const SourceSpec& b) { return a.fidelity < b.fidelity; });
      for (std::size_t i = 0; i < spec.sources.size(); ++i) {
        if (spec.sources[i].fidelity != static_cast<int>(i + 1)) {
          throw DataError("coefficient '" + spec.key.str() +
                          "': fidelity levels must be numbered 1..L without gaps");
        }
      }
      if (spec.sources.empty()) throw DataError("coefficient '" + spec.key.str() + "' has no sources");
      m.coefficients.push_back(std::move(spec));
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed database manifest: ") + e.what());
  }
  return m;
}

Dataset load_source(const CoefficientKey& key, const SourceSpec& source) {
  const auto table = csv::read(source.csv);
  const auto names = key.input_signature();
  std::vector<std::size_t> cols;
  for (const auto& n : names) cols.push_back(table.column(n));
  const auto ycol = table.column("y");
  const auto n = static_cast<Eigen::Index>(table.rows.size());
  if (n == 0) throw DataError(source.csv + ": no data rows");
  MatrixXd x(n, static_cast<Eigen::Index>(names.size()));
  VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    for (std::size_t d = 0; d < cols.size(); ++d) x(i, static_cast<Eigen::Index>(d)) = row[cols[d]];
    y(i) = row[ycol];
  }
  if (key.is_control()) {
    const auto dcol = static_cast<Eigen::Index>(names.size() - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (x(i, dcol) == 0.0 && y(i) != 0.0) {
        throw DataError(source.csv + ": row " + std::to_string(i + 1) +
                        ": control increment must be 0 at delta = 0");
      }
    }
  }

  VectorXd sd = VectorXd::Zero(n);
  const double range = y.maxCoeff() - y.minCoeff();
  switch (source.uncertainty) {
    case UncertaintyModel::kColumn: {
      const auto scol = table.column("sigma");
      for (Eigen::Index i = 0; i < n; ++i) sd(i) = table.rows[static_cast<std::size_t>(i)][scol];
      break;
    }
    case UncertaintyModel::kAvl: {
      Eigen::Index origin = 0;
      x.rowwise().squaredNorm().minCoeff(&origin);
      for (Eigen::Index i = 0; i < n; ++i) sd(i) = avl_uncertainty(y(origin), range, x.row(i).norm());
      break;
    }
    case UncertaintyModel::kWt:
      if (key.is_control()) {
        sd = wt_control_uncertainty(x.col(x.cols() - 1), y);
      } else {
        sd.setConstant(wt_uncertainty(range));
      }
      break;
    case UncertaintyModel::kExact: break;
  }
  try {
    return Dataset(std::move(x), std::move(y), std::move(sd), names);
  } catch (const Error& e) {
    throw DataError(source.csv + ": " + e.what());
  }
}

const mfgp::MFGPModel& DatabaseModel::at(const CoefficientKey& key) const {
  auto it = entries.find(key.str());
  if (it == entries.end()) throw DataError("database has no entry for '" + key.str() + "'");
  return it->second;
}

std::vector<std::string> DatabaseModel::missing(const std::vector<CoefficientKey>& keys) const {
  std::vector<std::string> out;
  for (const auto& k : keys) {
    if (!has(k)) out.push_back(k.str());
  }
  return out;
}

void DatabaseModel::require_complete() const {
  const auto gaps = missing(simulator_keys());
  if (gaps.empty()) return;
  std::string list;
  for (const auto& g : gaps) list += (list.empty() ? "" : ", ") + g;
  throw DataError("database is incomplete for simulation; missing: " + list);
}

std::vector<std::vector<double>> grid_axes(const CoefficientKey& key, const SampleGrid& grid,
                                           const std::vector<Dataset>& sources) {
  std::vector<std::vector<double>> axes;
  for (const auto& name : key.input_signature()) {
    if (name == "alpha") {
      axes.push_back(grid.alpha.empty() ? range_axis(-4.0, 25.0, 1.0) : sorted_unique(grid.alpha));
    } else if (name == "beta") {
      axes.push_back(grid.beta.empty() ? range_axis(-20.0, 20.0, 4.0) : sorted_unique(grid.beta));
    } else {
      std::vector<double> d;
      auto it = grid.delta.find(*key.surface);
      if (it != grid.delta.end()) {
        d = it->second;
      } else {
        for (const auto& s : sources) {
          for (Eigen::Index i = 0; i < s.size(); ++i) d.push_back(s.inputs()(i, s.dim() - 1));
        }
      }
      d.push_back(0.0);
      axes.push_back(sorted_unique(std::move(d)));
    }
  }
  return axes;
}

DatabaseModel fit_database(const Manifest& manifest, int jobs) {
  const std::size_t n = manifest.coefficients.size();
  std::vector<mfgp::MFGPModel> models(n);
  std::vector<std::vector<std::vector<double>>> axes(n);
  std::vector<std::exception_ptr> errors(n);

  auto fit_one = [&](std::size_t i) {
    try {
      const auto& spec = manifest.coefficients[i];
      std::vector<Dataset> data;
      std::vector<mfgp::LevelSpec> levels;
      for (const auto& src : spec.sources) {
        data.push_back(load_source(spec.key, src));
        mfgp::LevelSpec ls;
        ls.data = data.back();
        ls.level_basis = gp::BasisSpec{manifest.basis_degree};
        ls.trend_basis = gp::BasisSpec{manifest.trend_degree};
        ls.optimizer = manifest.optimizer;
        ls.optimizer.seed = derive_seed(manifest.optimizer.seed, fnv1a(spec.key.str()));
        levels.push_back(std::move(ls));
      }
      models[i] = mfgp::MFGPModel::build(levels);
      axes[i] = grid_axes(spec.key, manifest.grid, data);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const auto workers = static_cast<std::size_t>(std::clamp(jobs, 1, 64));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fit_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) fit_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (const Error& e) {
        const std::string msg = manifest.coefficients[i].key.str() + ": " + e.what();
        switch (e.kind()) {
          case ErrorKind::kUsage: throw UsageError(msg);
          case ErrorKind::kData: throw DataError(msg);
          case ErrorKind::kNumerical: throw NumericalError(msg);
        }
        throw;
      }
    }
  }

  DatabaseModel db;
  db.reference = manifest.reference;
  for (std::size_t i = 0; i < n; ++i) {
    const auto key = manifest.coefficients[i].key.str();
    db.entries.emplace(key, std::move(models[i]));
    db.grid.emplace(key, std::move(axes[i]));
  }
  return db;
}

Json to_json(const DatabaseModel& db) {
  Json entries = Json::object();
  for (const auto& [key, model] : db.entries) {
    entries[key] = Json{{"grid", db.grid.at(key)}, {"model", mfdb::to_json(model)}};
  }
  return Json{{"type", "aero-db"}, {"reference", reference_json(db.reference)},
              {"entries", std::move(entries)}};
}

DatabaseModel database_from_json(const Json& j) {
  DatabaseModel db;
  try {
    if (j.at("type") != "aero-db") throw DataError("not an aerodynamic database document");
    db.reference = reference_from_json(j.at("reference"));
    for (const auto& [key, entry] : j.at("entries").items()) {
      const auto parsed = CoefficientKey::parse(key);
      auto model = mfgp_from_json(entry.at("model"));
      if (model.dim() != static_cast<Eigen::Index>(parsed.input_signature().size())) {
        throw DataError("entry '" + key + "' has the wrong input dimension");
      }
      db.entries.emplace(key, std::move(model));
      db.grid.emplace(key, entry.at("grid").get<std::vector<std::vector<double>>>());
    }
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed database document: ") + e.what());
  }
  return db;
}

const GridSurface& DatabaseSample::surface(const CoefficientKey& key) const {
  auto it = surfaces_.find(key.str());
  if (it == surfaces_.end()) throw DataError("missing coefficient entry '" + key.str() + "'");
  return it->second;
}

double DatabaseSample::eval(const CoefficientKey& key, double alpha, double beta, double delta,
                            bool* extrapolated) const {
  const auto& s = surface(key);
  double x[3];
  std::size_t d = 0;
  x[d++] = alpha;
  if (s.dim() >= 2 && !(key.surface && *key.surface == Surface::kElevator)) x[d++] = beta;
  if (key.is_control()) x[d++] = delta;
  return s(x, extrapolated);
}

double total_coefficient(const DatabaseSample& sample, const std::string& kind, double alpha,
                         double beta, const Deflections& deflections, bool* extrapolated) {
  double total = sample.eval({kind, std::nullopt}, alpha, beta, 0.0, extrapolated);
  for (const auto& [surface, delta] : deflections) {
    const CoefficientKey key{kind, surface};
    if (!in_catalog(key)) continue;  // this surface has no such increment
    total += sample.eval(key, alpha, beta, delta, extrapolated);
  }
  return total;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(salt), static_cast<std::uint32_t>(salt >> 32)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

DatabaseSampler::DatabaseSampler(const DatabaseModel& db) : reference_(db.reference) {
  for (const auto& [key_text, model] : db.entries) {
    const auto key = CoefficientKey::parse(key_text);
    Entry e;
    e.key = key_text;
    e.axes = db.grid.at(key_text);
    const MatrixXd nodes = GridSurface::nodes(e.axes);
    const auto pred = model.predict(nodes);
    e.mean = pred.mean;
    e.sqrt_cov = gp::covariance_sqrt(pred.covariance);
    if (key.is_control()) {
      // Subtract the delta = 0 node with the same remaining coordinates.
      const std::size_t da = delta_axis(key);
      const auto& dvals = e.axes[da];
      const auto zero = static_cast<std::size_t>(
          std::find(dvals.begin(), dvals.end(), 0.0) - dvals.begin());
      if (zero == dvals.size()) throw DataError(key_text + ": sample grid lacks delta = 0");
      std::size_t stride = 1;
      for (std::size_t d = da + 1; d < e.axes.size(); ++d) stride *= e.axes[d].size();
      const std::size_t block = stride * dvals.size();
      const VectorXd mean = e.mean;
      const MatrixXd root = e.sqrt_cov;
      for (Eigen::Index i = 0; i < nodes.rows(); ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const std::size_t anchor = (ui / block) * block + zero * stride + ui % stride;
        const auto a = static_cast<Eigen::Index>(anchor);
        e.mean(i) = mean(i) - mean(a);
        e.sqrt_cov.row(i) = root.row(i) - root.row(a);
      }
    }
    entries_.push_back(std::move(e));
  }
}

DatabaseSample DatabaseSampler::draw(std::uint64_t master_seed, std::uint64_t sample_id) const {
  const std::uint64_t sample_seed = derive_seed(master_seed, sample_id);
  std::map<std::string, GridSurface> surfaces;
  for (const auto& e : entries_) {
    const MatrixXd values = gp::draw(e.mean, e.sqrt_cov, 1, derive_seed(sample_seed, fnv1a(e.key)));
    std::vector<double> v(values.data(), values.data() + values.size());
    surfaces.emplace(e.key, GridSurface(e.axes, std::move(v)));
  }
  return DatabaseSample(sample_id, reference_, std::move(surfaces));
}

DatabaseSample DatabaseSampler::mean() const {
  std::map<std::string, GridSurface> surfaces;
  for (const auto& e : entries_) {
    surfaces.emplace(e.key, GridSurface(e.axes, std::vector<double>(e.mean.data(),
                                                                    e.mean.data() + e.mean.size())));
  }
  return DatabaseSample(0, reference_, std::move(surfaces));
}

DatabaseSample sample_database(const DatabaseModel& db, std::uint64_t seed) {
  return DatabaseSampler(db).draw(seed, 0);
}

}  // namespace mfdb::aero

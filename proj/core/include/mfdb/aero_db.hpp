#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfdb/grid_surface.hpp"
#include "mfdb/mfgp.hpp"
#include "mfdb/serialize.hpp"

namespace mfdb::aero {

enum class Surface { kAileron, kElevator, kRudder, kFlap, kSpoiler };

std::string to_string(Surface s);
Surface surface_from_string(const std::string& name);

/// Baseline coefficient ("C_l") or a control increment ("C_l:aileron").
struct CoefficientKey {
  std::string kind;
  std::optional<Surface> surface;

  static CoefficientKey parse(const std::string& text);
  std::string str() const;
  bool is_control() const { return surface.has_value(); }
  /// Ordered input names: alpha,beta for forces and moments, alpha for
  /// stability derivatives, alpha,beta,delta for increments (alpha,delta for
  /// the elevator).
  std::vector<std::string> input_signature() const;

  friend bool operator==(const CoefficientKey& a, const CoefficientKey& b) {
    return a.kind == b.kind && a.surface == b.surface;
  }
};

/// The 11 baseline kinds.
const std::vector<std::string>& aero_kinds();
/// Every supported key: 11 baseline plus 18 control increments.
std::vector<CoefficientKey> catalog();
/// Keys the flight simulator reads: 11 baseline plus the C_l, C_m, C_n
/// increments of aileron, elevator and rudder.
std::vector<CoefficientKey> simulator_keys();

/// Reference dimensions (m, m^2) and mass properties (kg, kg m^2).
struct Reference {
  double mac = 3.374;
  double span = 23.159;
  double area = 70.079;
  double mass = 25332.0;
  double ixx = 238419.0;
  double iyy = 1510624.0;
  double izz = 1717539.0;
};

struct DeflectionRange {
  double lo = 0.0;
  double hi = 0.0;
};
/// Deflection ranges covered by the source data, in degrees.
DeflectionRange deflection_range(Surface s);

/// max{0.1 |C(0)|, 0.002 ||x|| range(C)}.
double avl_uncertainty(double c_at_origin, double c_range, double x_norm);
/// max{1e-4, 0.05 range(C)}.
double wt_uncertainty(double c_range);
/// Wind-tunnel formula applied separately within each deflection slice.
VectorXd wt_control_uncertainty(const VectorXd& delta, const VectorXd& values);

struct Condition {
  double alpha = 0.0;
  double beta = 0.0;
};
double control_increment(double deflected, double baseline);
/// Throws UsageError when the two values were taken at different conditions.
double control_increment(const Condition& at_deflected, double deflected,
                         const Condition& at_baseline, double baseline);

enum class UncertaintyModel { kColumn, kAvl, kWt, kExact };
UncertaintyModel uncertainty_model_from_string(const std::string& name);
std::string to_string(UncertaintyModel m);

struct SourceSpec {
  int fidelity = 1;
  std::string csv;  // resolved path
  UncertaintyModel uncertainty = UncertaintyModel::kColumn;
};

struct CoefficientSpec {
  CoefficientKey key;
  std::vector<SourceSpec> sources;  // sorted by fidelity, 1..L
};

/// Evaluation grid for sampling. Empty axes fall back to the defaults:
/// alpha -4..25 every 1 deg, beta -20..20 every 4 deg, delta at the training
/// deflections (always including 0).
struct SampleGrid {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::map<Surface, std::vector<double>> delta;
};

struct Manifest {
  Reference reference;
  SampleGrid grid;
  std::vector<CoefficientSpec> coefficients;
  int basis_degree = 1;
  int trend_degree = 0;
  gp::OptimizerConfig optimizer;

  /// Relative CSV paths resolve against the manifest's directory.
  static Manifest load(const std::string& path);
  static Manifest from_json(const Json& j, const std::string& base_dir);
};

/// Reads one source CSV (columns named after the key's signature, then y and
/// optionally sigma) and applies the source's uncertainty model. Control
/// sources must have zero increments at delta = 0.
Dataset load_source(const CoefficientKey& key, const SourceSpec& source);

/// One surrogate per coefficient, immutable after assembly.
struct DatabaseModel {
  Reference reference;
  std::map<std::string, mfgp::MFGPModel> entries;
  std::map<std::string, std::vector<std::vector<double>>> grid;  // axes per key

  bool has(const CoefficientKey& key) const { return entries.count(key.str()) != 0; }
  const mfgp::MFGPModel& at(const CoefficientKey& key) const;
  std::vector<std::string> missing(const std::vector<CoefficientKey>& keys) const;
  /// Throws DataError naming every missing simulator key.
  void require_complete() const;
};

/// Fits every coefficient of the manifest; `jobs` > 1 fits in parallel.
DatabaseModel fit_database(const Manifest& manifest, int jobs = 1);

/// Default/overridden evaluation axes for one key given its training data.
std::vector<std::vector<double>> grid_axes(const CoefficientKey& key, const SampleGrid& grid,
                                           const std::vector<Dataset>& sources);

Json to_json(const DatabaseModel& db);
DatabaseModel database_from_json(const Json& j);

using Deflections = std::map<Surface, double>;

/// One realization of the whole database as interpolated lookup tables.
class DatabaseSample {
 public:
  DatabaseSample() = default;
  DatabaseSample(std::uint64_t id, Reference ref, std::map<std::string, GridSurface> surfaces)
      : id_(id), reference_(ref), surfaces_(std::move(surfaces)) {}

  std::uint64_t sample_id() const { return id_; }
  const Reference& reference() const { return reference_; }
  bool has(const CoefficientKey& key) const { return surfaces_.count(key.str()) != 0; }
  const GridSurface& surface(const CoefficientKey& key) const;
  const std::map<std::string, GridSurface>& surfaces() const { return surfaces_; }

  /// Value of one coefficient; unused inputs are ignored.
  double eval(const CoefficientKey& key, double alpha, double beta, double delta = 0.0,
              bool* extrapolated = nullptr) const;

 private:
  std::uint64_t id_ = 0;
  Reference reference_;
  std::map<std::string, GridSurface> surfaces_;
};

/// Baseline kind at (alpha, beta) plus the increment of every listed surface.
double total_coefficient(const DatabaseSample& sample, const std::string& kind, double alpha,
                         double beta, const Deflections& deflections,
                         bool* extrapolated = nullptr);

/// FNV-1a hash of a key string.
std::uint64_t fnv1a(const std::string& text);
/// Deterministic child seed of (master, salt).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt);

/// Precomputes, per coefficient, the predictive mean on its grid and a square
/// root of the predictive covariance so every draw is one matrix-vector
/// product. Control increments are anchored so that each draw is exactly zero
/// on the delta = 0 slice.
class DatabaseSampler {
 public:
  explicit DatabaseSampler(const DatabaseModel& db);

  /// Sample `sample_id` of the stream defined by `master_seed`.
  DatabaseSample draw(std::uint64_t master_seed, std::uint64_t sample_id) const;
  /// The mean database (every coefficient at its predictive mean).
  DatabaseSample mean() const;

 private:
  struct Entry {
    std::string key;
    std::vector<std::vector<double>> axes;
    VectorXd mean;
    MatrixXd sqrt_cov;
  };
  Reference reference_;
  std::vector<Entry> entries_;
};

/// Convenience: one draw with sample id 0.
DatabaseSample sample_database(const DatabaseModel& db, std::uint64_t seed);

}  // namespace mfdb::aero

#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mfdb::turb {

using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

/// Reynolds stress (velocity-correlation convention, trace = 2k) and its
/// turbulent kinetic energy.
struct StressState {
  Matrix3d R = Matrix3d::Zero();
  double k = 0.0;

  /// k taken as trace(R) / 2.
  static StressState from_stress(const Matrix3d& r);
  /// Throws DataError when R is not symmetric or k != trace(R)/2.
  void validate() const;
};

struct AnisotropyTensor {
  Matrix3d b = Matrix3d::Zero();
};

/// Eigenvalues in descending order with matching orthonormal eigenvector columns.
struct Eigensystem {
  Vector3d values = Vector3d::Zero();
  Matrix3d vectors = Matrix3d::Identity();
};

/// Vertices of the barycentric map: 1C, 2C and 3C limiting states.
inline const Vector2d kVertex1C{1.0, 0.0};
inline const Vector2d kVertex2C{0.0, 0.0};
inline const Vector2d kVertex3C{0.5, 0.86602540378443864676};

struct BarycentricPoint {
  Vector2d coords = Vector2d::Zero();
  Vector3d weights = Vector3d::Zero();  // (l1 - l2, 2 l2 - 2 l3, 3 l3 + 1)
  bool realizable = false;              // weights inside [0, 1] up to 1e-10
};

enum class Componentiality { k1C, k2C, k3C };
enum class EigenvectorMode { kIdentity, kVMin, kVMax };

struct PerturbationSpec {
  Componentiality target = Componentiality::k1C;
  EigenvectorMode eigenvectors = EigenvectorMode::kVMax;
  double relaxation = 0.1;

  /// The five distinct eigenvalue/eigenvector combinations:
  /// 1C/2C/3C with v_max, then 1C/2C with v_min.
  static std::array<PerturbationSpec, 5> canonical(double relaxation = 0.1);
  /// File suffix such as "_1c_max".
  std::string suffix() const;
};

Vector2d vertex(Componentiality c);
/// Diagonal of the limiting eigenvalue matrix for a vertex.
Vector3d limiting_eigenvalues(Componentiality c);

/// The linear eddy-viscosity stress nu_t S - (2/3) k I exactly as written in
/// stress-sign convention (trace = nu_t tr S - 2k).
Matrix3d boussinesq_stress(const Matrix3d& strain, double k, double nu_t);
/// Velocity-correlation state of the same model: R = (2/3) k I - nu_t S.
StressState boussinesq_state(const Matrix3d& strain, double k, double nu_t);

AnisotropyTensor anisotropy(const StressState& state);
StressState reconstruct_stress(const AnisotropyTensor& b, double k);
Eigensystem eig_decompose(const AnisotropyTensor& b);
BarycentricPoint to_barycentric(const Vector3d& eigenvalues);
/// Inverse of the barycentric map under zero trace, sorted descending.
Vector3d eigenvalues_from_barycentric(const Vector2d& x);

/// Moves the state's barycentric point a fraction r toward the target vertex,
/// permutes eigenvectors per the mode and rebuilds R with the original k.
/// r == 0 returns the input unchanged.
StressState perturb(const StressState& state, const PerturbationSpec& spec);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double mean() const { return 0.5 * (lo + hi); }
  /// Interval ends read as +/- 2 sigma of a symmetric Gaussian.
  double sigma() const { return 0.25 * (hi - lo); }
};

/// Min/max over an ensemble of at least two realizations.
Interval ensemble_bounds(const std::vector<double>& values);

/// Pointwise max - min over realizations of a scalar field.
std::vector<double> variability_field(const std::vector<std::vector<double>>& fields);

/// CSV with columns R11,R22,R33,R12,R13,R23,k.
std::vector<StressState> read_stress_field(const std::string& path);
void write_stress_field(const std::string& path, const std::vector<StressState>& field);

}  // namespace mfdb::turb

#include "mfdb/turb_uq.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "mfdb/csv.hpp"
#include "mfdb/error.hpp"

namespace mfdb::turb {

namespace {

constexpr double kRealizabilityTol = 1e-10;

bool is_symmetric(const Matrix3d& m, double rel_tol) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

}  // namespace

StressState StressState::from_stress(const Matrix3d& r) { return {r, 0.5 * r.trace()}; }

void StressState::validate() const {
  if (!R.allFinite() || !std::isfinite(k)) throw DataError("stress state has non-finite entries");
  if (!is_symmetric(R, 1e-12)) throw DataError("Reynolds stress is not symmetric");
  const double half_trace = 0.5 * R.trace();
  if (std::abs(half_trace - k) > 1e-10 * std::max({1.0, std::abs(k), std::abs(half_trace)})) {
    throw DataError("turbulent kinetic energy does not equal trace(R)/2");
  }
}

std::array<PerturbationSpec, 5> PerturbationSpec::canonical(double r) {
  using C = Componentiality;
  using E = EigenvectorMode;
  return {{{C::k1C, E::kVMax, r},
           {C::k2C, E::kVMax, r},
           {C::k3C, E::kVMax, r},
           {C::k1C, E::kVMin, r},
           {C::k2C, E::kVMin, r}}};
}

std::string PerturbationSpec::suffix() const {
  std::string s = "_";
  switch (target) {
    case Componentiality::k1C: s += "1c"; break;
    case Componentiality::k2C: s += "2c"; break;
    case Componentiality::k3C: s += "3c"; break;
  }
  return s + (eigenvectors == EigenvectorMode::kVMin ? "_min" : "_max");
}

Vector2d vertex(Componentiality c) {
  switch (c) {
    case Componentiality::k1C: return kVertex1C;
    case Componentiality::k2C: return kVertex2C;
    case Componentiality::k3C: return kVertex3C;
  }
  return kVertex3C;
}

Vector3d limiting_eigenvalues(Componentiality c) {
  switch (c) {
    case Componentiality::k1C: return {2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0};
    case Componentiality::k2C: return {1.0 / 6.0, 1.0 / 6.0, -1.0 / 3.0};
    case Componentiality::k3C: return Vector3d::Zero();
  }
  return Vector3d::Zero();
}

Matrix3d boussinesq_stress(const Matrix3d& strain, double k, double nu_t) {
  if (k < 0.0 || nu_t < 0.0) throw UsageError("k and nu_t must be >= 0");
  if (!is_symmetric(strain, 1e-12)) throw UsageError("mean strain tensor is not symmetric");
  return nu_t * strain - (2.0 / 3.0) * k * Matrix3d::Identity();
}

StressState boussinesq_state(const Matrix3d& strain, double k, double nu_t) {
  return {-boussinesq_stress(strain, k, nu_t), k};
}

AnisotropyTensor anisotropy(const StressState& state) {
  if (!(state.k > 0.0)) {
    throw DataError("anisotropy is undefined for a state with k <= 0 (degenerate stress)");
  }
  return {state.R / (2.0 * state.k) - Matrix3d::Identity() / 3.0};
}

StressState reconstruct_stress(const AnisotropyTensor& b, double k) {
  if (k < 0.0) throw UsageError("turbulent kinetic energy must be >= 0");
  Matrix3d r = 2.0 * k * (b.b + Matrix3d::Identity() / 3.0);
  r = 0.5 * (r + r.transpose()).eval();
  return {r, k};
}

Eigensystem eig_decompose(const AnisotropyTensor& b) {
  Eigensystem out;
  if (b.b.isZero(0.0)) return out;
  Eigen::SelfAdjointEigenSolver<Matrix3d> solver(0.5 * (b.b + b.b.transpose()));
  // ascending -> descending
  for (int i = 0; i < 3; ++i) {
    out.values(i) = solver.eigenvalues()(2 - i);
    out.vectors.col(i) = solver.eigenvectors().col(2 - i);
  }
  return out;
}

BarycentricPoint to_barycentric(const Vector3d& l) {
  if (l(0) < l(1) - 1e-12 || l(1) < l(2) - 1e-12) {
    throw UsageError("eigenvalues must be sorted in descending order");
  }
  BarycentricPoint p;
  p.weights = {l(0) - l(1), 2.0 * l(1) - 2.0 * l(2), 3.0 * l(2) + 1.0};
  p.coords = kVertex1C * p.weights(0) + kVertex2C * p.weights(1) + kVertex3C * p.weights(2);
  p.realizable = (p.weights.array() >= -kRealizabilityTol).all() &&
                 (p.weights.array() <= 1.0 + kRealizabilityTol).all() &&
                 std::abs(p.weights.sum() - 1.0) <= kRealizabilityTol;
  return p;
}

Vector3d eigenvalues_from_barycentric(const Vector2d& x) {
  // x - x3C = x1C (l1 - l2) + x2C (2 l2 - 2 l3) + x3C (3 l3), and l1 + l2 + l3 = 0.
  Matrix3d a;
  for (int c = 0; c < 2; ++c) {
    a(c, 0) = kVertex1C(c);
    a(c, 1) = -kVertex1C(c) + 2.0 * kVertex2C(c);
    a(c, 2) = -2.0 * kVertex2C(c) + 3.0 * kVertex3C(c);
  }
  a.row(2).setOnes();
  const Vector3d rhs{x(0) - kVertex3C(0), x(1) - kVertex3C(1), 0.0};
  Vector3d l = a.partialPivLu().solve(rhs);
  std::sort(l.data(), l.data() + 3, std::greater<>());
  return l;
}

StressState perturb(const StressState& state, const PerturbationSpec& spec) {
  if (!(spec.relaxation >= 0.0 && spec.relaxation <= 1.0)) {
    throw UsageError("relaxation factor must lie in [0, 1]");
  }
  state.validate();
  if (spec.relaxation == 0.0) return state;

  const auto eig = eig_decompose(anisotropy(state));
  const auto bary = to_barycentric(eig.values);
  if (!bary.realizable) throw DataError("input stress state is not realizable");

  const Vector2d target = vertex(spec.target);
  const Vector2d moved = bary.coords + spec.relaxation * (target - bary.coords);
  const Vector3d lambda = eigenvalues_from_barycentric(moved);

  Matrix3d q = eig.vectors;
  if (spec.eigenvectors == EigenvectorMode::kVMin) q.col(0).swap(q.col(2));
  const AnisotropyTensor perturbed{q * lambda.asDiagonal() * q.transpose()};
  return reconstruct_stress(perturbed, state.k);
}

Interval ensemble_bounds(const std::vector<double>& values) {
  if (values.size() < 2) throw DataError("an ensemble interval needs at least two values");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {*lo, *hi};
}

std::vector<double> variability_field(const std::vector<std::vector<double>>& fields) {
  if (fields.size() < 2) throw DataError("variability needs at least two realizations");
  const std::size_t n = fields.front().size();
  for (const auto& f : fields) {
    if (f.size() != n) throw DataError("realization fields have different lengths");
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double lo = fields[0][i], hi = fields[0][i];
    for (const auto& f : fields) {
      lo = std::min(lo, f[i]);
      hi = std::max(hi, f[i]);
    }
    out[i] = hi - lo;
  }
  return out;
}

std::vector<StressState> read_stress_field(const std::string& path) {
  const auto table = csv::read(path);
  const std::array<std::size_t, 7> col{table.column("R11"), table.column("R22"),
                                       table.column("R33"), table.column("R12"),
                                       table.column("R13"), table.column("R23"),
                                       table.column("k")};
  std::vector<StressState> field;
  field.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    StressState s;
    s.R << row[col[0]], row[col[3]], row[col[4]],  //
        row[col[3]], row[col[1]], row[col[5]],     //
        row[col[4]], row[col[5]], row[col[2]];
    s.k = row[col[6]];
    const double half_trace = 0.5 * s.R.trace();
    if (!s.R.allFinite() ||
        std::abs(half_trace - s.k) > 1e-9 * std::max({1.0, std::abs(s.k), std::abs(half_trace)})) {
      throw DataError(path + ": row " + std::to_string(i + 1) + ": k does not equal trace(R)/2");
    }
    field.push_back(s);
  }
  return field;
}

void write_stress_field(const std::string& path, const std::vector<StressState>& field) {
  csv::Table t;
  t.header = {"R11", "R22", "R33", "R12", "R13", "R23", "k"};
  for (const auto& s : field) {
    t.rows.push_back({s.R(0, 0), s.R(1, 1), s.R(2, 2), s.R(0, 1), s.R(0, 2), s.R(1, 2), s.k});
  }
  csv::write(path, t);
}

}  // namespace mfdb::turb

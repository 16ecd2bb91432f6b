#include "mfdb/flight_sim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "mfdb/csv.hpp"
#include "mfdb/error.hpp"

namespace mfdb::sim {

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

using aero::Surface;

// Minimum-jerk step from 0 to 1 over tau in [0, 1] and its first two
// derivatives with respect to tau.
struct Quintic {
  double s, ds, dds;
};

Quintic quintic(double tau) {
  const double t2 = tau * tau, t3 = t2 * tau;
  return {t3 * (10.0 - 15.0 * tau + 6.0 * t2), 30.0 * t2 * (1.0 - 2.0 * tau + t2),
          60.0 * tau * (1.0 - 3.0 * tau + 2.0 * t2)};
}

template <int N>
struct NewtonResult {
  Eigen::Matrix<double, N, 1> x;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Damped Newton with a central-difference Jacobian and backtracking on the
// residual norm.
template <int N>
NewtonResult<N> newton(const std::function<Eigen::Matrix<double, N, 1>(
                           const Eigen::Matrix<double, N, 1>&)>& f,
                       Eigen::Matrix<double, N, 1> x, double tol, int max_iter, double h) {
  using Vec = Eigen::Matrix<double, N, 1>;
  using Mat = Eigen::Matrix<double, N, N>;
  NewtonResult<N> out;
  Vec fx = f(x);
  double norm = fx.norm();
  for (int it = 0; it < max_iter && std::isfinite(norm); ++it) {
    if (norm <= tol) {
      out.converged = true;
      break;
    }
    Mat jac;
    for (int j = 0; j < N; ++j) {
      Vec xp = x, xm = x;
      xp(j) += h;
      xm(j) -= h;
      jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
    }
    const auto lu = jac.fullPivLu();
    if (!lu.isInvertible()) break;
    const Vec step = lu.solve(-fx);
    double lambda = 1.0;
    Vec trial = x + step;
    Vec ft = f(trial);
    while (!(ft.norm() < norm) && lambda > 1.0 / 1024.0) {
      lambda *= 0.5;
      trial = x + lambda * step;
      ft = f(trial);
    }
    x = trial;
    fx = ft;
    norm = fx.norm();
    out.iterations = it + 1;
  }
  if (norm <= tol) out.converged = true;
  out.x = x;
  out.residual = norm;
  return out;
}

double require_number(const Json& j, const char* section, const char* name) {
  if (!j.contains(name)) {
    throw UsageError(std::string("config section '") + section + "' is missing '" + name + "'");
  }
  return j.at(name).get<double>();
}

}  // namespace

void ManeuverSpec::validate() const {
  for (double d : {roll_duration, time_step}) {
    if (!(d > 0.0)) throw UsageError("roll duration and time step must be positive");
  }
  for (double d : {level_duration, establish_duration, hold_duration, final_hold_duration}) {
    if (!(d >= 0.0)) throw UsageError("maneuver phase durations must be >= 0");
  }
  if (initial_bank != 0.0 && !(establish_duration > 0.0)) {
    throw UsageError("a nonzero initial bank needs a positive establish duration");
  }
  if (!(airspeed > 0.0)) throw UsageError("maneuver airspeed must be set and positive");
  if (!(air_density > 0.0)) throw UsageError("air density must be positive");
  if (std::abs(initial_bank) >= 80.0 || std::abs(final_bank) >= 80.0) {
    throw UsageError("bank angles must stay below 80 deg for a level turn");
  }
}

bool ManeuverSpec::is_certification() const {
  return std::abs(std::abs(final_bank - initial_bank) - 60.0) < 1e-12 && roll_duration <= 11.0;
}

double ManeuverSpec::reversal_start() const {
  return level_duration + establish_duration + hold_duration;
}

double ManeuverSpec::total_duration() const {
  return reversal_start() + roll_duration + final_hold_duration;
}

std::string to_string(EngineStatus s) {
  switch (s) {
    case EngineStatus::kNominal: return "nominal";
    case EngineStatus::kRightOut: return "right_out";
    case EngineStatus::kLeftOut: return "left_out";
  }
  return "unknown";
}

EngineStatus engine_status_from_string(const std::string& name) {
  for (auto s : {EngineStatus::kNominal, EngineStatus::kRightOut, EngineStatus::kLeftOut}) {
    if (to_string(s) == name) return s;
  }
  throw UsageError("unknown engine status '" + name + "' (nominal, right_out, left_out)");
}

void EngineConfig::validate() const {
  if (!(thrust_per_engine >= 0.0)) throw UsageError("engine thrust must be >= 0");
  if (!(lateral_arm > 0.0)) throw UsageError("engine lateral arm must be positive");
}

double EngineConfig::yaw_moment() const {
  switch (status) {
    case EngineStatus::kNominal: return 0.0;
    case EngineStatus::kRightOut: return thrust_per_engine * lateral_arm;
    case EngineStatus::kLeftOut: return -thrust_per_engine * lateral_arm;
  }
  return 0.0;
}

Kinematics bank_profile(const ManeuverSpec& spec, double t) {
  auto segment = [](double t0, double duration, double from, double to, double time) {
    const double tau = std::clamp((time - t0) / duration, 0.0, 1.0);
    const auto qn = quintic(tau);
    const double delta = (to - from) * kDeg;
    const bool inside = time > t0 && time < t0 + duration;
    return Kinematics{from * kDeg + delta * qn.s, inside ? delta * qn.ds / duration : 0.0,
                      inside ? delta * qn.dds / (duration * duration) : 0.0};
  };
  const double t_est = spec.level_duration;
  const double t_rev = spec.reversal_start();
  if (t <= t_est) return {};
  if (t < t_rev) {
    if (spec.establish_duration <= 0.0) return {spec.initial_bank * kDeg, 0.0, 0.0};
    return segment(t_est, spec.establish_duration, 0.0, spec.initial_bank, t);
  }
  return segment(t_rev, spec.roll_duration, spec.initial_bank, spec.final_bank, t);
}

Trajectory build_trajectory(const ManeuverSpec& spec) {
  spec.validate();
  const double total = spec.total_duration();
  const auto steps = static_cast<std::size_t>(std::ceil(total / spec.time_step - 1e-9));
  const double gv = kGravity / spec.airspeed;
  Trajectory tr;
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = k == steps ? total : static_cast<double>(k) * spec.time_step;
    const auto kin = bank_profile(spec, t);
    const double s = std::sin(kin.phi), c = std::cos(kin.phi);
    tr.time.push_back(t);
    tr.phi.push_back(kin.phi);
    tr.p.push_back(kin.phi_dot);
    tr.q.push_back(gv * s * s / c);
    tr.r.push_back(gv * s);
    tr.p_dot.push_back(kin.phi_ddot);
    tr.q_dot.push_back(gv * kin.phi_dot * s * (1.0 + 1.0 / (c * c)));
    tr.r_dot.push_back(gv * c * kin.phi_dot);
  }
  return tr;
}

RequiredMoments required_accelerations(const Trajectory& traj, const aero::Reference& ref) {
  RequiredMoments m;
  m.L.reserve(traj.size());
  m.M.reserve(traj.size());
  m.N.reserve(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    m.L.push_back(ref.ixx * traj.p_dot[k]);
    m.M.push_back(ref.iyy * traj.q_dot[k]);
    m.N.push_back(ref.izz * traj.r_dot[k]);
  }
  return m;
}

double solve_alpha(const aero::DatabaseSample& sample, double cl_target, double guess) {
  const aero::CoefficientKey cl{"C_L", std::nullopt};
  using V1 = Eigen::Matrix<double, 1, 1>;
  const std::function<V1(const V1&)> f = [&](const V1& a) {
    return V1(sample.eval(cl, a(0), 0.0) - cl_target);
  };
  const auto res = newton<1>(f, V1(guess), 1e-10, 100, 1e-3);
  if (!res.converged) {
    throw NumericalError("no angle of attack gives C_L = " + csv::format(cl_target) +
                         " (residual " + csv::format(res.residual) + ")");
  }
  return res.x(0);
}

TrimState trim(const aero::DatabaseSample& sample, double airspeed, double air_density) {
  if (!(airspeed > 0.0) || !(air_density > 0.0)) {
    throw UsageError("trim needs positive airspeed and air density");
  }
  const auto& ref = sample.reference();
  const double qbar = 0.5 * air_density * airspeed * airspeed;
  const double cl_req = ref.mass * kGravity / (qbar * ref.area);
  using V2 = Eigen::Vector2d;
  const std::function<V2(const V2&)> f = [&](const V2& x) {
    const aero::Deflections defl{{Surface::kElevator, x(1)}};
    return V2(aero::total_coefficient(sample, "C_L", x(0), 0.0, defl) - cl_req,
              aero::total_coefficient(sample, "C_m", x(0), 0.0, defl));
  };
  const double alpha0 = solve_alpha(sample, cl_req, 2.0);
  const auto res = newton<2>(f, V2(alpha0, 0.0), 1e-9, 100, 1e-3);
  if (!res.converged) {
    throw NumericalError("no trim found: residual " + csv::format(res.residual) + " at alpha " +
                         csv::format(res.x(0)) + " deg, elevator " + csv::format(res.x(1)) +
                         " deg");
  }
  // Linear extrapolation always finds a root; only one inside the tabulated
  // alpha and elevator ranges is a trim.
  const auto& alpha_axis = sample.surface({"C_L", std::nullopt}).axes().front();
  const double a = res.x(0), e = res.x(1);
  bool inside = a >= alpha_axis.front() && a <= alpha_axis.back();
  const aero::CoefficientKey elevator{"C_m", Surface::kElevator};
  if (sample.has(elevator)) {
    const auto& d = sample.surface(elevator).axes().back();
    inside = inside && e >= d.front() && e <= d.back();
  }
  if (!inside) {
    throw NumericalError("no trim inside the database domain: alpha " + csv::format(a) +
                         " deg, elevator " + csv::format(e) + " deg, residual " +
                         csv::format(res.residual));
  }
  return {a, e, res.residual, res.iterations};
}

Allocation allocate_controls(const Trajectory& traj, const RequiredMoments& moments,
                             const aero::DatabaseSample& sample, const EngineConfig& engines,
                             const TrimState& trim_state, const ManeuverSpec& spec) {
  engines.validate();
  const auto& ref = sample.reference();
  const double v = spec.airspeed;
  const double qbar = spec.dynamic_pressure();
  const double qsb = qbar * ref.area * ref.span;
  const double cl_level = ref.mass * kGravity / (qbar * ref.area);
  const double n_engine = engines.yaw_moment() / qsb;
  const double chord_ratio = ref.mac / ref.span;

  using K = aero::CoefficientKey;
  const K clp{"C_lp", std::nullopt}, clr{"C_lr", std::nullopt}, cmq{"C_mq", std::nullopt};
  const K cnp{"C_np", std::nullopt}, cnr{"C_nr", std::nullopt};

  Allocation out;
  const std::size_t n = traj.size();
  out.aileron.resize(n);
  out.elevator.resize(n);
  out.rudder.resize(n);
  out.alpha.resize(n);

  double alpha = trim_state.alpha;
  Eigen::Vector3d u(0.0, trim_state.elevator, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    alpha = solve_alpha(sample, cl_level / std::cos(traj.phi[k]), alpha);
    const double ph = traj.p[k] * ref.span / (2.0 * v);
    const double qh = traj.q[k] * ref.mac / (2.0 * v);
    const double rh = traj.r[k] * ref.span / (2.0 * v);
    const double damp_l = sample.eval(clp, alpha, 0.0) * ph + sample.eval(clr, alpha, 0.0) * rh;
    const double damp_m = sample.eval(cmq, alpha, 0.0) * qh;
    const double damp_n = sample.eval(cnp, alpha, 0.0) * ph + sample.eval(cnr, alpha, 0.0) * rh;
    const Eigen::Vector3d target(moments.L[k] / qsb, moments.M[k] / qsb, moments.N[k] / qsb);

    bool extrapolated = false;
    bool* flag = nullptr;
    const std::function<Eigen::Vector3d(const Eigen::Vector3d&)> f =
        [&](const Eigen::Vector3d& d) {
          const aero::Deflections defl{
              {Surface::kAileron, d(0)}, {Surface::kElevator, d(1)}, {Surface::kRudder, d(2)}};
          return Eigen::Vector3d(
              aero::total_coefficient(sample, "C_l", alpha, 0.0, defl, flag) + damp_l - target(0),
              chord_ratio * (aero::total_coefficient(sample, "C_m", alpha, 0.0, defl, flag) +
                             damp_m) -
                  target(1),
              aero::total_coefficient(sample, "C_n", alpha, 0.0, defl, flag) + damp_n + n_engine -
                  target(2));
        };
    const double tol = 1e-6 * target.norm() + 1e-9;
    const auto res = newton<3>(f, u, tol, 100, 1e-3);
    if (!res.converged) {
      throw NumericalError("control allocation did not converge at step " + std::to_string(k) +
                           " (t = " + csv::format(traj.time[k]) + " s, residual " +
                           csv::format(res.residual) + ")");
    }
    u = res.x;
    flag = &extrapolated;
    f(u);
    out.extrapolated = out.extrapolated || extrapolated;
    if (target.norm() > 0.0) {
      out.max_residual_ratio = std::max(out.max_residual_ratio, res.residual / target.norm());
    }
    out.aileron[k] = u(0);
    out.elevator[k] = u(1);
    out.rudder[k] = u(2);
    out.alpha[k] = alpha;
  }
  return out;
}

double saturation_metric(const std::vector<double>& history, double limit) {
  if (!(limit > 0.0)) throw UsageError("deflection limits must be positive");
  if (history.empty()) throw UsageError("deflection history is empty");
  double peak = 0.0;
  for (double d : history) peak = std::max(peak, std::abs(d));
  // (lim - peak) / lim rounds once, so exact inputs give exactly rounded metrics.
  return (limit - peak) / limit;
}

Metrics success_metrics(const std::vector<double>& aileron, const std::vector<double>& elevator,
                        const std::vector<double>& rudder, const Limits& limits) {
  return {saturation_metric(elevator, limits.elevator), saturation_metric(aileron, limits.aileron),
          saturation_metric(rudder, limits.rudder)};
}

SimConfig SimConfig::load(const std::string& path) { return from_json(read_json_file(path)); }

SimConfig SimConfig::from_json(const Json& j) {
  SimConfig c;
  try {
    if (!j.contains("maneuver")) throw UsageError("config is missing the 'maneuver' section");
    const auto& m = j.at("maneuver");
    c.maneuver.airspeed = require_number(m, "maneuver", "airspeed");
    c.maneuver.initial_bank = m.value("initial_bank", c.maneuver.initial_bank);
    c.maneuver.final_bank = m.value("final_bank", c.maneuver.final_bank);
    c.maneuver.roll_duration = m.value("roll_duration", c.maneuver.roll_duration);
    c.maneuver.level_duration = m.value("level_duration", c.maneuver.level_duration);
    c.maneuver.establish_duration = m.value("establish_duration", c.maneuver.establish_duration);
    c.maneuver.hold_duration = m.value("hold_duration", c.maneuver.hold_duration);
    c.maneuver.final_hold_duration =
        m.value("final_hold_duration", c.maneuver.final_hold_duration);
    c.maneuver.air_density = m.value("air_density", c.maneuver.air_density);
    c.maneuver.time_step = m.value("time_step", c.maneuver.time_step);
    if (j.contains("engines")) {
      const auto& e = j.at("engines");
      c.engines.thrust_per_engine = e.value("thrust_per_engine", c.engines.thrust_per_engine);
      c.engines.lateral_arm = e.value("lateral_arm", c.engines.lateral_arm);
      c.engines.status = engine_status_from_string(e.value("status", std::string("nominal")));
    }
    if (j.contains("limits")) {
      const auto& l = j.at("limits");
      c.limits.aileron = l.value("aileron", c.limits.aileron);
      c.limits.elevator = l.value("elevator", c.limits.elevator);
      c.limits.rudder = l.value("rudder", c.limits.rudder);
    }
  } catch (const Json::exception& e) {
    throw UsageError(std::string("malformed simulation config: ") + e.what());
  }
  c.maneuver.validate();
  c.engines.validate();
  for (double l : {c.limits.aileron, c.limits.elevator, c.limits.rudder}) {
    if (!(l > 0.0)) throw UsageError("deflection limits must be positive");
  }
  return c;
}

Json SimConfig::to_json() const {
  const auto& m = maneuver;
  return Json{{"maneuver",
               {{"initial_bank", m.initial_bank},
                {"final_bank", m.final_bank},
                {"roll_duration", m.roll_duration},
                {"level_duration", m.level_duration},
                {"establish_duration", m.establish_duration},
                {"hold_duration", m.hold_duration},
                {"final_hold_duration", m.final_hold_duration},
                {"airspeed", m.airspeed},
                {"air_density", m.air_density},
                {"time_step", m.time_step}}},
              {"engines",
               {{"thrust_per_engine", engines.thrust_per_engine},
                {"lateral_arm", engines.lateral_arm},
                {"status", sim::to_string(engines.status)}}},
              {"limits",
               {{"aileron", limits.aileron}, {"elevator", limits.elevator},
                {"rudder", limits.rudder}}}};
}

SimResult simulate(const aero::DatabaseSample& sample, const SimConfig& config) {
  SimResult out;
  try {
    out.trim_state = trim(sample, config.maneuver.airspeed, config.maneuver.air_density);
    out.trajectory = build_trajectory(config.maneuver);
    out.moments = required_accelerations(out.trajectory, sample.reference());
    out.allocation = allocate_controls(out.trajectory, out.moments, sample, config.engines,
                                       out.trim_state, config.maneuver);
    out.extrapolated = out.allocation.extrapolated;
    out.metrics = success_metrics(out.allocation.aileron, out.allocation.elevator,
                                  out.allocation.rudder, config.limits);
  } catch (const NumericalError& e) {
    out.status = SimStatus::kFailedToSimulate;
    out.failure = e.what();
  }
  return out;
}

void write_history(const std::string& path, const SimResult& result) {
  csv::Table t;
  t.header = {"time", "phi_deg", "p_dot", "q_dot", "r_dot", "L",       "M",
              "N",    "alpha",   "delta_a", "delta_e", "delta_r"};
  const auto& tr = result.trajectory;
  const auto& a = result.allocation;
  for (std::size_t k = 0; k < a.aileron.size(); ++k) {
    t.rows.push_back({tr.time[k], tr.phi[k] / kDeg, tr.p_dot[k], tr.q_dot[k], tr.r_dot[k],
                      result.moments.L[k], result.moments.M[k], result.moments.N[k], a.alpha[k],
                      a.aileron[k], a.elevator[k], a.rudder[k]});
  }
  csv::write(path, t);
}

Json summary_json(const SimResult& r) {
  Json j;
  j["status"] = r.status == SimStatus::kOk ? "ok" : "failed_to_simulate";
  if (r.status != SimStatus::kOk) {
    j["failure"] = r.failure;
    return j;
  }
  j["rho_pitch"] = r.metrics.pitch;
  j["rho_roll"] = r.metrics.roll;
  j["rho_yaw"] = r.metrics.yaw;
  j["success"] = r.metrics.success();
  j["alpha_trim"] = r.trim_state.alpha;
  j["elevator_trim"] = r.trim_state.elevator;
  j["extrapolated"] = r.extrapolated;
  return j;
}

}  // namespace mfdb::sim

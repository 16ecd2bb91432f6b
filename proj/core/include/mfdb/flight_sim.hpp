#pragma once

#include <string>
#include <vector>

#include "mfdb/aero_db.hpp"

namespace mfdb::sim {

inline constexpr double kGravity = 9.80665;

/// Bank-angle reversal maneuver with its lead-in. Angles in degrees, times in
/// seconds, airspeed in m/s.
struct ManeuverSpec {
  double initial_bank = 30.0;
  double final_bank = -30.0;
  double roll_duration = 11.0;
  double level_duration = 1.0;       // wings-level hold before anything happens
  double establish_duration = 12.0;  // roll from 0 to initial_bank
  double hold_duration = 3.0;        // stabilize at initial_bank
  double final_hold_duration = 3.0;  // stabilize at final_bank
  double airspeed = 0.0;             // required
  double air_density = 1.225;
  double time_step = 0.05;

  /// Throws UsageError on nonpositive durations, time step or airspeed.
  void validate() const;
  /// True for the 60 deg reversal in no more than 11 s.
  bool is_certification() const;
  double reversal_start() const;
  double total_duration() const;
  double dynamic_pressure() const { return 0.5 * air_density * airspeed * airspeed; }
};

enum class EngineStatus { kNominal, kRightOut, kLeftOut };
std::string to_string(EngineStatus s);
EngineStatus engine_status_from_string(const std::string& name);

struct EngineConfig {
  double thrust_per_engine = 50000.0;  // N
  double lateral_arm = 1.5;            // m
  EngineStatus status = EngineStatus::kNominal;

  void validate() const;
  /// Yawing moment from asymmetric thrust, N m (positive nose right).
  double yaw_moment() const;
};

/// Deflection limits in degrees.
struct Limits {
  double aileron = 25.0;
  double elevator = 20.0;
  double rudder = 30.0;

  static Limits original() { return {25.0, 20.0, 30.0}; }
  static Limits reduced() { return {15.0, 20.0, 20.0}; }
};

struct Kinematics {
  double phi = 0.0;  // rad
  double phi_dot = 0.0;
  double phi_ddot = 0.0;
};

/// Bank angle and its first two derivatives at time t.
Kinematics bank_profile(const ManeuverSpec& spec, double t);

/// Time histories along the maneuver (angles in rad, rates in rad/s).
struct Trajectory {
  std::vector<double> time;
  std::vector<double> phi, p, q, r;
  std::vector<double> p_dot, q_dot, r_dot;

  std::size_t size() const { return time.size(); }
};

/// Quintic bank segments; pitch and yaw rates of a level coordinated turn.
Trajectory build_trajectory(const ManeuverSpec& spec);

struct RequiredMoments {
  std::vector<double> L, M, N;  // N m
};

/// L = Ixx p_dot, M = Iyy q_dot, N = Izz r_dot.
RequiredMoments required_accelerations(const Trajectory& traj, const aero::Reference& ref);

struct TrimState {
  double alpha = 0.0;     // deg
  double elevator = 0.0;  // deg
  double residual = 0.0;
  int iterations = 0;
};

/// Solves {C_L = W / (qbar S), C_m total = 0} at beta = 0 by damped Newton.
/// Throws NumericalError when the root lies outside the tabulated alpha or
/// elevator range.
TrimState trim(const aero::DatabaseSample& sample, double airspeed, double air_density);

/// Angle of attack (deg) with C_L(alpha, 0) = target, Newton from `guess`.
double solve_alpha(const aero::DatabaseSample& sample, double cl_target, double guess);

struct Allocation {
  std::vector<double> aileron, elevator, rudder;  // deg
  std::vector<double> alpha;                       // deg
  double max_residual_ratio = 0.0;
  bool extrapolated = false;
};

/// Per-step 3x3 Newton solve of the moment balance, warm-started from the
/// previous step. Throws NumericalError naming the step that did not converge.
Allocation allocate_controls(const Trajectory& traj, const RequiredMoments& moments,
                             const aero::DatabaseSample& sample, const EngineConfig& engines,
                             const TrimState& trim_state, const ManeuverSpec& spec);

struct Metrics {
  double pitch = 1.0;
  double roll = 1.0;
  double yaw = 1.0;

  /// A maneuver succeeds when every metric is strictly positive.
  bool success() const { return pitch > 0.0 && roll > 0.0 && yaw > 0.0; }
};

/// 1 - max|delta| / limit per axis.
double saturation_metric(const std::vector<double>& history, double limit);
Metrics success_metrics(const std::vector<double>& aileron, const std::vector<double>& elevator,
                        const std::vector<double>& rudder, const Limits& limits);

struct SimConfig {
  ManeuverSpec maneuver;
  EngineConfig engines;
  Limits limits;

  static SimConfig load(const std::string& path);
  static SimConfig from_json(const Json& j);
  Json to_json() const;
};

enum class SimStatus { kOk, kFailedToSimulate };

struct SimResult {
  SimStatus status = SimStatus::kOk;
  std::string failure;
  Trajectory trajectory;
  RequiredMoments moments;
  Allocation allocation;
  TrimState trim_state;
  Metrics metrics;
  bool extrapolated = false;
};

/// trim -> trajectory -> accelerations -> allocation -> metrics. Numerical
/// failures mark the result failed-to-simulate instead of throwing.
SimResult simulate(const aero::DatabaseSample& sample, const SimConfig& config);

/// Time histories: time, phi_deg, p_dot, q_dot, r_dot, L, M, N, alpha,
/// delta_a, delta_e, delta_r.
void write_history(const std::string& path, const SimResult& result);
Json summary_json(const SimResult& result);

}  // namespace mfdb::sim

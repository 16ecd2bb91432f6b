#include <algorithm>
#include <cmath>
#include <functional>

#include <gtest/gtest.h>

#include "mfdb/error.hpp"
#include "mfdb/flight_sim.hpp"
#include "synthetic.hpp"

using namespace mfdb;
using namespace mfdb::sim;
namespace synth = mfdb::testing;

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

GridSurface tabulate(const std::vector<std::vector<double>>& axes,
                     const std::function<double(const Eigen::RowVectorXd&)>& f) {
  const auto nodes = GridSurface::nodes(axes);
  std::vector<double> v;
  for (Eigen::Index i = 0; i < nodes.rows(); ++i) v.push_back(f(nodes.row(i)));
  return GridSurface(axes, std::move(v));
}

// C_L = 0.1 alpha, C_m = -0.02 alpha + 0.01 delta_e, with a mass chosen so
// that W / (qbar S) = 0.5 at 80 m/s.
aero::DatabaseSample linear_trim_sample() {
  aero::Reference ref;
  const double qbar = 0.5 * 1.225 * 80.0 * 80.0;
  ref.mass = 0.5 * qbar * ref.area / kGravity;
  const std::vector<double> alpha{-4, 0, 10, 25}, beta{-5, 0, 5}, delta{-20, 0, 20};
  std::map<std::string, GridSurface> s;
  s["C_L"] = tabulate({alpha, beta}, [](const auto& x) { return 0.1 * x(0); });
  s["C_m"] = tabulate({alpha, beta}, [](const auto& x) { return -0.02 * x(0); });
  s["C_m:elevator"] = tabulate({alpha, delta}, [](const auto& x) { return 0.01 * x(1); });
  return aero::DatabaseSample(0, ref, std::move(s));
}

ManeuverSpec null_maneuver() {
  ManeuverSpec m;
  m.initial_bank = 0.0;
  m.final_bank = 0.0;
  m.establish_duration = 0.0;
  m.airspeed = 80.0;
  m.time_step = 0.5;
  return m;
}

const aero::DatabaseSample& mean_sample() {
  static const auto s = aero::DatabaseSampler(synth::synthetic_database()).mean();
  return s;
}

}  // namespace

TEST(Maneuver, PhaseTimesAndValidation) {
  ManeuverSpec m;
  m.airspeed = 80.0;
  EXPECT_DOUBLE_EQ(m.reversal_start(), 16.0);
  EXPECT_DOUBLE_EQ(m.total_duration(), 30.0);
  EXPECT_TRUE(m.is_certification());
  m.roll_duration = 12.0;
  EXPECT_FALSE(m.is_certification());
  m.airspeed = 0.0;
  EXPECT_THROW(m.validate(), UsageError);
  m.airspeed = 80.0;
  m.time_step = 0.0;
  EXPECT_THROW(m.validate(), UsageError);
  m.time_step = 0.1;
  m.final_bank = -85.0;
  EXPECT_THROW(m.validate(), UsageError);
}

TEST(Maneuver, BankProfileHitsEveryPhaseBoundary) {
  ManeuverSpec m;
  m.airspeed = 80.0;
  EXPECT_EQ(bank_profile(m, 0.5).phi, 0.0);
  EXPECT_NEAR(bank_profile(m, 16.0).phi, 30.0 * kDeg, 1e-15);
  EXPECT_NEAR(bank_profile(m, 21.5).phi, 0.0, 1e-15);
  EXPECT_NEAR(bank_profile(m, 27.0).phi, -30.0 * kDeg, 1e-15);
  EXPECT_NEAR(bank_profile(m, 29.0).phi, -30.0 * kDeg, 1e-15);
  for (double t : {1.0, 13.0, 16.0, 27.0}) {
    EXPECT_EQ(bank_profile(m, t).phi_dot, 0.0) << t;
    EXPECT_EQ(bank_profile(m, t).phi_ddot, 0.0) << t;
  }
}

TEST(Maneuver, QuinticRateAndAccelerationPeaks) {
  ManeuverSpec m;
  m.airspeed = 80.0;
  const double span = 60.0 * kDeg, T = 11.0;
  EXPECT_NEAR(bank_profile(m, 21.5).phi_dot, -1.875 * span / T, 1e-12);
  double peak = 0.0;
  for (int i = 0; i <= 110000; ++i) {
    peak = std::max(peak, std::abs(bank_profile(m, 16.0 + T * i / 110000.0).phi_ddot));
  }
  EXPECT_NEAR(peak, 10.0 / std::sqrt(3.0) * span / (T * T), 1e-9);
}

TEST(Trajectory, CoordinatedTurnRates) {
  ManeuverSpec m;
  m.airspeed = 80.0;
  m.time_step = 0.1;
  const auto tr = build_trajectory(m);
  EXPECT_EQ(tr.size(), 301u);
  EXPECT_DOUBLE_EQ(tr.time.back(), 30.0);
  const std::size_t k = 160;  // t = 16 s, steady 30 deg bank
  EXPECT_NEAR(tr.r[k], kGravity / 80.0 * 0.5, 1e-12);
  EXPECT_NEAR(tr.q[k], kGravity / 80.0 * 0.25 / std::cos(30.0 * kDeg), 1e-12);
  EXPECT_EQ(tr.p[0], 0.0);
  EXPECT_EQ(tr.r[0], 0.0);
}

TEST(Trajectory, RateDerivativesMatchFiniteDifferences) {
  ManeuverSpec m;
  m.airspeed = 80.0;
  m.time_step = 1e-3;
  const auto tr = build_trajectory(m);
  for (std::size_t k = 1000; k + 1 < tr.size(); k += 997) {
    EXPECT_NEAR((tr.q[k + 1] - tr.q[k - 1]) / 2e-3, tr.q_dot[k], 1e-5) << k;
    EXPECT_NEAR((tr.r[k + 1] - tr.r[k - 1]) / 2e-3, tr.r_dot[k], 1e-5) << k;
    EXPECT_NEAR((tr.p[k + 1] - tr.p[k - 1]) / 2e-3, tr.p_dot[k], 1e-5) << k;
  }
}

TEST(Moments, InertiaTimesAcceleration) {
  Trajectory tr;
  tr.time = {0.0};
  tr.phi = tr.p = tr.q = tr.r = {0.0};
  tr.p_dot = {0.1};
  tr.q_dot = {0.2};
  tr.r_dot = {-0.1};
  const auto m = required_accelerations(tr, aero::Reference{});
  EXPECT_NEAR(m.L[0], 23841.9, 1e-9);
  EXPECT_NEAR(m.M[0], 302124.8, 1e-9);
  EXPECT_NEAR(m.N[0], -171753.9, 1e-9);
}

TEST(Trim, LinearAircraft) {
  const auto t = trim(linear_trim_sample(), 80.0, 1.225);
  EXPECT_NEAR(t.alpha, 5.0, 1e-8);
  EXPECT_NEAR(t.elevator, 10.0, 1e-8);
  EXPECT_LE(t.residual, 1e-9);
  EXPECT_NEAR(solve_alpha(linear_trim_sample(), 0.7, 0.0), 7.0, 1e-9);
  EXPECT_THROW(trim(linear_trim_sample(), 0.0, 1.225), UsageError);
}

TEST(Trim, WeightlessAircraftTrimsAtZeroLift) {
  auto sample = linear_trim_sample();
  auto ref = sample.reference();
  ref.mass = 0.0;
  const auto t = trim(aero::DatabaseSample(0, ref, sample.surfaces()), 80.0, 1.225);
  EXPECT_NEAR(t.alpha, 0.0, 1e-9);
  EXPECT_NEAR(t.elevator, 0.0, 1e-9);
}

TEST(Trim, RootOutsideTheDatabaseIsNumericalFailure) {
  // At 20 m/s the lift coefficient needed is 8, i.e. alpha = 80 deg.
  EXPECT_THROW(trim(linear_trim_sample(), 20.0, 1.225), NumericalError);
  SimConfig c;
  c.maneuver = null_maneuver();
  c.maneuver.airspeed = 20.0;
  EXPECT_EQ(simulate(linear_trim_sample(), c).status, SimStatus::kFailedToSimulate);
}

TEST(Trim, UnreachableLiftIsNumericalFailure) {
  auto sample = linear_trim_sample();
  auto surfaces = sample.surfaces();
  surfaces["C_L"] = tabulate({{-4, 25}, {-5, 5}}, [](const auto&) { return 0.0; });
  const aero::DatabaseSample flat(0, sample.reference(), surfaces);
  EXPECT_THROW(trim(flat, 80.0, 1.225), NumericalError);
  SimConfig c;
  c.maneuver = null_maneuver();
  const auto r = simulate(flat, c);
  EXPECT_EQ(r.status, SimStatus::kFailedToSimulate);
  EXPECT_FALSE(r.failure.empty());
  EXPECT_EQ(summary_json(r).at("status"), "failed_to_simulate");
}

TEST(Engines, YawMomentSign) {
  EngineConfig e;
  EXPECT_EQ(e.yaw_moment(), 0.0);
  e.status = EngineStatus::kRightOut;
  EXPECT_DOUBLE_EQ(e.yaw_moment(), 75000.0);
  e.status = EngineStatus::kLeftOut;
  EXPECT_DOUBLE_EQ(e.yaw_moment(), -75000.0);
  EXPECT_EQ(engine_status_from_string("right_out"), EngineStatus::kRightOut);
  EXPECT_THROW(engine_status_from_string("both_out"), UsageError);
  e.lateral_arm = 0.0;
  EXPECT_THROW(e.validate(), UsageError);
}

TEST(Metrics, SaturationMetric) {
  EXPECT_NEAR(saturation_metric({0.0, 12.0, -34.0, 20.0}, 25.0), -0.36, 1e-15);
  EXPECT_EQ(saturation_metric({0.0, 0.0, 0.0}, 15.0), 1.0);
  EXPECT_EQ(saturation_metric({3.0, -15.0}, 15.0), 0.0);
  EXPECT_THROW(saturation_metric({}, 15.0), UsageError);
  EXPECT_THROW(saturation_metric({1.0}, 0.0), UsageError);
  const auto m = success_metrics({1.0}, {2.0}, {-40.0}, Limits::original());
  EXPECT_DOUBLE_EQ(m.roll, 0.96);
  EXPECT_DOUBLE_EQ(m.pitch, 0.9);
  EXPECT_LT(m.yaw, 0.0);
  EXPECT_FALSE(m.success());
  EXPECT_FALSE((Metrics{1.0, 0.0, 1.0}).success());
  EXPECT_TRUE((Metrics{1.0, 1e-9, 1.0}).success());
}

TEST(Simulation, NullManeuverNeedsNoLateralControl) {
  SimConfig c = synth::synthetic_config();
  c.maneuver = null_maneuver();
  const auto r = simulate(mean_sample(), c);
  ASSERT_EQ(r.status, SimStatus::kOk) << r.failure;
  for (std::size_t k = 0; k < r.allocation.aileron.size(); ++k) {
    EXPECT_NEAR(r.allocation.aileron[k], 0.0, 1e-9);
    EXPECT_NEAR(r.allocation.rudder[k], 0.0, 1e-9);
    EXPECT_NEAR(r.allocation.elevator[k], r.trim_state.elevator, 1e-6);
  }
  EXPECT_NEAR(r.metrics.roll, 1.0, 1e-9);
  EXPECT_NEAR(r.metrics.yaw, 1.0, 1e-9);
}

TEST(Simulation, EngineOutNeedsSteadyRudder) {
  SimConfig c = synth::synthetic_config();
  c.maneuver = null_maneuver();
  c.engines.status = EngineStatus::kRightOut;
  const auto r = simulate(mean_sample(), c);
  ASSERT_EQ(r.status, SimStatus::kOk) << r.failure;
  const auto& rudder = r.allocation.rudder;
  EXPECT_GT(std::abs(rudder.front()), 0.1);
  for (double d : rudder) EXPECT_NEAR(d, rudder.front(), 1e-6);
  c.engines.status = EngineStatus::kLeftOut;
  const auto l = simulate(mean_sample(), c);
  EXPECT_NEAR(l.allocation.rudder.front(), -rudder.front(), 1e-6);
}

TEST(Simulation, ReversalIsMirrorSymmetric) {
  SimConfig c = synth::synthetic_config(0.25);
  const auto a = simulate(mean_sample(), c);
  std::swap(c.maneuver.initial_bank, c.maneuver.final_bank);
  const auto b = simulate(mean_sample(), c);
  ASSERT_EQ(a.status, SimStatus::kOk) << a.failure;
  ASSERT_EQ(b.status, SimStatus::kOk) << b.failure;
  for (std::size_t k = 0; k < a.allocation.aileron.size(); ++k) {
    EXPECT_NEAR(a.allocation.aileron[k], -b.allocation.aileron[k], 1e-6) << k;
    EXPECT_NEAR(a.allocation.rudder[k], -b.allocation.rudder[k], 1e-6) << k;
    EXPECT_NEAR(a.allocation.elevator[k], b.allocation.elevator[k], 1e-6) << k;
  }
  EXPECT_NEAR(a.metrics.roll, b.metrics.roll, 1e-6);
}

TEST(Simulation, DeterministicAndReducedLimitsAreTighter) {
  SimConfig c = synth::synthetic_config(0.25);
  c.engines.status = EngineStatus::kRightOut;
  const auto a = simulate(mean_sample(), c);
  const auto b = simulate(mean_sample(), c);
  ASSERT_EQ(a.status, SimStatus::kOk) << a.failure;
  EXPECT_EQ(a.allocation.aileron, b.allocation.aileron);
  EXPECT_EQ(a.allocation.rudder, b.allocation.rudder);
  c.limits = Limits::original();
  const auto o = simulate(mean_sample(), c);
  EXPECT_EQ(o.allocation.aileron, a.allocation.aileron);
  EXPECT_LT(a.metrics.roll, o.metrics.roll);
  EXPECT_LT(a.metrics.yaw, o.metrics.yaw);
  EXPECT_EQ(a.metrics.pitch, o.metrics.pitch);
  EXPECT_LT(a.allocation.max_residual_ratio, 1e-5);
  EXPECT_FALSE(a.extrapolated);
}

TEST(Config, JsonRoundTripAndErrors) {
  SimConfig c = synth::synthetic_config();
  c.engines.status = EngineStatus::kLeftOut;
  const auto back = SimConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  EXPECT_THROW(SimConfig::from_json(Json{{"engines", Json::object()}}), UsageError);
  EXPECT_THROW(SimConfig::from_json(Json{{"maneuver", {{"initial_bank", 30}}}}), UsageError);
  auto j = c.to_json();
  j["limits"]["rudder"] = 0.0;
  EXPECT_THROW(SimConfig::from_json(j), UsageError);
  j = c.to_json();
  j["maneuver"]["airspeed"] = "fast";
  EXPECT_THROW(SimConfig::from_json(j), UsageError);
}

#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "mfdb/csv.hpp"
#include "mfdb/error.hpp"
#include "mfdb/monte_carlo.hpp"
#include "synthetic.hpp"

using namespace mfdb;
using namespace mfdb::mc;
namespace fs = std::filesystem;
namespace synth = mfdb::testing;

namespace {

const aero::DatabaseSampler& noisy_sampler() {
  static const aero::DatabaseSampler s([] {
    synth::SyntheticOptions opt;
    opt.aileron_noise = 2e-3;
    return synth::synthetic_database(opt);
  }());
  return s;
}

}  // namespace

TEST(Cdf, StepFunctionAndQuantiles) {
  const EmpiricalCDF cdf({0.3, -0.1, 0.2, 0.1});
  EXPECT_EQ(cdf.sorted(), (std::vector<double>{-0.1, 0.1, 0.2, 0.3}));
  EXPECT_EQ(cdf(-0.2), 0.0);
  EXPECT_EQ(cdf(-0.1), 0.25);
  EXPECT_EQ(cdf(0.15), 0.5);
  EXPECT_EQ(cdf(0.3), 1.0);
  EXPECT_EQ(cdf.quantile(0.0), -0.1);
  EXPECT_EQ(cdf.quantile(0.25), -0.1);
  EXPECT_EQ(cdf.quantile(0.26), 0.1);
  EXPECT_EQ(cdf.quantile(1.0), 0.3);
  EXPECT_THROW(cdf.quantile(1.5), UsageError);
  EXPECT_THROW(EmpiricalCDF({}), DataError);
  EXPECT_THROW(EmpiricalCDF({0.1, std::nan("")}), DataError);
}

TEST(Cdf, QuantileGuardsRoundingOfTheLevel) {
  std::vector<double> v;
  for (int i = 1; i <= 1000; ++i) v.push_back(i);
  const EmpiricalCDF cdf(v);
  EXPECT_EQ(cdf.quantile(1.0 - 0.95), 50.0);
  EXPECT_EQ(cdf.quantile(0.5), 500.0);
}

TEST(Cdf, IsMonotoneAndConsistentWithQuantiles) {
  std::vector<double> v;
  for (int i = 0; i < 97; ++i) v.push_back(std::sin(0.7 * i));
  const EmpiricalCDF cdf(v);
  double prev = 0.0;
  for (double x = -1.1; x <= 1.1; x += 0.01) {
    EXPECT_GE(cdf(x), prev);
    prev = cdf(x);
  }
  for (double p = 0.01; p <= 1.0; p += 0.01) EXPECT_GE(cdf(cdf.quantile(p)), p - 1e-9);
}

TEST(Rates, FailureAndSuccess) {
  const std::vector<double> v{-0.1, 0.2, 0.3, -0.05};
  EXPECT_EQ(failure_rate(v), 0.5);
  EXPECT_EQ(success_rate(v), 0.5);
  EXPECT_EQ(failure_rate({0.0, 0.1}), 0.0);
  EXPECT_THROW(failure_rate({}), DataError);
}

TEST(Trace, WelfordMatchesTwoPassStatistics) {
  const auto two = convergence_trace({0.0, 2.0});
  EXPECT_TRUE(std::isnan(two[0].variance));
  EXPECT_EQ(two[0].mean, 0.0);
  EXPECT_EQ(two[1].variance, 2.0);
  EXPECT_EQ(two[1].mean, 1.0);
  EXPECT_THROW(convergence_trace({1.0}), DataError);

  std::vector<double> v;
  for (int i = 0; i < 50; ++i) v.push_back(1e6 + std::cos(1.3 * i));
  const auto t = convergence_trace(v);
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= v.size();
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  EXPECT_NEAR(t.back().mean, mean, 1e-9);
  EXPECT_NEAR(t.back().variance, ss / 49.0, 1e-9);
  EXPECT_EQ(t.back().count, 50u);

  const auto s = summarize(v);
  EXPECT_EQ(s.mean, t.back().mean);
  EXPECT_TRUE(std::isnan(summarize({0.4}).variance));
}

TEST(Design, BoundariesAndFormula) {
  const EmpiricalCDF cdf({-0.2, 0.1, 0.4, 0.6});
  const auto most = design_deflection(cdf, 1.0, 15.0);
  EXPECT_EQ(most.quantile, -0.2);
  EXPECT_DOUBLE_EQ(most.deflection, 18.0);
  const auto least = design_deflection(cdf, 0.0, 15.0);
  EXPECT_EQ(least.quantile, 0.6);
  EXPECT_DOUBLE_EQ(least.deflection, 6.0);
  const auto half = design_deflection(cdf, 0.5, 10.0);
  EXPECT_EQ(half.quantile, 0.1);
  EXPECT_DOUBLE_EQ(half.deflection, 9.0);
  EXPECT_EQ(design_deflection(EmpiricalCDF({0.0}), 0.9, 12.0).deflection, 12.0);
  EXPECT_THROW(design_deflection(cdf, 1.1, 15.0), UsageError);
  EXPECT_THROW(design_deflection(cdf, 0.5, 0.0), UsageError);
}

TEST(Design, DeflectionDecreasesWithRequiredSuccess) {
  std::vector<double> v;
  for (int i = 0; i < 200; ++i) v.push_back(0.5 * std::sin(2.1 * i));
  const EmpiricalCDF cdf(v);
  double prev = design_deflection(cdf, 0.0, 20.0).deflection;
  for (double x = 0.05; x <= 1.0; x += 0.05) {
    const double d = design_deflection(cdf, x, 20.0).deflection;
    EXPECT_GE(d, prev);
    prev = d;
  }
}

TEST(Run, ResultsDoNotDependOnJobs) {
  const auto cfg = synth::synthetic_config(0.5);
  const auto a = run(noisy_sampler(), cfg, 6, 31, 1);
  const auto b = run(noisy_sampler(), cfg, 6, 31, 3);
  ASSERT_EQ(a.samples.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(a.samples[i].index, i);
    EXPECT_EQ(a.samples[i].metrics.roll, b.samples[i].metrics.roll);
    EXPECT_EQ(a.samples[i].metrics.yaw, b.samples[i].metrics.yaw);
  }
  EXPECT_NE(a.samples[0].metrics.roll, a.samples[1].metrics.roll);
  EXPECT_EQ(a.simulated(), 6u);
  EXPECT_THROW(run(noisy_sampler(), cfg, 0, 31), UsageError);
}

TEST(Run, SingleSampleMatchesDirectSimulation) {
  const auto cfg = synth::synthetic_config(0.5);
  const auto r = run(noisy_sampler(), cfg, 1, 8);
  const auto direct = sim::simulate(noisy_sampler().draw(8, 0), cfg);
  EXPECT_EQ(r.samples[0].metrics.roll, direct.metrics.roll);
  EXPECT_EQ(r.metric(Axis::kRoll).size(), 1u);
  EXPECT_TRUE(std::isnan(summarize(r.metric(Axis::kRoll)).variance));
}

TEST(Run, ZeroUncertaintyEnsembleIsDegenerate) {
  const auto cfg = synth::synthetic_config(0.5);
  const auto r = run(synth::zero_uncertainty_database(), cfg, 4, 5);
  ASSERT_EQ(r.simulated(), 4u);
  // Only the covariance nugget separates the samples.
  for (auto axis : {Axis::kPitch, Axis::kRoll, Axis::kYaw}) {
    const auto m = r.metric(axis);
    for (double v : m) EXPECT_NEAR(v, m[0], 1e-4) << to_string(axis);
  }
}

TEST(Run, DesignDeflectionMeetsItsSuccessRate) {
  auto cfg = synth::synthetic_config(0.5);
  cfg.limits.aileron = 6.0;
  const std::size_t n = 40;
  const auto first = run(noisy_sampler(), cfg, n, 12);
  const double x = 0.9;
  const auto q = design_deflection(EmpiricalCDF(first.metric(Axis::kRoll)), x, cfg.limits.aileron);
  cfg.limits.aileron = q.deflection;
  const auto again = run(noisy_sampler(), cfg, n, 12);
  const double se = std::sqrt(x * (1.0 - x) / static_cast<double>(n));
  EXPECT_LE(failure_rate(again.metric(Axis::kRoll)), (1.0 - x) + 2.0 * se);
}

TEST(Run, IncompleteDatabaseIsRejected) {
  aero::DatabaseModel db;
  EXPECT_THROW(run(db, synth::synthetic_config(), 1, 1), DataError);
}

TEST(Files, WritersRoundTrip) {
  const auto dir = fs::temp_directory_path() / "mfdb_mc_files";
  fs::remove_all(dir);
  fs::create_directories(dir);
  MCRun r;
  r.seed = 3;
  for (std::uint64_t i = 0; i < 3; ++i) {
    SampleOutcome o;
    o.index = i;
    o.metrics = {0.5, std::vector<double>{-0.05, 0.05, 0.15}[i], 0.7};
    r.samples.push_back(o);
  }
  r.samples[1].status = sim::SimStatus::kFailedToSimulate;
  EXPECT_EQ(r.failed_to_simulate(), 1u);
  EXPECT_EQ(r.metric(Axis::kRoll), (std::vector<double>{-0.05, 0.15}));

  write_metrics((dir / "m.csv").string(), r);
  const auto m = csv::read((dir / "m.csv").string());
  ASSERT_EQ(m.rows.size(), 3u);
  EXPECT_TRUE(std::isnan(m.rows[1][m.column("rho_roll")]));
  EXPECT_EQ(m.rows[1][m.column("status")], 1.0);

  const EmpiricalCDF cdf(r.metric(Axis::kRoll));
  write_cdf((dir / "c.csv").string(), cdf);
  // CSVs carry 12 significant digits.
  const auto back = read_cdf((dir / "c.csv").string()).sorted();
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_NEAR(back[i], cdf.sorted()[i], 1e-13);

  write_convergence((dir / "v.csv").string(), r);
  const auto v = csv::read((dir / "v.csv").string());
  ASSERT_EQ(v.rows.size(), 2u);
  EXPECT_NEAR(v.rows[1][v.column("mean_roll")], 0.05, 1e-15);
  fs::remove_all(dir);
}

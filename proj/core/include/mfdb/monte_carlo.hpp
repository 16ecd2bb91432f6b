#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfdb/aero_db.hpp"
#include "mfdb/flight_sim.hpp"

namespace mfdb::mc {

enum class Axis { kPitch, kRoll, kYaw };
std::string to_string(Axis a);

struct SampleOutcome {
  std::uint64_t index = 0;
  sim::SimStatus status = sim::SimStatus::kOk;
  sim::Metrics metrics;
  bool extrapolated = false;
  std::string failure;
};

/// Outcomes in sample-index order, independent of scheduling.
struct MCRun {
  std::uint64_t seed = 0;
  std::vector<SampleOutcome> samples;

  /// Metric values of the successfully simulated samples.
  std::vector<double> metric(Axis axis) const;
  std::size_t failed_to_simulate() const;
  std::size_t simulated() const { return samples.size() - failed_to_simulate(); }
};

/// Simulates samples 0..n-1 of the database stream for `seed`. `jobs` > 1
/// runs samples on worker threads; results do not depend on it.
MCRun run(const aero::DatabaseSampler& sampler, const sim::SimConfig& config, std::size_t n,
          std::uint64_t seed, int jobs = 1);
MCRun run(const aero::DatabaseModel& db, const sim::SimConfig& config, std::size_t n,
          std::uint64_t seed, int jobs = 1);

/// Right-continuous empirical distribution function.
class EmpiricalCDF {
 public:
  explicit EmpiricalCDF(std::vector<double> values);

  /// Fraction of values <= x.
  double operator()(double x) const;
  /// Lower empirical quantile: order statistic ceil(p N), at least the first.
  double quantile(double p) const;
  const std::vector<double>& sorted() const { return sorted_; }
  std::size_t size() const { return sorted_.size(); }

 private:
  std::vector<double> sorted_;
};

/// Fraction of values strictly below zero.
double failure_rate(const std::vector<double>& values);
double success_rate(const std::vector<double>& values);

struct TracePoint {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased; NaN for a single value
};

/// Running mean and variance by Welford's recurrence.
std::vector<TracePoint> convergence_trace(const std::vector<double>& values);

struct DesignQuery {
  double success_rate = 1.0;
  double limit = 0.0;
  double quantile = 0.0;
  double deflection = 0.0;
};

/// rho^x = (1 - x) quantile of the metric CDF; delta^x = limit (1 - rho^x).
DesignQuery design_deflection(const EmpiricalCDF& cdf, double x, double limit);

struct MetricSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double failure_rate = 0.0;
};
MetricSummary summarize(const std::vector<double>& values);

/// CSV writers used by the CLI.
void write_metrics(const std::string& path, const MCRun& run);
void write_cdf(const std::string& path, const EmpiricalCDF& cdf);
EmpiricalCDF read_cdf(const std::string& path);
void write_convergence(const std::string& path, const MCRun& run);

}  // namespace mfdb::mc

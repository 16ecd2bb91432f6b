#include "mfdb/monte_carlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "mfdb/csv.hpp"
#include "mfdb/error.hpp"

namespace mfdb::mc {

namespace {

double pick(const sim::Metrics& m, Axis a) {
  switch (a) {
    case Axis::kPitch: return m.pitch;
    case Axis::kRoll: return m.roll;
    case Axis::kYaw: return m.yaw;
  }
  return m.roll;
}

}  // namespace

std::string to_string(Axis a) {
  switch (a) {
    case Axis::kPitch: return "pitch";
    case Axis::kRoll: return "roll";
    case Axis::kYaw: return "yaw";
  }
  return "unknown";
}

std::vector<double> MCRun::metric(Axis axis) const {
  std::vector<double> out;
  for (const auto& s : samples) {
    if (s.status == sim::SimStatus::kOk) out.push_back(pick(s.metrics, axis));
  }
  return out;
}

std::size_t MCRun::failed_to_simulate() const {
  return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](const auto& s) {
    return s.status != sim::SimStatus::kOk;
  }));
}

MCRun run(const aero::DatabaseSampler& sampler, const sim::SimConfig& config, std::size_t n,
          std::uint64_t seed, int jobs) {
  if (n < 1) throw UsageError("Monte Carlo needs at least one sample");
  MCRun out;
  out.seed = seed;
  out.samples.resize(n);
  auto one = [&](std::size_t i) {
    const auto sample = sampler.draw(seed, i);
    const auto r = sim::simulate(sample, config);
    auto& o = out.samples[i];
    o.index = i;
    o.status = r.status;
    o.metrics = r.metrics;
    o.extrapolated = r.extrapolated;
    o.failure = r.failure;
  };
  const auto workers = static_cast<std::size_t>(std::clamp(jobs, 1, 256));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) one(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  return out;
}

MCRun run(const aero::DatabaseModel& db, const sim::SimConfig& config, std::size_t n,
          std::uint64_t seed, int jobs) {
  db.require_complete();
  return run(aero::DatabaseSampler(db), config, n, seed, jobs);
}

EmpiricalCDF::EmpiricalCDF(std::vector<double> values) : sorted_(std::move(values)) {
  if (sorted_.empty()) throw DataError("empirical CDF needs at least one value");
  for (double v : sorted_) {
    if (std::isnan(v)) throw DataError("empirical CDF values must not be NaN");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCDF::operator()(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double EmpiricalCDF::quantile(double p) const {
  if (!(p >= 0.0 && p <= 1.0)) throw UsageError("quantile level must lie in [0, 1]");
  const double n = static_cast<double>(sorted_.size());
  // The small guard keeps e.g. (1 - 0.95) * 1000 at order statistic 50.
  auto k = static_cast<std::size_t>(std::ceil(p * n - 1e-9));
  k = std::clamp<std::size_t>(k, 1, sorted_.size());
  return sorted_[k - 1];
}

double failure_rate(const std::vector<double>& values) {
  if (values.empty()) throw DataError("failure rate of an empty sample");
  const auto fails = std::count_if(values.begin(), values.end(), [](double v) { return v < 0.0; });
  return static_cast<double>(fails) / static_cast<double>(values.size());
}

double success_rate(const std::vector<double>& values) {
  if (values.empty()) throw DataError("success rate of an empty sample");
  const auto ok = std::count_if(values.begin(), values.end(), [](double v) { return !(v < 0.0); });
  return static_cast<double>(ok) / static_cast<double>(values.size());
}

std::vector<TracePoint> convergence_trace(const std::vector<double>& values) {
  if (values.size() < 2) throw DataError("convergence trace needs at least two values");
  std::vector<TracePoint> out;
  out.reserve(values.size());
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double n = static_cast<double>(i + 1);
    const double d = values[i] - mean;
    mean += d / n;
    m2 += d * (values[i] - mean);
    out.push_back({i + 1, mean, i == 0 ? std::numeric_limits<double>::quiet_NaN() : m2 / (n - 1.0)});
  }
  return out;
}

DesignQuery design_deflection(const EmpiricalCDF& cdf, double x, double limit) {
  if (!(x >= 0.0 && x <= 1.0)) throw UsageError("success rate x must lie in [0, 1]");
  if (!(limit > 0.0)) throw UsageError("deflection limit must be positive");
  DesignQuery q;
  q.success_rate = x;
  q.limit = limit;
  q.quantile = cdf.quantile(1.0 - x);
  q.deflection = limit * (1.0 - q.quantile);
  return q;
}

MetricSummary summarize(const std::vector<double>& values) {
  if (values.empty()) throw DataError("summary of an empty sample");
  MetricSummary s;
  s.count = values.size();
  if (values.size() == 1) {
    s.mean = values[0];
    s.variance = std::numeric_limits<double>::quiet_NaN();
  } else {
    const auto last = convergence_trace(values).back();
    s.mean = last.mean;
    s.variance = last.variance;
  }
  s.failure_rate = failure_rate(values);
  return s;
}

void write_metrics(const std::string& path, const MCRun& run) {
  csv::Table t;
  t.header = {"sample", "status", "rho_pitch", "rho_roll", "rho_yaw", "extrapolated"};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& s : run.samples) {
    const bool ok = s.status == sim::SimStatus::kOk;
    t.rows.push_back({static_cast<double>(s.index), ok ? 0.0 : 1.0, ok ? s.metrics.pitch : nan,
                      ok ? s.metrics.roll : nan, ok ? s.metrics.yaw : nan,
                      s.extrapolated ? 1.0 : 0.0});
  }
  csv::write(path, t);
}

void write_cdf(const std::string& path, const EmpiricalCDF& cdf) {
  csv::Table t;
  t.header = {"value", "cumulative_probability"};
  for (double v : cdf.sorted()) t.rows.push_back({v, cdf(v)});
  csv::write(path, t);
}

EmpiricalCDF read_cdf(const std::string& path) {
  const auto table = csv::read(path);
  const auto col = table.column("value");
  std::vector<double> values;
  for (const auto& row : table.rows) values.push_back(row[col]);
  return EmpiricalCDF(std::move(values));
}

void write_convergence(const std::string& path, const MCRun& run) {
  csv::Table t;
  t.header = {"count", "mean_pitch", "var_pitch", "mean_roll", "var_roll", "mean_yaw", "var_yaw"};
  const auto pitch = run.metric(Axis::kPitch);
  if (pitch.size() >= 2) {
    const auto tp = convergence_trace(pitch);
    const auto tr = convergence_trace(run.metric(Axis::kRoll));
    const auto ty = convergence_trace(run.metric(Axis::kYaw));
    for (std::size_t i = 0; i < tp.size(); ++i) {
      t.rows.push_back({static_cast<double>(tp[i].count), tp[i].mean, tp[i].variance, tr[i].mean,
                        tr[i].variance, ty[i].mean, ty[i].variance});
    }
  }
  csv::write(path, t);
}

}  // namespace mfdb::mc

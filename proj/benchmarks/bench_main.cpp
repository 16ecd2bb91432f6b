#include <cmath>

#include <benchmark/benchmark.h>

#include "mfdb/aero_db.hpp"
#include "mfdb/flight_sim.hpp"
#include "mfdb/gp.hpp"
#include "mfdb/mfgp.hpp"

using namespace mfdb;

namespace {

double f_lf(double x) {
  return 0.5 * std::pow(6.0 * x - 2.0, 2) * std::sin(12.0 * x - 4.0) + 10.0 * (x - 0.5) - 5.0;
}
double f_hf(double x) { return 2.0 * f_lf(x) - 20.0 * x + 20.0 + std::sin(10.0 * std::cos(5.0 * x)); }

Dataset sampled(Eigen::Index n, double (*f)(double)) {
  MatrixXd x(n, 1);
  VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = static_cast<double>(i) / static_cast<double>(n - 1);
    y(i) = f(x(i, 0));
  }
  return Dataset(x, y, VectorXd::Constant(n, 1e-3));
}

gp::OptimizerConfig optimizer() {
  gp::OptimizerConfig c;
  c.starts = 2;
  c.seed = 1;
  return c;
}

// The bundled aircraft database, fitted once.
const aero::DatabaseModel& database() {
  static const auto db =
      aero::fit_database(aero::Manifest::load(MFDB_DATA_DIR "/synthetic_aircraft/manifest.json"));
  return db;
}

void BM_GpFit(benchmark::State& state) {
  const auto data = sampled(state.range(0), f_lf);
  for (auto _ : state) benchmark::DoNotOptimize(gp::GPModel::fit(data, gp::BasisSpec{1}, optimizer()));
}
BENCHMARK(BM_GpFit)->Arg(20)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_GpPredict(benchmark::State& state) {
  const auto model = gp::GPModel::fit(sampled(50, f_lf), gp::BasisSpec{1}, optimizer());
  const MatrixXd query = VectorXd::LinSpaced(state.range(0), 0.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(query));
}
BENCHMARK(BM_GpPredict)->Arg(100)->Arg(400)->Unit(benchmark::kMicrosecond);

void BM_MultiFidelityPredict(benchmark::State& state) {
  mfgp::LevelSpec lo{sampled(30, f_lf), gp::BasisSpec{1}, gp::BasisSpec{0}, optimizer()};
  mfgp::LevelSpec hi{sampled(6, f_hf), gp::BasisSpec{1}, gp::BasisSpec{0}, optimizer()};
  const auto model = mfgp::MFGPModel::build({lo, hi});
  const MatrixXd query = VectorXd::LinSpaced(state.range(0), 0.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(query));
}
BENCHMARK(BM_MultiFidelityPredict)->Arg(100)->Arg(400)->Unit(benchmark::kMicrosecond);

void BM_SamplerSetup(benchmark::State& state) {
  const auto& db = database();
  for (auto _ : state) benchmark::DoNotOptimize(aero::DatabaseSampler(db));
}
BENCHMARK(BM_SamplerSetup)->Unit(benchmark::kMillisecond);

void BM_SamplerDraw(benchmark::State& state) {
  const aero::DatabaseSampler sampler(database());
  std::uint64_t id = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sampler.draw(7, id++));
}
BENCHMARK(BM_SamplerDraw)->Unit(benchmark::kMicrosecond);

void BM_Simulate(benchmark::State& state) {
  const auto sample = aero::DatabaseSampler(database()).mean();
  sim::SimConfig config;
  config.maneuver.airspeed = 80.0;
  config.maneuver.time_step = 0.1;
  config.engines.status = sim::EngineStatus::kRightOut;
  config.limits = sim::Limits::reduced();
  for (auto _ : state) benchmark::DoNotOptimize(sim::simulate(sample, config));
}
BENCHMARK(BM_Simulate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();

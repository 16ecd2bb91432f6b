#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfdb/aero_db.hpp"
#include "mfdb/csv.hpp"
#include "mfdb/error.hpp"
#include "mfdb/flight_sim.hpp"
#include "mfdb/gci.hpp"
#include "mfdb/monte_carlo.hpp"
#include "mfdb/serialize.hpp"
#include "mfdb/turb_uq.hpp"

namespace fs = std::filesystem;
using mfdb::Json;

namespace {

// ---------------------------------------------------------------- logging

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

LogLevel log_level() {
  const char* env = std::getenv("MFDB_LOG");
  if (!env) return LogLevel::kWarn;
  const std::string v = env;
  if (v == "error") return LogLevel::kError;
  if (v == "info") return LogLevel::kInfo;
  if (v == "debug") return LogLevel::kDebug;
  return LogLevel::kWarn;
}

void log(LogLevel level, const std::string& msg) {
  static const LogLevel threshold = log_level();
  if (level > threshold) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << '\n';
}

// ---------------------------------------------------------------- helpers

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw mfdb::DataError("cannot create directory '" + dir + "': " + ec.message());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw mfdb::DataError("cannot write '" + path + "'");
  return out;
}

struct Grid {
  std::vector<std::string> names;
  mfdb::MatrixXd points;
};

Grid read_grid(const std::string& path) {
  const auto t = mfdb::csv::read(path);
  Grid g;
  g.names = t.header;
  g.points.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t d = 0; d < t.header.size(); ++d) {
      g.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = t.rows[i][d];
    }
  }
  return g;
}

/// Surrogate from a model file: a gp/mfgp document, or one entry of a database.
mfdb::mfgp::MFGPModel load_surrogate(const std::string& path, const std::string& key) {
  const auto j = mfdb::read_json_file(path);
  if (j.value("type", std::string()) == "aero-db") {
    if (key.empty()) throw mfdb::UsageError("database models need --key to select a coefficient");
    const auto db = mfdb::aero::database_from_json(j);
    return db.at(mfdb::aero::CoefficientKey::parse(key));
  }
  if (!key.empty()) throw mfdb::UsageError("--key only applies to database models");
  return mfdb::mfgp_from_json(j);
}

mfdb::aero::DatabaseModel load_database(const std::string& path, int jobs) {
  const auto j = mfdb::read_json_file(path);
  if (j.value("type", std::string()) == "aero-db") return mfdb::aero::database_from_json(j);
  if (j.contains("coefficients")) {
    if (!j.contains("optimizer") || !j.at("optimizer").contains("seed")) {
      throw mfdb::UsageError("manifest '" + path + "' has no optimizer seed; fit it with --seed first");
    }
    log(LogLevel::kInfo, "fitting database manifest " + path);
    return mfdb::aero::fit_database(
        mfdb::aero::Manifest::from_json(j, fs::path(path).parent_path().string()), jobs);
  }
  throw mfdb::DataError("'" + path + "' is neither a database model nor a database manifest");
}

// ---------------------------------------------------------------- commands

struct FitArgs {
  std::string manifest, out;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

int cmd_fit(const FitArgs& a) {
  auto j = mfdb::read_json_file(a.manifest);
  const auto base = fs::path(a.manifest).parent_path();
  if (a.seed) j["optimizer"]["seed"] = *a.seed;
  if (!j.contains("optimizer") || !j.at("optimizer").contains("seed")) {
    throw mfdb::UsageError("no optimizer seed: set optimizer.seed in the manifest or pass --seed");
  }
  if (j.contains("coefficients")) {
    const auto manifest = mfdb::aero::Manifest::from_json(j, base.string());
    log(LogLevel::kInfo, "fitting " + std::to_string(manifest.coefficients.size()) + " coefficients");
    const auto db = mfdb::aero::fit_database(manifest, a.jobs);
    mfdb::write_json_file(a.out, mfdb::aero::to_json(db));
    return 0;
  }
  if (!j.contains("levels")) {
    throw mfdb::DataError("manifest needs either 'levels' (one surrogate) or 'coefficients'");
  }
  std::vector<mfdb::mfgp::LevelSpec> specs;
  try {
    const auto& o = j.at("optimizer");
    for (const auto& level : j.at("levels")) {
      fs::path csv = level.at("csv").get<std::string>();
      if (csv.is_relative()) csv = base / csv;
      mfdb::mfgp::LevelSpec s;
      s.data = mfdb::read_dataset_csv(csv.string());
      s.level_basis = mfdb::gp::BasisSpec{j.value("basis_degree", 1)};
      s.trend_basis = mfdb::gp::BasisSpec{j.value("trend_degree", 0)};
      s.optimizer.starts = o.value("starts", s.optimizer.starts);
      s.optimizer.seed = o.at("seed").get<std::uint64_t>();
      s.optimizer.local.max_evaluations = o.value("max_evaluations", s.optimizer.local.max_evaluations);
      specs.push_back(std::move(s));
    }
  } catch (const Json::exception& e) {
    throw mfdb::DataError(std::string("malformed manifest: ") + e.what());
  }
  const auto model = mfdb::mfgp::MFGPModel::build(specs);
  mfdb::write_json_file(a.out, mfdb::to_json(model));
  return 0;
}

struct PredictArgs {
  std::string model, grid, out, key;
  int level = 0;
  int count = 1;
  std::optional<std::uint64_t> seed;
};

int cmd_predict(const PredictArgs& a) {
  const auto grid = read_grid(a.grid);
  mfdb::csv::Table t;
  t.header = grid.names;
  for (const char* c : {"mean", "sd", "lower", "upper"}) t.header.push_back(c);
  if (grid.points.rows() > 0) {
    const auto model = load_surrogate(a.model, a.key);
    const auto pred = model.predict(grid.points, a.level);
    for (Eigen::Index i = 0; i < grid.points.rows(); ++i) {
      std::vector<double> row;
      for (Eigen::Index d = 0; d < grid.points.cols(); ++d) row.push_back(grid.points(i, d));
      const double sd = std::sqrt(std::max(pred.covariance(i, i), 0.0));
      row.insert(row.end(), {pred.mean(i), sd, pred.mean(i) - 2.0 * sd, pred.mean(i) + 2.0 * sd});
      t.rows.push_back(std::move(row));
    }
  }
  mfdb::csv::write(a.out, t);
  return 0;
}

int cmd_sample(const PredictArgs& a) {
  if (!a.seed) throw mfdb::UsageError("sample requires --seed");
  if (a.count < 1) throw mfdb::UsageError("--count must be >= 1");
  const auto grid = read_grid(a.grid);
  mfdb::csv::Table t;
  t.header = grid.names;
  for (int s = 0; s < a.count; ++s) t.header.push_back("sample_" + std::to_string(s + 1));
  if (grid.points.rows() > 0) {
    const auto model = load_surrogate(a.model, a.key);
    const auto draws = model.sample(grid.points, a.level, a.count, *a.seed);
    for (Eigen::Index i = 0; i < grid.points.rows(); ++i) {
      std::vector<double> row;
      for (Eigen::Index d = 0; d < grid.points.cols(); ++d) row.push_back(grid.points(i, d));
      for (int s = 0; s < a.count; ++s) row.push_back(draws(s, i));
      t.rows.push_back(std::move(row));
    }
  }
  mfdb::csv::write(a.out, t);
  return 0;
}

struct PerturbArgs {
  std::string field, out_dir;
  double relaxation = 0.1;
};

int cmd_perturb(const PerturbArgs& a) {
  const auto field = mfdb::turb::read_stress_field(a.field);
  const fs::path in = a.field;
  const fs::path dir = a.out_dir.empty() ? in.parent_path() : fs::path(a.out_dir);
  if (!a.out_dir.empty()) ensure_dir(a.out_dir);
  for (const auto& spec : mfdb::turb::PerturbationSpec::canonical(a.relaxation)) {
    std::vector<mfdb::turb::StressState> out;
    out.reserve(field.size());
    for (const auto& s : field) out.push_back(mfdb::turb::perturb(s, spec));
    const auto path = dir / (in.stem().string() + spec.suffix() + ".csv");
    mfdb::turb::write_stress_field(path.string(), out);
    std::cout << path.string() << '\n';
  }
  return 0;
}

struct GciArgs {
  std::vector<long long> nodes;
  std::vector<double> phi;
  int dim = 2;
  bool json = false;
};

int cmd_gci(const GciArgs& a) {
  if (a.nodes.size() != 3 || a.phi.size() != 3) {
    throw mfdb::UsageError("gci needs exactly three --nodes and three --phi values");
  }
  if (a.dim != 2 && a.dim != 3) throw mfdb::UsageError("--dim must be 2 or 3");
  const double exponent = a.dim == 2 ? 0.5 : 1.0 / 3.0;
  mfdb::gci::Study study;
  for (std::size_t i = 0; i < 3; ++i) study[i] = {a.nodes[i], a.phi[i], exponent};
  const auto outcome = mfdb::gci::gci_report(study);
  const auto f = mfdb::csv::format;
  if (const auto* r = std::get_if<mfdb::gci::GCIReport>(&outcome)) {
    if (a.json) {
      std::cout << Json{{"status", "valid"},     {"h", r->h},
                        {"r21", r->r21},         {"r32", r->r32},
                        {"eps21", r->eps21},     {"eps32", r->eps32},
                        {"p", r->p},             {"s", r->s},
                        {"phi_ext", r->phi_ext}, {"e_a", r->e_a},
                        {"gci_fine", r->gci_fine}, {"error_bar", r->error_bar},
                        {"fos", r->fos},         {"interval", {r->lower(), r->upper()}}}
                       .dump(2)
                << '\n';
    } else {
      std::cout << "status = valid\n"
                << "h = " << f(r->h[0]) << "," << f(r->h[1]) << "," << f(r->h[2]) << '\n'
                << "r21 = " << f(r->r21) << "\nr32 = " << f(r->r32) << '\n'
                << "eps21 = " << f(r->eps21) << "\neps32 = " << f(r->eps32) << '\n'
                << "p = " << f(r->p) << "\ns = " << f(r->s) << '\n'
                << "phi_ext = " << f(r->phi_ext) << "\ne_a = " << f(r->e_a) << '\n'
                << "gci_fine = " << f(r->gci_fine) << "\nerror_bar = " << f(r->error_bar) << '\n'
                << "fos = " << f(r->fos) << '\n'
                << "interval = " << f(r->lower()) << "," << f(r->upper()) << '\n';
    }
    return 0;
  }
  const auto& bad = std::get<mfdb::gci::InvalidReport>(outcome);
  if (a.json) {
    std::cout << Json{{"status", "invalid"},
                      {"reason", mfdb::gci::to_string(bad.reason)},
                      {"p", bad.order.p},
                      {"s", bad.order.s},
                      {"iterations", bad.order.iterations}}
                     .dump(2)
              << '\n';
  } else {
    std::cout << "status = invalid\nreason = " << mfdb::gci::to_string(bad.reason) << '\n'
              << "p = " << f(bad.order.p) << "\ns = " << f(bad.order.s) << '\n';
  }
  return 0;
}

struct SimulateArgs {
  std::string db, config, out;
  std::optional<std::uint64_t> seed;
  bool mean = false;
  bool json = false;
  bool no_timestamp = false;
  int jobs = 1;
};

void write_summary(const std::string& path, const Json& body, bool as_json, bool no_timestamp) {
  auto out = open_out(path);
  if (as_json) {
    Json j = body;
    if (!no_timestamp) j["generated"] = timestamp();
    out << j.dump(2) << '\n';
    return;
  }
  if (!no_timestamp) out << "# generated " << timestamp() << '\n';
  for (const auto& [k, v] : body.items()) {
    if (v.is_number_float()) {
      out << k << " = " << mfdb::csv::format(v.get<double>()) << '\n';
    } else if (v.is_string()) {
      out << k << " = " << v.get<std::string>() << '\n';
    } else {
      out << k << " = " << v.dump() << '\n';
    }
  }
}

int cmd_simulate(const SimulateArgs& a) {
  if (!a.seed && !a.mean) throw mfdb::UsageError("simulate requires --seed (or --mean)");
  const auto config = mfdb::sim::SimConfig::load(a.config);
  const auto db = load_database(a.db, a.jobs);
  db.require_complete();
  const mfdb::aero::DatabaseSampler sampler(db);
  const auto sample = a.mean ? sampler.mean() : sampler.draw(*a.seed, 0);
  const auto result = mfdb::sim::simulate(sample, config);
  ensure_dir(a.out);
  if (result.status == mfdb::sim::SimStatus::kOk) {
    mfdb::sim::write_history((fs::path(a.out) / "history.csv").string(), result);
  }
  Json body = mfdb::sim::summary_json(result);
  if (a.seed) body["seed"] = *a.seed;
  write_summary((fs::path(a.out) / (a.json ? "summary.json" : "summary.txt")).string(), body,
                a.json, a.no_timestamp);
  if (result.status != mfdb::sim::SimStatus::kOk) {
    throw mfdb::NumericalError("simulation failed: " + result.failure);
  }
  return 0;
}

struct MonteCarloArgs {
  std::string db, maneuver, out;
  std::optional<std::uint64_t> seed;
  std::size_t samples = 0;
  int jobs = 1;
  bool json = false;
  bool no_timestamp = false;
};

int cmd_montecarlo(const MonteCarloArgs& a) {
  if (!a.seed) throw mfdb::UsageError("montecarlo requires --seed");
  if (a.samples < 1) throw mfdb::UsageError("--samples must be >= 1");
  const auto config = mfdb::sim::SimConfig::load(a.maneuver);
  const auto db = load_database(a.db, a.jobs);
  db.require_complete();
  log(LogLevel::kInfo, "running " + std::to_string(a.samples) + " samples");
  const auto run = mfdb::mc::run(mfdb::aero::DatabaseSampler(db), config, a.samples, *a.seed, a.jobs);
  ensure_dir(a.out);
  const fs::path dir = a.out;
  mfdb::mc::write_metrics((dir / "metrics.csv").string(), run);
  mfdb::mc::write_convergence((dir / "convergence.csv").string(), run);

  Json body;
  body["samples"] = a.samples;
  body["seed"] = *a.seed;
  body["simulated"] = run.simulated();
  body["failed_to_simulate"] = run.failed_to_simulate();
  for (auto axis : {mfdb::mc::Axis::kPitch, mfdb::mc::Axis::kRoll, mfdb::mc::Axis::kYaw}) {
    const auto name = mfdb::mc::to_string(axis);
    const auto values = run.metric(axis);
    if (values.empty()) continue;
    mfdb::mc::write_cdf((dir / ("cdf_" + name + ".csv")).string(), mfdb::mc::EmpiricalCDF(values));
    const auto s = mfdb::mc::summarize(values);
    body[name + ".mean"] = s.mean;
    body[name + ".variance"] = s.variance;
    body[name + ".failure_rate"] = s.failure_rate;
  }
  write_summary((dir / (a.json ? "summary.json" : "summary.txt")).string(), body, a.json,
                a.no_timestamp);
  return 0;
}

struct DesignArgs {
  std::string cdf, out;
  double x = 1.0;
  double limit = 0.0;
  bool json = false;
};

int cmd_design(const DesignArgs& a) {
  const auto cdf = mfdb::mc::read_cdf(a.cdf);
  const auto q = mfdb::mc::design_deflection(cdf, a.x, a.limit);
  std::ostringstream text;
  const auto f = mfdb::csv::format;
  if (a.json) {
    text << Json{{"success_rate", q.success_rate},
                 {"limit", q.limit},
                 {"quantile", q.quantile},
                 {"deflection", q.deflection}}
                .dump(2)
         << '\n';
  } else {
    text << "success_rate = " << f(q.success_rate) << "\nlimit = " << f(q.limit)
         << "\nquantile = " << f(q.quantile) << "\ndeflection = " << f(q.deflection) << '\n';
  }
  if (!a.out.empty()) {
    open_out(a.out) << text.str();
  } else {
    std::cout << text.str();
  }
  return 0;
}

int exit_code(mfdb::ErrorKind kind) {
  switch (kind) {
    case mfdb::ErrorKind::kUsage: return 2;
    case mfdb::ErrorKind::kData: return 3;
    case mfdb::ErrorKind::kNumerical: return 4;
  }
  return 3;
}

const char* category(mfdb::ErrorKind kind) {
  switch (kind) {
    case mfdb::ErrorKind::kUsage: return "usage";
    case mfdb::ErrorKind::kData: return "data";
    case mfdb::ErrorKind::kNumerical: return "numerical";
  }
  return "data";
}

std::string one_line(std::string s) {
  for (auto& c : s) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-fidelity aerodynamic databases, uncertainty and virtual flight testing"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mfdb 0.1.0");

  FitArgs fit;
  auto* c_fit = app.add_subcommand("fit", "Fit a surrogate or a whole database from a manifest");
  c_fit->add_option("--manifest", fit.manifest, "Manifest JSON")->required()->check(CLI::ExistingFile);
  c_fit->add_option("--out", fit.out, "Output model JSON")->required();
  c_fit->add_option("--seed", fit.seed, "Optimizer seed (overrides the manifest)");
  c_fit->add_option("--jobs", fit.jobs, "Coefficients fitted in parallel")->check(CLI::PositiveNumber);

  PredictArgs pred;
  auto* c_pred = app.add_subcommand("predict", "Predictive mean and 2-sigma band on a grid");
  c_pred->add_option("--model", pred.model, "Model JSON")->required()->check(CLI::ExistingFile);
  c_pred->add_option("--grid", pred.grid, "Grid CSV (one column per input)")->required()->check(CLI::ExistingFile);
  c_pred->add_option("--out", pred.out, "Output CSV")->required();
  c_pred->add_option("--level", pred.level, "Fidelity level (default: top)");
  c_pred->add_option("--key", pred.key, "Coefficient key for database models");

  PredictArgs samp;
  auto* c_samp = app.add_subcommand("sample", "Draw surrogate realizations on a grid");
  c_samp->add_option("--model", samp.model, "Model JSON")->required()->check(CLI::ExistingFile);
  c_samp->add_option("--grid", samp.grid, "Grid CSV")->required()->check(CLI::ExistingFile);
  c_samp->add_option("--out", samp.out, "Output CSV")->required();
  c_samp->add_option("--count", samp.count, "Number of draws");
  c_samp->add_option("--seed", samp.seed, "Random seed (required)");
  c_samp->add_option("--level", samp.level, "Fidelity level (default: top)");
  c_samp->add_option("--key", samp.key, "Coefficient key for database models");

  PerturbArgs pert;
  auto* c_pert = app.add_subcommand("perturb", "Eigenspace perturbations of a Reynolds stress field");
  c_pert->add_option("--field", pert.field, "Stress field CSV (R11,R22,R33,R12,R13,R23,k)")->required()->check(CLI::ExistingFile);
  c_pert->add_option("--relaxation", pert.relaxation, "Relaxation factor r in [0, 1]");
  c_pert->add_option("--out-dir", pert.out_dir, "Directory for the five outputs (default: next to input)");

  GciArgs gci;
  auto* c_gci = app.add_subcommand("gci", "Grid convergence index of a three-grid study");
  c_gci->add_option("--nodes", gci.nodes, "Node counts, finest first")->required()->delimiter(',');
  c_gci->add_option("--phi", gci.phi, "Solutions, finest first")->required()->delimiter(',');
  c_gci->add_option("--dim", gci.dim, "Grid dimension (2 or 3)")->required();
  c_gci->add_flag("--json", gci.json, "Print JSON");

  SimulateArgs simu;
  auto* c_sim = app.add_subcommand("simulate", "Simulate the roll maneuver on one database sample");
  c_sim->add_option("--db", simu.db, "Database model or manifest")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--config", simu.config, "Maneuver/engine/limits JSON")->required()->check(CLI::ExistingFile);
  c_sim->add_option("--out", simu.out, "Output directory")->required();
  c_sim->add_option("--seed", simu.seed, "Database sample seed");
  c_sim->add_flag("--mean", simu.mean, "Use the mean database instead of a random sample");
  c_sim->add_option("--jobs", simu.jobs, "Worker threads for fitting a manifest")->check(CLI::PositiveNumber);
  c_sim->add_flag("--json", simu.json, "Write summary.json instead of summary.txt");
  c_sim->add_flag("--no-timestamp", simu.no_timestamp, "Omit the generation timestamp");

  MonteCarloArgs mcar;
  auto* c_mc = app.add_subcommand("montecarlo", "Monte Carlo over sampled databases");
  c_mc->add_option("--db", mcar.db, "Database model or manifest")->required()->check(CLI::ExistingFile);
  c_mc->add_option("--maneuver", mcar.maneuver, "Maneuver/engine/limits JSON")->required()->check(CLI::ExistingFile);
  c_mc->add_option("--samples", mcar.samples, "Number of database samples")->required();
  c_mc->add_option("--seed", mcar.seed, "Master seed (required)");
  c_mc->add_option("--out", mcar.out, "Output directory")->required();
  c_mc->add_option("--jobs", mcar.jobs, "Worker threads")->check(CLI::PositiveNumber);
  c_mc->add_flag("--json", mcar.json, "Write summary.json instead of summary.txt");
  c_mc->add_flag("--no-timestamp", mcar.no_timestamp, "Omit the generation timestamp");

  DesignArgs des;
  auto* c_des = app.add_subcommand("design", "Deflection limit for a required success rate");
  c_des->add_option("--cdf", des.cdf, "CDF CSV of the metric")->required()->check(CLI::ExistingFile);
  c_des->add_option("--x", des.x, "Required success rate in [0, 1]")->required();
  c_des->add_option("--limit", des.limit, "Current deflection limit (deg)")->required();
  c_des->add_option("--out", des.out, "Write the result here instead of stdout");
  c_des->add_flag("--json", des.json, "Print JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: usage: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (*c_fit) return cmd_fit(fit);
    if (*c_pred) return cmd_predict(pred);
    if (*c_samp) return cmd_sample(samp);
    if (*c_pert) return cmd_perturb(pert);
    if (*c_gci) return cmd_gci(gci);
    if (*c_sim) return cmd_simulate(simu);
    if (*c_mc) return cmd_montecarlo(mcar);
    if (*c_des) return cmd_design(des);
  } catch (const mfdb::Error& e) {
    std::cerr << "error: " << category(e.kind()) << ": " << one_line(e.what()) << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: data: " << one_line(e.what()) << '\n';
    return 3;
  }
  return 2;
}

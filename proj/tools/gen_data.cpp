// Writes the bundled example data: the analytic low/high-fidelity pair and a
// laterally symmetric synthetic transport aircraft with two data sources.
//
//   mfdb-gen-data <data-dir>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfdb/csv.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

double f_lf(double x) {
  return 0.5 * std::pow(6.0 * x - 2.0, 2) * std::sin(12.0 * x - 4.0) + 10.0 * (x - 0.5) - 5.0;
}

double f_hf(double x) { return 2.0 * f_lf(x) - 20.0 * x + 20.0 + std::sin(10.0 * std::cos(5.0 * x)); }

void write_analytic(const fs::path& dir) {
  fs::create_directories(dir);
  auto table = [](int n, const std::function<double(double)>& f) {
    mfdb::csv::Table t;
    t.header = {"x", "y", "sigma"};
    for (int i = 0; i < n; ++i) {
      const double x = static_cast<double>(i) / (n - 1);
      t.rows.push_back({x, f(x), 0.0});
    }
    return t;
  };
  mfdb::csv::write((dir / "f_lf.csv").string(), table(21, f_lf));
  mfdb::csv::write((dir / "f_hf.csv").string(), table(4, f_hf));
  Json m = {{"levels", {{{"csv", "f_lf.csv"}}, {{"csv", "f_hf.csv"}}}},
            {"basis_degree", 1},
            {"trend_degree", 0},
            {"optimizer", {{"starts", 8}, {"seed", 1}}}};
  std::ofstream(dir / "manifest.json") << m.dump(2) << '\n';

  mfdb::csv::Table grid;
  grid.header = {"x"};
  for (int i = 0; i < 200; ++i) grid.rows.push_back({static_cast<double>(i) / 199.0});
  mfdb::csv::write((dir / "grid.csv").string(), grid);
}

// Truth model of the synthetic aircraft (alpha, beta, delta in degrees).
struct Aircraft {
  static double value(const std::string& key, double a, double b, double d) {
    if (key == "C_L") return 0.2 + 0.1 * a - 0.0008 * a * a - 0.0001 * b * b;
    if (key == "C_D") return 0.025 + 0.0005 * a * a + 0.0002 * b * b;
    if (key == "C_SF") return -0.012 * b;
    if (key == "C_l") return -0.0015 * b * (1.0 + 0.01 * a);
    if (key == "C_m") return 0.05 - 0.012 * a - 0.00002 * b * b;
    if (key == "C_n") return 0.0012 * b;
    if (key == "C_mq") return -25.0 - 0.1 * a;
    if (key == "C_lp") return -0.45 + 0.004 * a;
    if (key == "C_lr") return 0.1 + 0.01 * a;
    if (key == "C_np") return -0.03 - 0.002 * a;
    if (key == "C_nr") return -0.15 - 0.001 * a;
    if (key == "C_l:aileron") return 0.0025 * d * (1.0 - 0.008 * a) - 2e-7 * d * d * d;
    if (key == "C_m:aileron") return 0.00001 * d * d;
    if (key == "C_n:aileron") return -0.0002 * d * (1.0 + 0.02 * a);
    if (key == "C_l:elevator") return 0.0;
    if (key == "C_m:elevator") return -0.025 * d * (1.0 - 0.005 * a);
    if (key == "C_n:elevator") return 0.0;
    if (key == "C_l:rudder") return 0.0004 * d;  // side force acts above the CG
    if (key == "C_m:rudder") return 0.000005 * d * d;
    if (key == "C_n:rudder") return -0.0022 * d * (1.0 - 0.004 * a) - 0.00002 * b * d;
    throw std::runtime_error("no truth model for " + key);
  }
  // The low-fidelity source misses some physics: a scaled, offset copy.
  static double low_fidelity(const std::string& key, double a, double b, double d) {
    const double v = value(key, a, b, d);
    if (key.find(':') != std::string::npos) return 0.9 * v;
    return 0.92 * v + (key == "C_L" ? 0.02 : 0.0);
  }
};

std::vector<double> steps(double lo, double hi, double step) {
  std::vector<double> v;
  for (double x = lo; x <= hi + 1e-9; x += step) v.push_back(x);
  return v;
}

std::vector<std::string> signature(const std::string& key) {
  if (key.find(":elevator") != std::string::npos) return {"alpha", "delta"};
  if (key.find(':') != std::string::npos) return {"alpha", "beta", "delta"};
  if (key == "C_mq" || key == "C_lp" || key == "C_lr" || key == "C_np" || key == "C_nr") {
    return {"alpha"};
  }
  return {"alpha", "beta"};
}

std::vector<double> deflections(const std::string& key, bool high_fidelity) {
  double lim = 35.0;
  if (key.find("aileron") != std::string::npos) lim = 25.0;
  if (key.find("elevator") != std::string::npos) lim = 30.0;
  if (high_fidelity) return {-lim, -0.4 * lim, 0.0, 0.4 * lim, lim};
  return {-lim, -0.6 * lim, -0.2 * lim, 0.0, 0.2 * lim, 0.6 * lim, lim};
}

void write_source(const fs::path& path, const std::string& key, bool high_fidelity) {
  const auto sig = signature(key);
  const bool control = sig.back() == "delta";
  const bool uses_beta = sig.size() >= 2 && sig[1] == "beta";

  std::vector<double> alpha, beta{0.0}, delta{0.0};
  if (control) {
    alpha = high_fidelity ? std::vector<double>{-4, 6, 16, 25}
                          : std::vector<double>{-4, 2, 8, 14, 20, 25};
    if (uses_beta) beta = {-10, 0, 10};
    delta = deflections(key, high_fidelity);
  } else if (high_fidelity) {
    alpha = {-4, 2, 8, 14, 20, 25};
    if (uses_beta) beta = {-20, -10, 0, 10, 20};
  } else {
    alpha = steps(-4, 23, 3.0);
    alpha.push_back(25.0);
    if (uses_beta) beta = steps(-20, 20, 5.0);
  }

  mfdb::csv::Table t;
  t.header = sig;
  t.header.push_back("y");
  for (double a : alpha) {
    for (double b : beta) {
      for (double d : delta) {
        std::vector<double> row{a};
        if (uses_beta) row.push_back(b);
        if (control) row.push_back(d);
        double y = high_fidelity ? Aircraft::value(key, a, b, d)
                                 : Aircraft::low_fidelity(key, a, b, d);
        if (control && d == 0.0) y = 0.0;
        row.push_back(y);
        t.rows.push_back(row);
      }
    }
  }
  mfdb::csv::write(path.string(), t);
}

std::string file_name(std::string key) {
  for (auto& c : key) {
    if (c == ':') c = '_';
  }
  return key + ".csv";
}

void write_aircraft(const fs::path& dir) {
  fs::create_directories(dir / "avl");
  fs::create_directories(dir / "wt");
  const std::vector<std::string> keys = {
      "C_L",          "C_D",          "C_SF",         "C_l",          "C_m",
      "C_n",          "C_mq",         "C_lp",         "C_lr",         "C_np",
      "C_nr",         "C_l:aileron",  "C_m:aileron",  "C_n:aileron",  "C_l:elevator",
      "C_m:elevator", "C_n:elevator", "C_l:rudder",   "C_m:rudder",   "C_n:rudder"};
  Json coefs = Json::array();
  for (const auto& key : keys) {
    // Stability derivatives come from the low-fidelity source only; so do the
    // identically zero elevator cross-coupling terms, which have nothing for a
    // second level to correct.
    const bool single = signature(key).size() == 1 || key == "C_l:elevator" ||
                        key == "C_n:elevator";
    write_source(dir / "avl" / file_name(key), key, false);
    Json sources = Json::array();
    sources.push_back({{"fidelity", 1}, {"csv", "avl/" + file_name(key)}, {"uncertainty", "avl-formula"}});
    if (!single) {
      write_source(dir / "wt" / file_name(key), key, true);
      sources.push_back({{"fidelity", 2}, {"csv", "wt/" + file_name(key)}, {"uncertainty", "wt-formula"}});
    }
    coefs.push_back({{"key", key}, {"sources", sources}});
  }
  Json manifest = {
      {"reference",
       {{"mac", 3.374}, {"span", 23.159}, {"area", 70.079}, {"mass", 25332.0},
        {"ixx", 238419.0}, {"iyy", 1510624.0}, {"izz", 1717539.0}}},
      {"basis_degree", 1},
      {"trend_degree", 0},
      {"optimizer", {{"starts", 3}, {"seed", 2024}, {"max_evaluations", 300}}},
      {"grid",
       {{"alpha", {{"start", -4}, {"stop", 24}, {"step", 2}}},
        {"beta", {-4, 0, 4}},
        {"delta",
         {{"aileron", {{"start", -25}, {"stop", 25}, {"step", 5}}},
          {"elevator", {{"start", -30}, {"stop", 30}, {"step", 6}}},
          {"rudder", {{"start", -35}, {"stop", 35}, {"step", 7}}}}}}},
      {"coefficients", coefs}};
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';

  Json maneuver = {
      {"maneuver",
       {{"initial_bank", 30.0}, {"final_bank", -30.0}, {"roll_duration", 11.0},
        {"level_duration", 1.0}, {"establish_duration", 12.0}, {"hold_duration", 3.0},
        {"final_hold_duration", 3.0}, {"airspeed", 80.0}, {"air_density", 1.225},
        {"time_step", 0.1}}},
      {"engines", {{"thrust_per_engine", 50000.0}, {"lateral_arm", 1.5}, {"status", "right_out"}}},
      {"limits", {{"aileron", 15.0}, {"elevator", 20.0}, {"rudder", 20.0}}}};
  std::ofstream(dir / "maneuver.json") << maneuver.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: mfdb-gen-data <data-dir>\n";
    return 2;
  }
  const fs::path root = argv[1];
  write_analytic(root / "analytic");
  write_aircraft(root / "synthetic_aircraft");
  return 0;
}

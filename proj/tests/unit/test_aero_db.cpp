#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "mfdb/aero_db.hpp"
#include "mfdb/error.hpp"
#include "synthetic.hpp"

using namespace mfdb;
using namespace mfdb::aero;
namespace fs = std::filesystem;
namespace synth = mfdb::testing;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("mfdb_aero_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

// A tiny two-key manifest: a baseline lift curve from two sources and a
// single-source elevator increment.
fs::path tiny_manifest() {
  const auto dir = scratch_dir("tiny");
  std::string lf = "alpha,beta,y\n";
  std::string hf = "alpha,beta,y\n";
  for (int a = -4; a <= 24; a += 4) {
    for (int b : {-10, 0, 10}) {
      lf += std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(0.1 * a) + "\n";
      if (a % 8 == 0) hf += std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(0.11 * a + 0.01) + "\n";
    }
  }
  write_file(dir / "cl_lf.csv", lf);
  write_file(dir / "cl_hf.csv", hf);
  std::string el = "alpha,delta,y,sigma\n";
  for (int a = -4; a <= 24; a += 7) {
    for (int d : {-20, -10, 0, 10, 20}) {
      el += std::to_string(a) + "," + std::to_string(d) + "," + std::to_string(-0.02 * d) + "," +
            (d == 0 ? "0" : "0.001") + "\n";
    }
  }
  write_file(dir / "cm_el.csv", el);
  write_file(dir / "manifest.json", R"({
    "optimizer": {"starts": 2, "seed": 7, "max_evaluations": 200},
    "grid": {"alpha": {"start": -4, "stop": 24, "step": 4}, "beta": [-10, 0, 10],
             "delta": {"elevator": [-20, -10, 0, 10, 20]}},
    "coefficients": [
      {"key": "C_L", "sources": [
        {"fidelity": 1, "csv": "cl_lf.csv", "uncertainty": "avl-formula"},
        {"fidelity": 2, "csv": "cl_hf.csv", "uncertainty": "wt-formula"}]},
      {"key": "C_m:elevator", "sources": [{"fidelity": 1, "csv": "cm_el.csv"}]}
    ]})");
  return dir / "manifest.json";
}

}  // namespace

TEST(Keys, ParseAndPrint) {
  const auto k = CoefficientKey::parse("C_l:aileron");
  EXPECT_EQ(k.kind, "C_l");
  EXPECT_EQ(k.surface, Surface::kAileron);
  EXPECT_EQ(k.str(), "C_l:aileron");
  EXPECT_TRUE(k.is_control());
  EXPECT_FALSE(CoefficientKey::parse("C_L").is_control());
  EXPECT_THROW(CoefficientKey::parse("C_L:aileron"), DataError);
  EXPECT_THROW(CoefficientKey::parse("C_X"), DataError);
  EXPECT_THROW(CoefficientKey::parse("C_l:canard"), DataError);
}

TEST(Keys, InputSignatures) {
  using V = std::vector<std::string>;
  EXPECT_EQ(CoefficientKey::parse("C_L").input_signature(), (V{"alpha", "beta"}));
  EXPECT_EQ(CoefficientKey::parse("C_lp").input_signature(), (V{"alpha"}));
  EXPECT_EQ(CoefficientKey::parse("C_m:elevator").input_signature(), (V{"alpha", "delta"}));
  EXPECT_EQ(CoefficientKey::parse("C_n:rudder").input_signature(), (V{"alpha", "beta", "delta"}));
  EXPECT_EQ(CoefficientKey::parse("C_D:flap").input_signature(), (V{"alpha", "beta", "delta"}));
}

TEST(Keys, CatalogCounts) {
  EXPECT_EQ(aero_kinds().size(), 11u);
  const auto all = catalog();
  EXPECT_EQ(all.size(), 29u);
  std::set<std::string> unique;
  int controls = 0;
  for (const auto& k : all) {
    unique.insert(k.str());
    controls += k.is_control();
  }
  EXPECT_EQ(unique.size(), 29u);
  EXPECT_EQ(controls, 18);
  EXPECT_EQ(simulator_keys().size(), 20u);
}

TEST(Keys, SurfaceNames) {
  for (auto s : {Surface::kAileron, Surface::kElevator, Surface::kRudder, Surface::kFlap, Surface::kSpoiler}) {
    EXPECT_EQ(surface_from_string(to_string(s)), s);
  }
  EXPECT_THROW(surface_from_string("slat"), DataError);
  EXPECT_EQ(deflection_range(Surface::kAileron).lo, -25.0);
  EXPECT_EQ(deflection_range(Surface::kRudder).hi, 35.0);
  EXPECT_EQ(deflection_range(Surface::kFlap).hi, 60.0);
}

TEST(Uncertainty, AvlFormula) {
  EXPECT_NEAR(avl_uncertainty(0.5, 0.3, 0.0), 0.05, 1e-15);
  EXPECT_NEAR(avl_uncertainty(0.5, 1.0, 30.0), 0.06, 1e-15);
  EXPECT_EQ(avl_uncertainty(0.0, 0.0, 12.0), 0.0);
  EXPECT_THROW(avl_uncertainty(0.0, -1.0, 0.0), UsageError);
}

TEST(Uncertainty, WindTunnelFormula) {
  EXPECT_EQ(wt_uncertainty(0.001), 1e-4);
  EXPECT_NEAR(wt_uncertainty(0.2), 0.01, 1e-15);
  EXPECT_EQ(wt_uncertainty(0.0), 1e-4);
  VectorXd d(4), v(4);
  d << 0, 10, 10, 10;
  v << 0, 0.1, 0.3, 0.5;
  const VectorXd sd = wt_control_uncertainty(d, v);
  EXPECT_EQ(sd(0), 1e-4);
  EXPECT_NEAR(sd(1), 0.02, 1e-15);
  EXPECT_NEAR(sd(3), 0.02, 1e-15);
}

TEST(Increment, Arithmetic) {
  EXPECT_NEAR(control_increment(0.03, 0.01), 0.02, 1e-15);
  EXPECT_EQ(control_increment(0.4, 0.4), 0.0);
  EXPECT_DOUBLE_EQ(0.01 + control_increment(0.03, 0.01), 0.03);
  EXPECT_THROW(control_increment({2.0, 0.0}, 0.03, {4.0, 0.0}, 0.01), UsageError);
  EXPECT_NEAR(control_increment({2.0, 1.0}, 0.03, {2.0, 1.0}, 0.01), 0.02, 1e-15);
}

TEST(Manifest, ParsesGridSourcesAndOptimizer) {
  const auto m = Manifest::load(tiny_manifest().string());
  EXPECT_EQ(m.optimizer.seed, 7u);
  EXPECT_EQ(m.optimizer.starts, 2);
  EXPECT_EQ(m.grid.alpha.size(), 8u);
  EXPECT_EQ(m.grid.delta.at(Surface::kElevator).size(), 5u);
  ASSERT_EQ(m.coefficients.size(), 2u);
  EXPECT_EQ(m.coefficients[0].sources.size(), 2u);
  EXPECT_EQ(m.coefficients[0].sources[1].uncertainty, UncertaintyModel::kWt);
  EXPECT_TRUE(fs::path(m.coefficients[0].sources[0].csv).is_absolute());
  EXPECT_EQ(m.reference.mass, 25332.0);
}

TEST(Manifest, RejectsBadStructure) {
  auto bad = [](const std::string& text) { return Manifest::from_json(Json::parse(text), "/tmp"); };
  EXPECT_THROW(bad(R"({"coefficients": [{"key": "C_L", "sources": [{"fidelity": 2, "csv": "a.csv"}]}]})"), DataError);
  EXPECT_THROW(bad(R"({"coefficients": [{"key": "C_L", "sources": []}]})"), DataError);
  EXPECT_THROW(bad(R"({"coefficients": [{"key": "C_L", "sources": [{"fidelity": 1, "csv": "a.csv"}]},
                                        {"key": "C_L", "sources": [{"fidelity": 1, "csv": "a.csv"}]}]})"), DataError);
  EXPECT_THROW(bad(R"({"coefficients": [{"key": "C_L", "sources": [{"fidelity": 1, "csv": "a.csv", "uncertainty": "guess"}]}]})"), DataError);
  EXPECT_THROW(bad(R"({"grid": {"alpha": {"start": 0, "stop": 1, "step": 0}}, "coefficients": []})"), DataError);
  EXPECT_THROW(bad(R"({"reference": {"span": -1}, "coefficients": []})"), DataError);
  EXPECT_THROW(bad(R"({"nothing": 1})"), DataError);
}

TEST(Sources, ControlIncrementMustVanishAtZeroDeflection) {
  const auto dir = scratch_dir("zero");
  write_file(dir / "bad.csv", "alpha,delta,y,sigma\n0,0,0.1,0\n0,5,0.2,0\n");
  EXPECT_THROW(load_source(CoefficientKey::parse("C_m:elevator"), {1, (dir / "bad.csv").string()}), DataError);
}

TEST(Sources, AvlFormulaUsesOriginValue) {
  const auto dir = scratch_dir("avl");
  write_file(dir / "cl.csv", "alpha,beta,y\n0,0,0.5\n10,0,1.5\n");
  const auto d = load_source(CoefficientKey::parse("C_L"), {1, (dir / "cl.csv").string(), UncertaintyModel::kAvl});
  EXPECT_NEAR(d.noise_sd()(0), 0.05, 1e-15);
  EXPECT_NEAR(d.noise_sd()(1), std::max(0.05, 0.002 * 10.0 * 1.0), 1e-15);
  EXPECT_THROW(load_source(CoefficientKey::parse("C_L"), {1, (dir / "cl.csv").string(), UncertaintyModel::kColumn}), DataError);
}

TEST(Database, FitIsDeterministicAcrossJobCounts) {
  const auto m = Manifest::load(tiny_manifest().string());
  const auto a = fit_database(m, 1);
  const auto b = fit_database(m, 2);
  EXPECT_EQ(a.entries.size(), 2u);
  EXPECT_EQ(a.at(CoefficientKey::parse("C_L")).levels(), 2);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
  EXPECT_EQ(a.missing(simulator_keys()).size(), 18u);
  EXPECT_THROW(a.require_complete(), DataError);
  EXPECT_THROW(a.at(CoefficientKey::parse("C_D")), DataError);
}

TEST(Database, JsonRoundTripPredictsIdentically) {
  const auto db = synth::synthetic_database();
  const auto back = database_from_json(Json::parse(to_json(db).dump()));
  const auto a = DatabaseSampler(db).draw(5, 3);
  const auto b = DatabaseSampler(back).draw(5, 3);
  for (const auto& [key, surface] : a.surfaces()) {
    EXPECT_EQ(surface.values(), b.surfaces().at(key).values()) << key;
  }
  EXPECT_THROW(database_from_json(Json{{"type", "gp"}}), DataError);
}

TEST(GridAxes, DefaultsIncludeZeroDeflection) {
  MatrixXd x(2, 3);
  x << 0, 0, 5, 4, 0, 12;
  const Dataset d = Dataset::exact(x, VectorXd::Zero(2));
  const auto axes = grid_axes(CoefficientKey::parse("C_l:aileron"), {}, {d});
  ASSERT_EQ(axes.size(), 3u);
  EXPECT_EQ(axes[0].size(), 30u);
  EXPECT_EQ(axes[0].front(), -4.0);
  EXPECT_EQ(axes[0].back(), 25.0);
  EXPECT_EQ(axes[1].size(), 11u);
  EXPECT_EQ(axes[2], (std::vector<double>{0.0, 5.0, 12.0}));
}

TEST(Sample, TotalCoefficientIsAdditive) {
  const auto sample = DatabaseSampler(synth::synthetic_database()).draw(11, 0);
  const double a = 6.0, b = 0.0;
  const double base = sample.eval(CoefficientKey::parse("C_l"), a, b);
  EXPECT_EQ(total_coefficient(sample, "C_l", a, b, {}), base);
  EXPECT_EQ(total_coefficient(sample, "C_l", a, b, {{Surface::kAileron, 0.0}, {Surface::kRudder, 0.0}}), base);
  const double ail = sample.eval(CoefficientKey::parse("C_l:aileron"), a, b, 7.0);
  const double rud = sample.eval(CoefficientKey::parse("C_l:rudder"), a, b, -3.0);
  EXPECT_NEAR(total_coefficient(sample, "C_l", a, b, {{Surface::kAileron, 7.0}}), base + ail, 1e-12);
  EXPECT_NEAR(total_coefficient(sample, "C_l", a, b, {{Surface::kAileron, 7.0}, {Surface::kRudder, -3.0}}),
              base + ail + rud, 1e-12);
  // The elevator has no side-force increment; it is skipped.
  EXPECT_EQ(total_coefficient(sample, "C_SF", a, b, {{Surface::kElevator, 10.0}}),
            sample.eval(CoefficientKey::parse("C_SF"), a, b));
}

TEST(Sample, MissingKeyIsAnError) {
  const DatabaseSample empty;
  try {
    empty.eval(CoefficientKey::parse("C_L"), 0.0, 0.0);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("missing coefficient entry"), std::string::npos);
  }
}

TEST(Sampler, SeedsAreReproducibleAndDistinct) {
  synth::SyntheticOptions opt;
  opt.aileron_noise = 1e-3;
  const DatabaseSampler sampler(synth::synthetic_database(opt));
  const auto key = CoefficientKey::parse("C_l:aileron");
  const auto a = sampler.draw(42, 1).surface(key).values();
  EXPECT_EQ(a, sampler.draw(42, 1).surface(key).values());
  EXPECT_NE(a, sampler.draw(42, 2).surface(key).values());
  EXPECT_NE(a, sampler.draw(43, 1).surface(key).values());
  EXPECT_EQ(sample_database(synth::synthetic_database(opt), 42).surface(key).values(),
            sampler.draw(42, 0).surface(key).values());
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 1));
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Sampler, ControlDrawsVanishAtZeroDeflection) {
  synth::SyntheticOptions opt;
  opt.control_noise = 1e-3;
  opt.aileron_noise = 1e-3;
  const DatabaseSampler sampler(synth::synthetic_database(opt));
  for (std::uint64_t id = 0; id < 5; ++id) {
    const auto s = sampler.draw(9, id);
    for (const auto& key : simulator_keys()) {
      if (!key.is_control()) continue;
      for (double a : {-4.0, 3.0, 11.5, 24.0}) EXPECT_EQ(s.eval(key, a, 0.0, 0.0), 0.0) << key.str();
    }
  }
}

TEST(Sampler, ZeroUncertaintyDrawsEqualMean) {
  const DatabaseSampler sampler(synth::zero_uncertainty_database());
  const auto mean = sampler.mean();
  const auto draw = sampler.draw(3, 0);
  // The covariance nugget leaves a predictive sd of about 1e-5 of the signal
  // scale at the training nodes.
  for (const auto& [key, surface] : mean.surfaces()) {
    const auto& m = surface.values();
    const double scale = *std::max_element(m.begin(), m.end()) - *std::min_element(m.begin(), m.end());
    const auto& v = draw.surfaces().at(key).values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      ASSERT_NEAR(v[i], m[i], 1e-6 + 1e-4 * scale) << key;
    }
  }
}

TEST(Sampler, EnsembleMeanApproachesSurrogateMean) {
  synth::SyntheticOptions opt;
  opt.aileron_noise = 2e-3;
  const DatabaseSampler sampler(synth::synthetic_database(opt));
  const auto key = CoefficientKey::parse("C_l:aileron");
  const auto mean = sampler.mean();
  const std::vector<std::array<double, 3>> probes{{2.0, 0.0, 10.0}, {13.0, 4.0, -15.0}, {20.0, -4.0, 25.0}};
  const int n = 1000;
  std::vector<double> sum(probes.size(), 0.0), sum2(probes.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    const auto s = sampler.draw(77, static_cast<std::uint64_t>(i));
    for (std::size_t p = 0; p < probes.size(); ++p) {
      const double v = s.eval(key, probes[p][0], probes[p][1], probes[p][2]);
      sum[p] += v;
      sum2[p] += v * v;
    }
  }
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const double m = sum[p] / n;
    const double sd = std::sqrt(std::max(sum2[p] / n - m * m, 0.0));
    const double target = mean.eval(key, probes[p][0], probes[p][1], probes[p][2]);
    EXPECT_LE(std::abs(m - target), 3.0 * sd / std::sqrt(n) + 1e-12) << p;
  }
}

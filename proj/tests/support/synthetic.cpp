#include "synthetic.hpp"

#include <stdexcept>
#include <vector>

namespace mfdb::testing {

double truth(const std::string& key, double a, double b, double d) {
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
  throw std::invalid_argument("no truth model for " + key);
}

namespace {

std::vector<double> span(double lo, double hi, double step) {
  std::vector<double> v;
  for (double x = lo; x <= hi + 1e-9; x += step) v.push_back(x);
  return v;
}

double deflection_limit(aero::Surface s) {
  switch (s) {
    case aero::Surface::kAileron: return 25.0;
    case aero::Surface::kElevator: return 30.0;
    default: return 35.0;
  }
}

}  // namespace

aero::DatabaseModel synthetic_database(const SyntheticOptions& options) {
  aero::DatabaseModel db;
  for (const auto& key : aero::simulator_keys()) {
    const auto sig = key.input_signature();
    const std::size_t dim = sig.size();
    const bool control = key.is_control();
    const bool uses_beta = dim >= 2 && sig[1] == "beta";

    std::vector<std::vector<double>> train;  // alpha, beta, delta triples
    std::vector<std::vector<double>> axes;
    const auto alpha_train = span(-4.0, 24.0, 4.0);
    const std::vector<double> beta_train = uses_beta ? std::vector<double>{-8.0, 0.0, 8.0}
                                                     : std::vector<double>{0.0};
    std::vector<double> delta_train{0.0};
    if (control) {
      const double lim = deflection_limit(*key.surface);
      delta_train = {-lim, -0.5 * lim, 0.0, 0.5 * lim, lim};
    }
    if (options.sample_at_training_nodes) {
      axes.push_back(alpha_train);
      if (uses_beta) axes.push_back(beta_train);
      if (control) axes.push_back(delta_train);
    } else {
      axes.push_back(span(-4.0, 24.0, 2.0));
      if (uses_beta) axes.push_back({-4.0, 0.0, 4.0});
      if (control) {
        const double lim = deflection_limit(*key.surface);
        axes.push_back(span(-lim, lim, lim / 5.0));
      }
    }

    std::vector<double> xs, ys, sd;
    for (double a : alpha_train) {
      for (double b : beta_train) {
        for (double d : delta_train) {
          xs.push_back(a);
          if (uses_beta) xs.push_back(b);
          if (control) xs.push_back(d);
          ys.push_back(truth(key.str(), a, b, d));
          double s = options.noise;
          if (control) s = key.str() == "C_l:aileron" ? options.aileron_noise : options.control_noise;
          sd.push_back(control && d == 0.0 ? 0.0 : s);
        }
      }
    }
    const auto n = static_cast<Eigen::Index>(ys.size());
    MatrixXd x(n, static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < dim; ++c) x(i, static_cast<Eigen::Index>(c)) = xs[i * dim + c];
    }
    Dataset data(x, Eigen::Map<VectorXd>(ys.data(), n), Eigen::Map<VectorXd>(sd.data(), n), sig);

    VectorXd y = data.outputs();
    const double range = y.maxCoeff() - y.minCoeff();
    gp::KernelParams kernel;
    kernel.signal_variance = std::max(range * range, 1e-8);
    kernel.length_scales.resize(static_cast<Eigen::Index>(dim));
    kernel.length_scales(0) = 20.0 * 20.0;
    if (uses_beta) kernel.length_scales(1) = 12.0 * 12.0;
    if (control) kernel.length_scales(static_cast<Eigen::Index>(dim) - 1) = 30.0 * 30.0;

    db.entries.emplace(key.str(),
                       mfgp::MFGPModel(gp::GPModel::assemble(data, gp::BasisSpec{1}, kernel)));
    db.grid.emplace(key.str(), axes);
  }
  return db;
}

aero::DatabaseModel zero_uncertainty_database() {
  SyntheticOptions opt;
  opt.noise = opt.control_noise = opt.aileron_noise = 0.0;
  opt.sample_at_training_nodes = true;
  return synthetic_database(opt);
}

sim::SimConfig synthetic_config(double time_step) {
  sim::SimConfig c;
  c.maneuver.airspeed = 80.0;
  c.maneuver.time_step = time_step;
  c.engines.status = sim::EngineStatus::kNominal;
  c.limits = sim::Limits::reduced();
  return c;
}

}  // namespace mfdb::testing

#pragma once

#include <string>

#include "mfdb/aero_db.hpp"
#include "mfdb/flight_sim.hpp"

namespace mfdb::testing {

/// Laterally symmetric truth model of a twin-engine transport (degrees in,
/// coefficients out). Odd in beta and in the lateral deflections.
double truth(const std::string& key, double alpha, double beta, double delta);

struct SyntheticOptions {
  double noise = 1e-4;          // observation sd of every baseline coefficient
  double control_noise = 1e-4;  // observation sd of control increments
  double aileron_noise = 1e-4;  // observation sd of C_l:aileron
  bool sample_at_training_nodes = false;  // else a finer grid between them
};

/// Single-level database of the simulator keys, built from the truth model
/// with fixed kernel hyperparameters (no optimization), so it is fast and
/// exactly reproducible.
aero::DatabaseModel synthetic_database(const SyntheticOptions& options = {});

/// Noise-free database sampled only at its training nodes, where the
/// posterior has no uncertainty left.
aero::DatabaseModel zero_uncertainty_database();

/// Reversal maneuver at 80 m/s with a coarse time step.
sim::SimConfig synthetic_config(double time_step = 0.1);

}  // namespace mfdb::testing

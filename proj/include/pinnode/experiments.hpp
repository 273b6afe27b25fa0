#pragma once

#include <string>
#include <vector>

#include "pinnode/config.hpp"
#include "pinnode/pinn.hpp"

namespace pinnode {

ProblemPtr build_problem(const ExperimentConfig& config);
/// Input scaling "auto": s = (t - mid) / time_scale for the identity
/// feature map and s = t / time_scale under sinusoidal features, so the
/// features are sin(k t / time_scale).
NetworkSpec build_network(const ExperimentConfig& config, const OdeProblem& problem);
LossWeights build_weights(const ExperimentConfig& config, const OdeProblem& problem);
ObservationSet build_observations(const ExperimentConfig& config, const OdeProblem& problem);
TrainConfig build_train_config(const ExperimentConfig& config);

/// Observations from a CSV file with columns t, then one per observed
/// component (named as in the problem).
ObservationSet read_observations(const std::string& path, const OdeProblem& problem);

struct ExperimentResult {
  TrainReport report;
  ObservationSet observations;
  double noise_std = 0.0;  // empirical std of the injected noise (0 without)
};

ExperimentResult run_experiment(const ExperimentConfig& config);

/// Bundled settings: "table1-unit", "table1-weighted", "table3-features",
/// "table3-plain", "table4-low", "table4-medium", "table4-high", "table5",
/// "table1-grid".
ExperimentConfig preset_config(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace pinnode

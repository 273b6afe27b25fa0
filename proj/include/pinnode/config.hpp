#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pinnode {

/// Everything needed to reproduce one training run, plus the optional sweep
/// grid and noise-level list. Stored as flat `key = value` lines; values are
/// numbers, booleans, quoted (or bare) strings and bracketed lists.
struct ExperimentConfig {
  std::string problem;
  std::map<std::string, double> problem_params;  // "problem.<name>" keys

  int layers = 3;
  int neurons = 20;
  std::string activation = "tanh";
  std::string initializer = "glorot-normal";
  std::string features = "none";  // none | sin
  int feature_count = 10;
  bool feature_passthrough = false;
  std::string transform = "none";  // none | hard-ic | positivity
  std::string input_scaling = "auto";  // auto | none

  std::vector<double> loss_weights;  // empty: the problem's default list

  std::string optimizer = "adam";  // adam | adam+lbfgs
  double learning_rate = 1e-3;
  long epochs = 10000;
  long lbfgs_max_iterations = 15000;
  double lbfgs_tolerance = 1e-8;

  int colloc = 400;
  std::string colloc_strategy = "uniform-grid";

  std::string observations = "none";  // none | synthetic | file
  double obs_sigma = 0.0;
  int obs_count = 100;
  std::optional<std::uint64_t> obs_seed;  // unset: the run seed
  std::string obs_file;
  std::vector<int> obs_components;  // empty: every component

  int eval_points = 1000;
  long l2_every = 500;
  double divergence_threshold = 1e12;
  int threads = 0;
  std::string out = "runs";
  std::optional<std::uint64_t> seed;

  std::vector<int> sweep_layers;
  std::vector<int> sweep_neurons;
  std::vector<std::string> sweep_activations;
  std::vector<std::vector<double>> sweep_weights;
  std::vector<double> noise_sigmas;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws ConfigError with the offending line on malformed input or an
/// unknown key. A missing `problem` is allowed here and checked by
/// validate(), so partial files can be layered under command-line flags.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
/// Applies a file's assignments on top of `config`, keeping every key the
/// file does not mention.
void overlay_config(ExperimentConfig& config, const std::string& path);
void apply_config_text(ExperimentConfig& config, const std::string& text);
std::string serialize_config(const ExperimentConfig& config);

/// Applies one `key = value` assignment (value in file syntax).
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// Range and vocabulary checks; throws ConfigError.
void validate(const ExperimentConfig& config);

/// Seed precedence: the config value, then PINN_ODE_SEED, then 1.
std::uint64_t resolve_seed(const ExperimentConfig& config);

}  // namespace pinnode

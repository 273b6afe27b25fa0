#include "pinnode/experiments.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pinnode/errors.hpp"

namespace pinnode {

ProblemPtr build_problem(const ExperimentConfig& config) {
  if (config.problem.empty()) throw ConfigError("no problem given");
  return make_problem(config.problem, config.problem_params);
}

NetworkSpec build_network(const ExperimentConfig& config, const OdeProblem& problem) {
  NetworkSpec spec = NetworkSpec::uniform(config.layers, config.neurons, parse_primitive(config.activation),
                                          problem.dimension);
  spec.initializer = parse_initializer(config.initializer);
  if (config.features == "sin") {
    spec.feature_map.kind = FeatureMap::Kind::sinusoidal;
    spec.feature_map.n = config.feature_count;
    spec.feature_map.passthrough = config.feature_passthrough;
  }
  if (config.input_scaling == "auto") {
    spec.input_scale = 1.0 / problem.time_scale;
    if (spec.feature_map.kind == FeatureMap::Kind::identity) spec.input_offset = 0.5 * (problem.t_start + problem.t_end);
  }
  const TransformKind kind = parse_transform(config.transform == "none" ? "identity" : config.transform);
  if (kind != TransformKind::identity) {
    for (int j = 0; j < problem.dimension; ++j) {
      OutputTransform tr;
      tr.kind = kind;
      tr.t0 = problem.t_start;
      tr.u0 = problem.u0[static_cast<std::size_t>(j)];
      if (problem.order == 2) tr.v0 = problem.v0[static_cast<std::size_t>(j)];
      spec.transforms.push_back(tr);
    }
  }
  spec.validate();
  return spec;
}

LossWeights build_weights(const ExperimentConfig& config, const OdeProblem& problem) {
  return LossWeights::from_list(problem, config.loss_weights.empty() ? problem.default_weights : config.loss_weights);
}

ObservationSet read_observations(const std::string& path, const OdeProblem& problem) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open observation file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("observation file '" + path + "' is empty");
  ObservationSet obs;
  std::stringstream header(line);
  std::string name;
  std::getline(header, name, ',');
  while (std::getline(header, name, ',')) {
    int found = -1;
    for (std::size_t j = 0; j < problem.components.size(); ++j)
      if (problem.components[j] == name) found = static_cast<int>(j);
    if (found < 0) throw ConfigError("observation column '" + name + "' is not a component of " + problem.name);
    obs.components.push_back(found);
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream row(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(row, cell, ',')) {
      try {
        vals.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw ConfigError("bad number '" + cell + "' in " + path);
      }
    }
    if (vals.size() != obs.components.size() + 1) throw ConfigError("ragged row in " + path);
    obs.times.push_back(vals[0]);
    obs.values.insert(obs.values.end(), vals.begin() + 1, vals.end());
  }
  return obs;
}

ObservationSet build_observations(const ExperimentConfig& config, const OdeProblem& problem) {
  if (config.observations == "none") return {};
  if (config.observations == "file") return read_observations(config.obs_file, problem);
  const std::vector<double> grid = linspace(problem.t_start, problem.t_end, static_cast<std::size_t>(config.obs_count));
  const Trajectory ref = reference_positions(problem, grid);
  ObservationSet all = add_gaussian_noise(ref, config.obs_sigma, config.obs_seed.value_or(resolve_seed(config)));
  if (config.obs_components.empty()) return all;
  ObservationSet sub;
  sub.times = all.times;
  sub.sigma = all.sigma;
  for (int c : config.obs_components) {
    if (c < 0 || c >= problem.dimension) throw ConfigError("observations.components index out of range");
    sub.components.push_back(c);
  }
  for (std::size_t i = 0; i < all.size(); ++i)
    for (int c : sub.components) sub.values.push_back(all.at(i, static_cast<std::size_t>(c)));
  return sub;
}

TrainConfig build_train_config(const ExperimentConfig& config) {
  TrainConfig t;
  t.epochs = config.epochs;
  t.adam.learning_rate = config.learning_rate;
  t.lbfgs.max_iterations = config.optimizer == "adam+lbfgs" ? config.lbfgs_max_iterations : 0;
  t.lbfgs.tolerance = config.lbfgs_tolerance;
  t.colloc_count = static_cast<std::size_t>(config.colloc);
  t.colloc_strategy = parse_collocation(config.colloc_strategy);
  t.seed = resolve_seed(config);
  t.l2_every = config.l2_every;
  t.eval_points = static_cast<std::size_t>(config.eval_points);
  t.divergence_threshold = config.divergence_threshold;
  t.kernel.threads = config.threads;
  return t;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate(config);
  const ProblemPtr problem = build_problem(config);
  const NetworkSpec spec = build_network(config, *problem);
  const LossWeights weights = build_weights(config, *problem);
  ExperimentResult res;
  res.observations = build_observations(config, *problem);
  if (config.observations == "synthetic" && config.obs_sigma > 0.0) {
    const Trajectory clean = reference_positions(*problem, res.observations.times);
    double sum = 0.0, sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < res.observations.size(); ++i)
      for (std::size_t c = 0; c < res.observations.components.size(); ++c) {
        const double e = res.observations.at(i, c) - clean.at(i, res.observations.components[c]);
        sum += e;
        sq += e * e;
        ++n;
      }
    const double mean = sum / static_cast<double>(n);
    res.noise_std = std::sqrt(sq / static_cast<double>(n) - mean * mean);
  }
  res.report = train(problem, spec, weights, res.observations, build_train_config(config));
  res.report.config_echo = serialize_config(config);
  return res;
}

namespace {

ExperimentConfig table1(std::vector<double> weights) {
  ExperimentConfig c;
  c.problem = "rlc";
  c.layers = 3;
  c.neurons = 25;
  c.activation = "sine";
  c.loss_weights = std::move(weights);
  c.optimizer = "adam";
  c.learning_rate = 1e-4;
  c.epochs = 100000;
  c.colloc = 500;
  c.observations = "synthetic";
  c.obs_sigma = 0.0;
  c.obs_count = 100;
  c.seed = 1;
  return c;
}

ExperimentConfig table3(bool with_features) {
  ExperimentConfig c;
  c.problem = "lotka-volterra";
  c.layers = 6;
  c.neurons = 64;
  c.activation = "sine";
  c.features = with_features ? "sin" : "none";
  c.feature_count = 10;
  c.transform = "hard-ic";
  c.loss_weights = {1.0, 1.0, 1.0};
  c.optimizer = "adam+lbfgs";
  c.learning_rate = 1e-3;
  c.epochs = 20000;
  c.colloc = 400;
  c.seed = 1;
  return c;
}

ExperimentConfig table4(double sigma, int layers, int neurons, int colloc, long epochs) {
  ExperimentConfig c;
  c.problem = "lorenz";
  c.layers = layers;
  c.neurons = neurons;
  c.activation = "tanh";
  c.loss_weights = {1.0, 1.0, 1.0};
  c.optimizer = "adam+lbfgs";
  c.learning_rate = 1e-3;
  c.epochs = epochs;
  c.colloc = colloc;
  c.observations = "synthetic";
  c.obs_sigma = sigma;
  c.obs_count = 100;
  c.seed = 1;
  return c;
}

}  // namespace

ExperimentConfig preset_config(const std::string& name) {
  if (name == "table1-unit") return table1({1.0, 1.0, 1.0, 1.0});
  if (name == "table1-weighted") return table1({1e-7, 1e3, 1.0, 1.0});
  if (name == "table1-grid") {
    ExperimentConfig c = table1({1e-7, 1e3, 1.0, 1.0});
    c.sweep_layers = {1, 3, 9};
    c.sweep_neurons = {5, 25, 75, 100};
    c.sweep_activations = {"relu", "tanh", "sigmoid", "sine"};
    c.sweep_weights = {{1.0, 1.0, 1.0, 1.0}, {1e-7, 1e3, 1.0, 1.0}};
    return c;
  }
  if (name == "table3-features") return table3(true);
  if (name == "table3-plain") return table3(false);
  if (name == "table4-low") return table4(0.2, 3, 40, 400, 50000);
  if (name == "table4-medium") return table4(1.0, 4, 50, 500, 75000);
  if (name == "table4-high") return table4(3.0, 5, 60, 600, 100000);
  if (name == "table5") {
    ExperimentConfig c;
    c.problem = "mass-spring";
    c.layers = 3;
    c.neurons = 40;
    c.activation = "tanh";
    c.loss_weights = {1.0, 1.0};
    c.optimizer = "adam+lbfgs";
    c.learning_rate = 1e-3;
    c.epochs = 50000;
    c.colloc = 400;
    c.seed = 1;
    return c;
  }
  throw ConfigError("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
  return {"table1-unit", "table1-weighted", "table1-grid", "table3-features", "table3-plain",
          "table4-low",  "table4-medium",   "table4-high", "table5"};
}

}  // namespace pinnode

#include "pinnode/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <sstream>

#include "pinnode/errors.hpp"
#include "pinnode/network.hpp"
#include "pinnode/pinn.hpp"
#include "pinnode/problems.hpp"

namespace pinnode {

namespace {

using nlohmann::json;

struct Field {
  const char* key;
  std::function<std::optional<json>(const ExperimentConfig&)> get;  // nullopt: omit
  std::function<void(ExperimentConfig&, const json&)> set;
};

template <class T>
T as(const json& v, const char* key) {
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!v.is_number_integer() && !v.is_number_unsigned()) throw ConfigError("");
    }
    return v.get<T>();
  } catch (const std::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "': " + v.dump());
  }
}

template <class T, class M>
Field plain(const char* key, M ExperimentConfig::*member) {
  return {key, [member](const ExperimentConfig& c) -> std::optional<json> { return json(c.*member); },
          [member, key](ExperimentConfig& c, const json& v) { c.*member = as<T>(v, key); }};
}

template <class T, class M>
Field optional_field(const char* key, M ExperimentConfig::*member) {
  return {key,
          [member](const ExperimentConfig& c) -> std::optional<json> {
            if (!(c.*member)) return std::nullopt;
            return json(*(c.*member));
          },
          [member, key](ExperimentConfig& c, const json& v) { c.*member = as<T>(v, key); }};
}

template <class T, class M>
Field list(const char* key, M ExperimentConfig::*member) {
  return {key, [member](const ExperimentConfig& c) -> std::optional<json> { return json(c.*member); },
          [member, key](ExperimentConfig& c, const json& v) {
            if (!v.is_array()) throw ConfigError(std::string("'") + key + "' expects a list");
            T out;
            for (const auto& e : v) out.push_back(as<typename T::value_type>(e, key));
            c.*member = std::move(out);
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      plain<std::string>("problem", &ExperimentConfig::problem),
      plain<int>("layers", &ExperimentConfig::layers),
      plain<int>("neurons", &ExperimentConfig::neurons),
      plain<std::string>("activation", &ExperimentConfig::activation),
      plain<std::string>("initializer", &ExperimentConfig::initializer),
      plain<std::string>("features", &ExperimentConfig::features),
      plain<int>("features.count", &ExperimentConfig::feature_count),
      plain<bool>("features.passthrough", &ExperimentConfig::feature_passthrough),
      plain<std::string>("transform", &ExperimentConfig::transform),
      plain<std::string>("input_scaling", &ExperimentConfig::input_scaling),
      list<std::vector<double>>("loss_weights", &ExperimentConfig::loss_weights),
      plain<std::string>("optimizer", &ExperimentConfig::optimizer),
      plain<double>("learning_rate", &ExperimentConfig::learning_rate),
      plain<long>("epochs", &ExperimentConfig::epochs),
      plain<long>("lbfgs.max_iterations", &ExperimentConfig::lbfgs_max_iterations),
      plain<double>("lbfgs.tolerance", &ExperimentConfig::lbfgs_tolerance),
      plain<int>("colloc", &ExperimentConfig::colloc),
      plain<std::string>("colloc.strategy", &ExperimentConfig::colloc_strategy),
      plain<std::string>("observations", &ExperimentConfig::observations),
      plain<double>("observations.sigma", &ExperimentConfig::obs_sigma),
      plain<int>("observations.count", &ExperimentConfig::obs_count),
      optional_field<std::uint64_t>("observations.seed", &ExperimentConfig::obs_seed),
      plain<std::string>("observations.file", &ExperimentConfig::obs_file),
      list<std::vector<int>>("observations.components", &ExperimentConfig::obs_components),
      plain<int>("eval_points", &ExperimentConfig::eval_points),
      plain<long>("l2_every", &ExperimentConfig::l2_every),
      plain<double>("divergence_threshold", &ExperimentConfig::divergence_threshold),
      plain<int>("threads", &ExperimentConfig::threads),
      plain<std::string>("out", &ExperimentConfig::out),
      optional_field<std::uint64_t>("seed", &ExperimentConfig::seed),
      list<std::vector<int>>("sweep.layers", &ExperimentConfig::sweep_layers),
      list<std::vector<int>>("sweep.neurons", &ExperimentConfig::sweep_neurons),
      list<std::vector<std::string>>("sweep.activations", &ExperimentConfig::sweep_activations),
      {"sweep.loss_weights",
       [](const ExperimentConfig& c) -> std::optional<json> { return json(c.sweep_weights); },
       [](ExperimentConfig& c, const json& v) {
         if (!v.is_array()) throw ConfigError("'sweep.loss_weights' expects a list of lists");
         c.sweep_weights.clear();
         for (const auto& row : v) {
           if (!row.is_array()) throw ConfigError("'sweep.loss_weights' expects a list of lists");
           std::vector<double> w;
           for (const auto& e : row) w.push_back(as<double>(e, "sweep.loss_weights"));
           c.sweep_weights.push_back(std::move(w));
         }
       }},
      list<std::vector<double>>("noise.sigmas", &ExperimentConfig::noise_sigmas),
  };
  return table;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

json parse_value(const std::string& text) {
  json v = json::parse(text, nullptr, false);
  if (!v.is_discarded()) return v;
  // Bare words are strings.
  if (text.find_first_of("[]{}\",=") == std::string::npos) return json(text);
  throw ConfigError("cannot parse value '" + text + "'");
}

}  // namespace

void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value) {
  const json v = parse_value(trim(value));
  if (key.rfind("problem.", 0) == 0) {
    config.problem_params[key.substr(8)] = as<double>(v, key.c_str());
    return;
  }
  for (const Field& f : fields()) {
    if (key == f.key) {
      f.set(config, v);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig config;
  apply_config_text(config, text);
  return config;
}

void apply_config_text(ExperimentConfig& config, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    try {
      apply_setting(config, key, body.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

static std::string read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_config_file(path)); }

void overlay_config(ExperimentConfig& config, const std::string& path) {
  try {
    apply_config_text(config, read_config_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string serialize_config(const ExperimentConfig& config) {
  std::ostringstream out;
  for (const Field& f : fields()) {
    if (auto v = f.get(config)) out << f.key << " = " << v->dump() << "\n";
    if (std::string(f.key) == "problem")
      for (const auto& [k, val] : config.problem_params) out << "problem." << k << " = " << json(val).dump() << "\n";
  }
  return out.str();
}

void validate(const ExperimentConfig& c) {
  if (c.problem.empty()) throw ConfigError("no problem given");
  make_problem(c.problem, c.problem_params);
  if (c.layers < 1 || c.neurons < 1) throw ConfigError("layers and neurons must be >= 1");
  parse_primitive(c.activation);
  parse_initializer(c.initializer);
  if (c.features != "none" && c.features != "sin") throw ConfigError("features must be 'none' or 'sin'");
  if (c.feature_count < 1) throw ConfigError("features.count must be >= 1");
  parse_transform(c.transform == "none" ? "identity" : c.transform);
  if (c.input_scaling != "auto" && c.input_scaling != "none") throw ConfigError("input_scaling must be 'auto' or 'none'");
  if (c.optimizer != "adam" && c.optimizer != "adam+lbfgs") throw ConfigError("optimizer must be 'adam' or 'adam+lbfgs'");
  if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (c.epochs < 0 || c.lbfgs_max_iterations < 0) throw ConfigError("iteration counts must be >= 0");
  if (!(c.lbfgs_tolerance >= 0.0)) throw ConfigError("lbfgs.tolerance must be >= 0");
  if (c.colloc < 1) throw ConfigError("colloc must be >= 1");
  parse_collocation(c.colloc_strategy);
  if (c.observations != "none" && c.observations != "synthetic" && c.observations != "file")
    throw ConfigError("observations must be 'none', 'synthetic' or 'file'");
  if (!(c.obs_sigma >= 0.0)) throw ConfigError("observations.sigma must be >= 0");
  if (c.obs_count < 1) throw ConfigError("observations.count must be >= 1");
  if (c.observations == "file" && c.obs_file.empty()) throw ConfigError("observations.file is required");
  if (c.eval_points < 2) throw ConfigError("eval_points must be >= 2");
  if (!(c.divergence_threshold > 0.0)) throw ConfigError("divergence_threshold must be > 0");
  if (c.threads < 0) throw ConfigError("threads must be >= 0");
  for (const auto& a : c.sweep_activations) parse_primitive(a);
  for (double s : c.noise_sigmas)
    if (!(s >= 0.0)) throw ConfigError("noise sigmas must be >= 0");
}

std::uint64_t resolve_seed(const ExperimentConfig& config) {
  if (config.seed) return *config.seed;
  if (const char* env = std::getenv("PINN_ODE_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (*end != '\0') throw ConfigError("PINN_ODE_SEED must be a non-negative integer");
    return v;
  }
  return 1;
}

}  // namespace pinnode

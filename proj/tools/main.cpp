// pinn-ode: command-line front end.
//
//   pinn-ode solve       reference trajectory of a preset problem
//   pinn-ode train       one PINN training run
//   pinn-ode sweep       grid over layers x neurons x activations x weights
//   pinn-ode noise-study Lorenz runs at several noise levels
//   pinn-ode report      summarize report.json files under a directory
//
// Exit codes: 0 success, 2 configuration error, 3 divergence, 4 internal failure.

#include <CLI11.hpp>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "pinnode/errors.hpp"
#include "pinnode/experiments.hpp"
#include "pinnode/io.hpp"

namespace fs = std::filesystem;
using namespace pinnode;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kDiverged = 3;
constexpr int kInternal = 4;

struct Flags {
  std::string problem;
  std::vector<std::string> configs;
  std::string preset;
  std::string seed;
  std::string epochs;
  std::string layers;
  std::string neurons;
  std::string activation;
  std::string loss_weights;
  std::string colloc;
  std::string out;
  std::string t_end;
  std::string sigma;
  int workers = 1;
  bool quick = false;
};

std::string as_list(const std::string& s) {
  if (!s.empty() && s.front() == '[') return s;
  return "[" + s + "]";
}

// Layers the command-line flags over a file or preset; flags win.
ExperimentConfig with_flags(ExperimentConfig c, const Flags& f) {
  const auto set = [&](const char* key, const std::string& v) {
    if (!v.empty()) apply_setting(c, key, v);
  };
  if (!f.problem.empty()) apply_setting(c, "problem", "\"" + f.problem + "\"");
  set("seed", f.seed);
  set("epochs", f.epochs);
  set("layers", f.layers);
  set("neurons", f.neurons);
  if (!f.activation.empty()) apply_setting(c, "activation", "\"" + f.activation + "\"");
  if (!f.loss_weights.empty()) apply_setting(c, "loss_weights", as_list(f.loss_weights));
  set("colloc", f.colloc);
  if (!f.out.empty()) apply_setting(c, "out", "\"" + f.out + "\"");
  set("problem.t_end", f.t_end);
  return c;
}

// Preset (or the fallback when neither preset nor files are given), then
// each config file in order.
ExperimentConfig base_config(const Flags& f, const std::string& fallback_preset = "") {
  ExperimentConfig c;
  if (!f.preset.empty())
    c = preset_config(f.preset);
  else if (f.configs.empty() && !fallback_preset.empty())
    c = preset_config(fallback_preset);
  for (const auto& path : f.configs) overlay_config(c, path);
  return c;
}

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--problem", f.problem, "Problem preset (lorenz, lotka-volterra, mass-spring, rlc)");
  app->add_option("--config", f.configs, "Config file (key = value lines)");
  app->add_option("--preset", f.preset, "Bundled experiment preset");
  app->add_option("--seed", f.seed, "Random seed (fallback: PINN_ODE_SEED)");
  app->add_option("--epochs", f.epochs, "Adam iterations");
  app->add_option("--layers", f.layers, "Hidden layers");
  app->add_option("--neurons", f.neurons, "Neurons per hidden layer");
  app->add_option("--activation", f.activation, "tanh, sigmoid, relu, sine or swish");
  app->add_option("--loss-weights", f.loss_weights, "Comma-separated loss weights in the problem's layout");
  app->add_option("--colloc", f.colloc, "Collocation points");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--t-end", f.t_end, "End of the time domain");
  app->add_option("--sigma", f.sigma, "Noise level(s), comma-separated");
  app->add_option("--workers", f.workers, "Parallel sweep cells")->check(CLI::PositiveNumber);
  app->add_flag("--quick", f.quick, "Small CI-sized variant");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// --- solve ---------------------------------------------------------------------

int cmd_solve(const Flags& f) {
  ExperimentConfig c = with_flags(base_config(f), f);
  if (c.problem.empty()) throw ConfigError("solve needs --problem");
  const ProblemPtr p = build_problem(c);
  const std::string out = f.out.empty() ? "runs/solve" : f.out;
  const Rk45Options opts;
  const Trajectory traj =
      adaptive_rk45_integrate(*p, p->t_start, p->t_end, static_cast<std::size_t>(c.eval_points), opts);
  fs::create_directories(out);
  write_trajectory_csv((fs::path(out) / "trajectory.csv").string(), traj);

  nlohmann::json meta;
  meta["problem"] = p->name;
  meta["parameters"] = p->params;
  meta["t_start"] = p->t_start;
  meta["t_end"] = p->t_end;
  meta["points"] = traj.size();
  meta["columns"] = traj.columns;
  meta["method"] = traj.method;
  meta["rtol"] = traj.rtol;
  meta["atol"] = traj.atol;
  meta["accepted_steps"] = traj.accepted;
  meta["rejected_steps"] = traj.rejected;
  double inf_norm = 0.0;
  for (double v : traj.states) inf_norm = std::max(inf_norm, std::abs(v));
  meta["max_abs_state"] = inf_norm;
  if (p->has_analytic()) {
    double err = 0.0;
    std::vector<double> s(static_cast<std::size_t>(p->state_dimension()));
    for (std::size_t i = 0; i < traj.size(); ++i) {
      p->analytic_state(traj.times[i], s);
      for (int j = 0; j < traj.dim; ++j) err = std::max(err, std::abs(traj.at(i, j) - s[static_cast<std::size_t>(j)]));
    }
    meta["max_abs_error_vs_closed_form"] = err;
  }
  meta["files"] = {"trajectory.csv", "solution.svg", "solve.json"};

  std::vector<PlotSeries> series;
  for (int j = 0; j < traj.dim; ++j) {
    PlotSeries s{traj.columns[static_cast<std::size_t>(j)], traj.times, {}};
    for (std::size_t i = 0; i < traj.size(); ++i) s.y.push_back(traj.at(i, j));
    series.push_back(std::move(s));
  }
  write_text((fs::path(out) / "solution.svg").string(),
             line_plot_svg(p->name + ": reference solution (" + traj.method + ")", "t", "state", series));
  write_text((fs::path(out) / "solve.json").string(), meta.dump(2) + "\n");
  std::cout << "solve " << p->name << ": " << traj.size() << " points on [" << p->t_start << ", " << p->t_end
            << "], " << traj.accepted << " accepted / " << traj.rejected << " rejected steps -> " << out << "\n";
  return kOk;
}

// --- train ---------------------------------------------------------------------

void print_result(const std::string& label, const ExperimentResult& r) {
  const TrainReport& rep = r.report;
  std::cout << label << ": L2 " << fmt(rep.final_l2.total) << ", loss " << fmt(rep.final_loss.total) << " (data "
            << fmt(rep.final_loss.data) << ", ode " << fmt(rep.final_loss.ode) << ", ic " << fmt(rep.final_loss.ic)
            << "), " << rep.adam_iterations << " Adam + " << rep.lbfgs_iterations << " L-BFGS iterations, "
            << fmt(rep.wall_seconds) << " s" << (rep.diverged ? ", DIVERGED: " + rep.divergence_reason : "") << "\n";
}

int cmd_train(const Flags& f) {
  ExperimentConfig c = with_flags(base_config(f), f);
  if (!f.sigma.empty()) apply_setting(c, "observations.sigma", f.sigma);
  if (f.quick) c.epochs = std::min<long>(c.epochs, 2000), c.lbfgs_max_iterations = std::min<long>(c.lbfgs_max_iterations, 500);
  if (f.out.empty() && c.out == "runs") c.out = "runs/train";
  validate(c);
  const ExperimentResult r = run_experiment(c);
  write_run(c.out, r);
  print_result("train " + c.problem, r);
  std::cout << "outputs in " << c.out << "\n";
  return r.report.diverged ? kDiverged : kOk;
}

// --- sweep ---------------------------------------------------------------------

struct Cell {
  int layers;
  int neurons;
  std::string activation;
  std::vector<double> weights;
  std::string dir;
  ExperimentResult result;
  std::string error;
};

std::string weights_label(const std::vector<double>& w) {
  std::string s;
  for (std::size_t k = 0; k < w.size(); ++k) s += (k ? ";" : "") + fmt(w[k]);
  return s;
}

int cmd_sweep(const Flags& f) {
  ExperimentConfig base = with_flags(base_config(f, "table1-grid"), f);
  if (f.quick) {
    base.sweep_layers = {3};
    base.sweep_neurons = {25};
    base.sweep_activations = {"sine"};
    const ExperimentConfig grid = preset_config("table1-grid");
    if (base.sweep_weights.empty()) base.sweep_weights = grid.sweep_weights;
  }
  if (!f.layers.empty()) base.sweep_layers = {base.layers};
  if (!f.neurons.empty()) base.sweep_neurons = {base.neurons};
  if (!f.activation.empty()) base.sweep_activations = {base.activation};
  if (!f.loss_weights.empty()) base.sweep_weights = {base.loss_weights};
  if (base.sweep_layers.empty()) base.sweep_layers = {base.layers};
  if (base.sweep_neurons.empty()) base.sweep_neurons = {base.neurons};
  if (base.sweep_activations.empty()) base.sweep_activations = {base.activation};
  if (base.sweep_weights.empty()) base.sweep_weights = {base.loss_weights};
  const std::string out = f.out.empty() ? "runs/sweep" : f.out;
  validate(base);

  std::vector<Cell> cells;
  for (int l : base.sweep_layers)
    for (int n : base.sweep_neurons)
      for (const auto& a : base.sweep_activations)
        for (std::size_t w = 0; w < base.sweep_weights.size(); ++w) {
          Cell cell{l, n, a, base.sweep_weights[w], {}, {}, {}};
          cell.dir = (fs::path(out) / ("L" + std::to_string(l) + "_N" + std::to_string(n) + "_" + a + "_w" +
                                       std::to_string(w)))
                         .string();
          cells.push_back(std::move(cell));
        }

  const int workers = std::max(1, std::min<int>(f.workers, static_cast<int>(cells.size())));
  std::atomic<std::size_t> next{0};
  std::mutex print;
  const auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < cells.size();) {
      Cell& cell = cells[k];
      ExperimentConfig c = base;
      c.sweep_layers.clear();
      c.sweep_neurons.clear();
      c.sweep_activations.clear();
      c.sweep_weights.clear();
      c.layers = cell.layers;
      c.neurons = cell.neurons;
      c.activation = cell.activation;
      c.loss_weights = cell.weights;
      c.out = cell.dir;
      if (workers > 1) c.threads = 1;
      try {
        cell.result = run_experiment(c);
        write_run(cell.dir, cell.result);
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
      std::lock_guard<std::mutex> lock(print);
      if (cell.error.empty())
        print_result(fs::path(cell.dir).filename().string(), cell.result);
      else
        std::cout << fs::path(cell.dir).filename().string() << ": FAILED: " << cell.error << "\n";
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << "layers,neurons,activation,loss_weights,l2,loss_data,loss_ode,loss_ic,loss_total,wall_seconds,diverged,error\n";
  nlohmann::json rows = nlohmann::json::array();
  for (const Cell& cell : cells) {
    const TrainReport& r = cell.result.report;
    const bool failed = !cell.error.empty();
    const auto v = [&](double x) { return failed ? std::string("nan") : fmt(x); };
    csv << cell.layers << "," << cell.neurons << "," << cell.activation << "," << weights_label(cell.weights) << ","
        << v(r.final_l2.total) << "," << v(r.final_loss.data) << "," << v(r.final_loss.ode) << ","
        << v(r.final_loss.ic) << "," << v(r.final_loss.total) << "," << v(r.wall_seconds) << ","
        << (failed || r.diverged ? 1 : 0) << ",\"" << cell.error << "\"\n";
    rows.push_back({{"layers", cell.layers},
                    {"neurons", cell.neurons},
                    {"activation", cell.activation},
                    {"loss_weights", cell.weights},
                    {"l2", failed || !std::isfinite(r.final_l2.total) ? nlohmann::json(nullptr) : nlohmann::json(r.final_l2.total)},
                    {"wall_seconds", r.wall_seconds},
                    {"diverged", failed || r.diverged},
                    {"error", cell.error},
                    {"dir", cell.dir}});
  }
  write_text((fs::path(out) / "results.csv").string(), csv.str());
  write_text((fs::path(out) / "results.json").string(), rows.dump(2) + "\n");
  std::cout << cells.size() << " cells -> " << (fs::path(out) / "results.csv").string() << "\n";
  return kOk;
}

// --- noise study -----------------------------------------------------------------

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("bad number '" + item + "'");
    }
  }
  return out;
}

int cmd_noise_study(const Flags& f) {
  std::vector<ExperimentConfig> rows;
  if (!f.configs.empty()) {
    for (const auto& path : f.configs) rows.push_back(load_config(path));
  } else {
    for (const char* name : {"table4-low", "table4-medium", "table4-high"}) rows.push_back(preset_config(name));
  }
  std::vector<ExperimentConfig> runs;
  const std::vector<double> sigmas = f.sigma.empty() ? std::vector<double>{} : parse_list(f.sigma);
  for (ExperimentConfig c : rows) {
    c = with_flags(c, f);
    if (f.quick) c.epochs = std::min<long>(c.epochs, 2000), c.lbfgs_max_iterations = std::min<long>(c.lbfgs_max_iterations, 500);
    const std::vector<double> levels = !sigmas.empty() ? sigmas
                                       : !c.noise_sigmas.empty() ? c.noise_sigmas
                                                                 : std::vector<double>{c.obs_sigma};
    for (double s : levels) {
      ExperimentConfig r = c;
      r.noise_sigmas.clear();
      r.observations = "synthetic";
      r.obs_sigma = s;
      runs.push_back(r);
    }
  }
  const std::string out = f.out.empty() ? "runs/noise" : f.out;
  std::ostringstream csv;
  csv << "sigma,layers,neurons,colloc,epochs,loss_total,loss_data,loss_ode,loss_ic,l2,noise_std,wall_seconds,diverged\n";
  bool any_diverged = false;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    ExperimentConfig& c = runs[k];
    c.out = (fs::path(out) / ("run" + std::to_string(k) + "_sigma_" + fmt(c.obs_sigma))).string();
    validate(c);
    const ExperimentResult r = run_experiment(c);
    write_run(c.out, r);
    const TrainReport& rep = r.report;
    const std::size_t d = rep.components.size();
    if (d >= 2) {
      // Phase-space data: predicted and reference states side by side.
      std::ostringstream phase;
      phase << "t";
      for (const auto& name : rep.components) phase << "," << name;
      for (const auto& name : rep.components) phase << "," << name << "_ref";
      phase << "\n";
      for (std::size_t i = 0; i < rep.eval_times.size(); ++i) {
        phase << rep.eval_times[i];
        for (std::size_t j = 0; j < d; ++j) phase << "," << (rep.predicted.empty() ? NAN : rep.predicted[i * d + j]);
        for (std::size_t j = 0; j < d; ++j) phase << "," << rep.reference[i * d + j];
        phase << "\n";
      }
      write_text((fs::path(c.out) / "phase.csv").string(), phase.str());
      const std::size_t a = 0, b = d - 1;
      PlotSeries pred{"PINN", {}, {}}, ref{"reference", {}, {}, true};
      for (std::size_t i = 0; i < rep.eval_times.size(); ++i) {
        if (!rep.predicted.empty()) {
          pred.x.push_back(rep.predicted[i * d + a]);
          pred.y.push_back(rep.predicted[i * d + b]);
        }
        ref.x.push_back(rep.reference[i * d + a]);
        ref.y.push_back(rep.reference[i * d + b]);
      }
      write_text((fs::path(c.out) / "phase.svg").string(),
                 line_plot_svg(rep.problem + " phase plane, sigma = " + fmt(c.obs_sigma), rep.components[a],
                               rep.components[b], {pred, ref}));
    }
    print_result("sigma " + fmt(c.obs_sigma), r);
    any_diverged = any_diverged || rep.diverged;
    csv << fmt(c.obs_sigma) << "," << c.layers << "," << c.neurons << "," << c.colloc << "," << c.epochs << ","
        << fmt(rep.final_loss.total) << "," << fmt(rep.final_loss.data) << "," << fmt(rep.final_loss.ode) << ","
        << fmt(rep.final_loss.ic) << "," << fmt(rep.final_l2.total) << "," << fmt(r.noise_std) << ","
        << fmt(rep.wall_seconds) << "," << (rep.diverged ? 1 : 0) << "\n";
  }
  write_text((fs::path(out) / "noise_study.csv").string(), csv.str());
  std::cout << runs.size() << " runs -> " << (fs::path(out) / "noise_study.csv").string() << "\n";
  return any_diverged ? kDiverged : kOk;
}

// --- report --------------------------------------------------------------------

int cmd_report(const Flags& f) {
  const std::string dir = f.out.empty() ? "runs" : f.out;
  if (!fs::is_directory(dir)) throw ConfigError("no such directory '" + dir + "'");
  std::vector<fs::path> reports;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() == "report.json") reports.push_back(e.path());
  if (reports.empty()) throw ConfigError("no report.json under '" + dir + "'");
  std::sort(reports.begin(), reports.end());

  std::ostringstream csv, md;
  csv << "run,problem,seed,l2,loss_total,loss_data,loss_ode,loss_ic,adam_iterations,lbfgs_iterations,wall_seconds,diverged,missing_files\n";
  md << "| run | problem | L2 | total loss | iterations | seconds | diverged |\n|---|---|---|---|---|---|---|\n";
  const auto str = [](const nlohmann::json& v) {
    return v.is_number() ? fmt(v.get<double>()) : std::string("nan");
  };
  for (const auto& path : reports) {
    const nlohmann::json j = nlohmann::json::parse(read_text(path.string()));
    const std::string run = fs::relative(path.parent_path(), dir).string();
    int missing = 0;
    for (const auto& name : j.value("files", nlohmann::json::array())) {
      const fs::path p = path.parent_path() / name.get<std::string>();
      if (!fs::exists(p) || fs::file_size(p) == 0) ++missing;
    }
    const auto& fl = j["final_loss"];
    csv << run << "," << j.value("problem", "") << "," << j.value("seed", 0ULL) << "," << str(j["final_l2"]["total"])
        << "," << str(fl["total"]) << "," << str(fl["data"]) << "," << str(fl["ode"]) << "," << str(fl["ic"]) << ","
        << j.value("adam_iterations", 0L) << "," << j.value("lbfgs_iterations", 0L) << ","
        << str(j["wall_seconds"]) << "," << (j.value("diverged", false) ? 1 : 0) << "," << missing << "\n";
    md << "| " << (run == "." ? "" : run) << " | " << j.value("problem", "") << " | " << str(j["final_l2"]["total"])
       << " | " << str(fl["total"]) << " | " << j.value("adam_iterations", 0L) << "+" << j.value("lbfgs_iterations", 0L)
       << " | " << str(j["wall_seconds"]) << " | " << (j.value("diverged", false) ? "yes" : "no") << " |\n";
  }
  write_text((fs::path(dir) / "summary.csv").string(), csv.str());
  write_text((fs::path(dir) / "summary.md").string(), md.str());
  std::cout << md.str();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed neural networks for ODE systems"};
  app.require_subcommand(1);
  Flags flags;
  auto* solve = app.add_subcommand("solve", "Reference trajectory (Dormand-Prince) of a problem preset");
  auto* train = app.add_subcommand("train", "Train one PINN and write report, CSVs and SVG plots");
  auto* sweep = app.add_subcommand("sweep", "Grid of layers x neurons x activations x loss weights");
  auto* noise = app.add_subcommand("noise-study", "Runs at several observation-noise levels");
  auto* report = app.add_subcommand("report", "Summarize report.json files under --out");
  for (auto* sub : {solve, train, sweep, noise, report}) add_common(sub, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*solve) return cmd_solve(flags);
    if (*train) return cmd_train(flags);
    if (*sweep) return cmd_sweep(flags);
    if (*noise) return cmd_noise_study(flags);
    if (*report) return cmd_report(flags);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kDiverged;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}

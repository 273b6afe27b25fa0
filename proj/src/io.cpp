#include "pinnode/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "pinnode/errors.hpp"

namespace pinnode {

namespace fs = std::filesystem;

void write_text(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

// Shortest representation that round-trips.
std::string num(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string join(const std::vector<std::string>& cols) {
  std::string s;
  for (std::size_t i = 0; i < cols.size(); ++i) s += (i ? "," : "") + cols[i];
  return s;
}

}  // namespace

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ostringstream out;
  std::vector<std::string> head{"t"};
  head.insert(head.end(), traj.columns.begin(), traj.columns.end());
  out << join(head) << "\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << num(traj.times[i]);
    for (int j = 0; j < traj.dim; ++j) out << "," << num(traj.at(i, j));
    out << "\n";
  }
  write_text(path, out.str());
}

void write_history_csv(const std::string& path, const TrainReport& report) {
  std::ostringstream out;
  out << "iteration,stage,data,ode,ic,total\n";
  for (const HistoryRow& h : report.history)
    out << h.iteration << "," << (h.stage == 'a' ? "adam" : "lbfgs") << "," << num(h.loss.data) << ","
        << num(h.loss.ode) << "," << num(h.loss.ic) << "," << num(h.loss.total) << "\n";
  write_text(path, out.str());
}

void write_l2_csv(const std::string& path, const TrainReport& report) {
  std::ostringstream out;
  std::vector<std::string> head{"iteration", "total"};
  head.insert(head.end(), report.components.begin(), report.components.end());
  out << join(head) << "\n";
  for (const L2Sample& s : report.l2_history) {
    out << s.iteration << "," << num(s.total);
    for (double c : s.components) out << "," << num(c);
    out << "\n";
  }
  write_text(path, out.str());
}

void write_prediction_csv(const std::string& path, const TrainReport& report) {
  std::ostringstream out;
  std::vector<std::string> head{"t"};
  head.insert(head.end(), report.components.begin(), report.components.end());
  for (const auto& c : report.components) head.push_back(c + "_ref");
  out << join(head) << "\n";
  const std::size_t d = report.components.size();
  for (std::size_t i = 0; i < report.eval_times.size(); ++i) {
    out << num(report.eval_times[i]);
    for (std::size_t j = 0; j < d; ++j) out << "," << (report.predicted.empty() ? "nan" : num(report.predicted[i * d + j]));
    for (std::size_t j = 0; j < d; ++j) out << "," << num(report.reference[i * d + j]);
    out << "\n";
  }
  write_text(path, out.str());
}

void write_observations_csv(const std::string& path, const ObservationSet& obs, const std::vector<std::string>& names) {
  std::ostringstream out;
  std::vector<std::string> head{"t"};
  for (int c : obs.components) head.push_back(names[static_cast<std::size_t>(c)]);
  out << join(head) << "\n";
  for (std::size_t i = 0; i < obs.size(); ++i) {
    out << num(obs.times[i]);
    for (std::size_t c = 0; c < obs.components.size(); ++c) out << "," << num(obs.at(i, c));
    out << "\n";
  }
  write_text(path, out.str());
}

nlohmann::json report_to_json(const TrainReport& r) {
  using nlohmann::json;
  const auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json j;
  j["problem"] = r.problem;
  j["seed"] = r.seed;
  j["components"] = r.components;
  j["diverged"] = r.diverged;
  if (r.diverged) j["divergence_reason"] = r.divergence_reason;
  j["adam_iterations"] = r.adam_iterations;
  j["lbfgs_iterations"] = r.lbfgs_iterations;
  j["lbfgs_status"] = r.lbfgs_status;
  j["wall_seconds"] = r.wall_seconds;
  j["final_loss"] = {{"data", finite_or_null(r.final_loss.data)},
                     {"ode", finite_or_null(r.final_loss.ode)},
                     {"ic", finite_or_null(r.final_loss.ic)},
                     {"total", finite_or_null(r.final_loss.total)}};
  json l2 = {{"total", finite_or_null(r.final_l2.total)}};
  for (std::size_t k = 0; k < r.final_l2.components.size() && k < r.components.size(); ++k)
    l2[r.components[k]] = finite_or_null(r.final_l2.components[k]);
  j["final_l2"] = l2;
  if (!r.history.empty()) {
    const HistoryRow& first = r.history.front();
    j["initial_loss"] = {{"data", first.loss.data}, {"ode", first.loss.ode}, {"ic", first.loss.ic},
                         {"total", first.loss.total}};
  }
  j["history_length"] = r.history.size();
  j["eval_points"] = r.eval_times.size();
  j["config"] = r.config_echo;
  return j;
}

// --- SVG -------------------------------------------------------------------------

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

std::string escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    switch (c) {
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '&': o += "&amp;"; break;
      default: o += c;
    }
  }
  return o;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series, bool log_y) {
  const double W = 720, H = 440, left = 80, right = 150, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  const auto ty = [&](double y) { return log_y ? std::log10(y) : y; };
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0.0)) continue;
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, ty(s.y[i]));
      ymax = std::max(ymax, ty(s.y[i]));
    }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymin -= 0.5, ymax += 0.5;
  const double pad = 0.04 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;
  const auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  const auto py = [&](double y) { return top + (1.0 - (ty(y) - ymin) / (ymax - ymin)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double fx = xmin + (xmax - xmin) * k / 5.0, fy = ymin + (ymax - ymin) * k / 5.0;
    const double gx = left + pw * k / 5.0, gy = top + ph * (1.0 - k / 5.0);
    o << "<line x1=\"" << gx << "\" y1=\"" << top << "\" x2=\"" << gx << "\" y2=\"" << top + ph
      << "\" stroke=\"#ddd\"/>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << gy << "\" x2=\"" << left + pw << "\" y2=\"" << gy
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << gx << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << tick(fx) << "</text>\n";
    o << "<text x=\"" << left - 6 << "\" y=\"" << gy + 4 << "\" text-anchor=\"end\">"
      << (log_y ? "1e" + tick(fy) : tick(fy)) << "</text>\n";
  }
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 18 << "\" text-anchor=\"middle\">" << escape(x_label)
    << "</text>\n";
  o << "<text transform=\"translate(20," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << escape(y_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const PlotSeries& s = series[k];
    const char* color = kPalette[k % (sizeof kPalette / sizeof *kPalette)];
    if (s.markers) {
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0.0)) continue;
        o << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"2\" fill=\"" << color << "\"/>\n";
      }
    } else {
      o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
      if (s.dashed) o << " stroke-dasharray=\"6,4\"";
      o << " points=\"";
      // Thin very long series to at most ~2000 vertices.
      const std::size_t n = std::min(s.x.size(), s.y.size());
      const std::size_t stride = std::max<std::size_t>(1, n / 2000);
      for (std::size_t i = 0; i < n; i += stride) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]) || (log_y && s.y[i] <= 0.0)) continue;
        o << px(s.x[i]) << "," << py(s.y[i]) << " ";
      }
      o << "\"/>\n";
    }
    const double ly = top + 14 + 18.0 * static_cast<double>(k);
    o << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 36 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6,4\"" : "")
      << "/>\n";
    o << "<text x=\"" << left + pw + 42 << "\" y=\"" << ly + 4 << "\">" << escape(s.name) << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

std::vector<std::string> write_run(const std::string& dir, const ExperimentResult& result) {
  const TrainReport& r = result.report;
  fs::create_directories(dir);
  const auto path = [&](const std::string& name) { return (fs::path(dir) / name).string(); };
  std::vector<std::string> files;

  write_history_csv(path("history.csv"), r);
  files.push_back("history.csv");
  write_l2_csv(path("l2_history.csv"), r);
  files.push_back("l2_history.csv");
  write_prediction_csv(path("prediction.csv"), r);
  files.push_back("prediction.csv");
  if (!result.observations.empty()) {
    write_observations_csv(path("observations.csv"), result.observations, r.components);
    files.push_back("observations.csv");
  }
  write_text(path("config.toml"), r.config_echo);
  files.push_back("config.toml");

  const std::size_t d = r.components.size();
  std::vector<PlotSeries> sol;
  for (std::size_t j = 0; j < d; ++j) {
    PlotSeries ref{r.components[j] + " reference", r.eval_times, {}, true};
    PlotSeries pred{r.components[j] + " PINN", r.eval_times, {}};
    for (std::size_t i = 0; i < r.eval_times.size(); ++i) {
      ref.y.push_back(r.reference[i * d + j]);
      pred.y.push_back(r.predicted.empty() ? std::nan("") : r.predicted[i * d + j]);
    }
    sol.push_back(std::move(pred));
    sol.push_back(std::move(ref));
  }
  for (std::size_t c = 0; c < result.observations.components.size(); ++c) {
    PlotSeries obs{r.components[static_cast<std::size_t>(result.observations.components[c])] + " observed",
                   result.observations.times, {}};
    obs.markers = true;
    for (std::size_t i = 0; i < result.observations.size(); ++i) obs.y.push_back(result.observations.at(i, c));
    sol.push_back(std::move(obs));
  }
  write_text(path("solution.svg"), line_plot_svg(r.problem + ": prediction vs reference", "t", "u(t)", sol));
  files.push_back("solution.svg");

  std::vector<PlotSeries> loss(4);
  const char* names[] = {"total", "data", "ode", "ic"};
  for (int k = 0; k < 4; ++k) loss[static_cast<std::size_t>(k)].name = names[k];
  for (const HistoryRow& h : r.history) {
    const double vals[] = {h.loss.total, h.loss.data, h.loss.ode, h.loss.ic};
    for (std::size_t k = 0; k < 4; ++k) {
      loss[k].x.push_back(static_cast<double>(h.iteration));
      loss[k].y.push_back(vals[k]);
    }
  }
  write_text(path("loss_history.svg"), line_plot_svg(r.problem + ": training loss", "iteration", "loss", loss, true));
  files.push_back("loss_history.svg");

  std::vector<PlotSeries> l2(1 + d);
  l2[0].name = "total";
  for (std::size_t j = 0; j < d; ++j) l2[1 + j].name = r.components[j];
  for (const L2Sample& s : r.l2_history) {
    l2[0].x.push_back(static_cast<double>(s.iteration));
    l2[0].y.push_back(s.total);
    for (std::size_t j = 0; j < d && j < s.components.size(); ++j) {
      l2[1 + j].x.push_back(static_cast<double>(s.iteration));
      l2[1 + j].y.push_back(s.components[j]);
    }
  }
  write_text(path("l2_history.svg"), line_plot_svg(r.problem + ": relative L2 error", "iteration", "L2", l2, true));
  files.push_back("l2_history.svg");

  nlohmann::json j = report_to_json(r);
  if (result.noise_std > 0.0) j["noise_empirical_std"] = result.noise_std;
  j["files"] = files;
  j["files"].push_back("report.json");
  write_text(path("report.json"), j.dump(2) + "\n");
  files.push_back("report.json");
  return files;
}

}  // namespace pinnode

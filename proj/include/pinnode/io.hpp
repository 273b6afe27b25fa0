#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "pinnode/experiments.hpp"
#include "pinnode/integrators.hpp"
#include "pinnode/pinn.hpp"

namespace pinnode {

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// Columns t, then one per state component.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);
/// iteration, stage, data, ode, ic, total
void write_history_csv(const std::string& path, const TrainReport& report);
/// iteration, total, then one column per component
void write_l2_csv(const std::string& path, const TrainReport& report);
/// t, predicted components, then reference components (suffix _ref)
void write_prediction_csv(const std::string& path, const TrainReport& report);
void write_observations_csv(const std::string& path, const ObservationSet& obs, const std::vector<std::string>& names);

nlohmann::json report_to_json(const TrainReport& report);

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
  bool markers = false;  // points instead of a line
};

/// Static line chart drawn with <polyline> elements. With log_y, values
/// <= 0 are dropped.
std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series, bool log_y = false);

/// Writes report.json, the CSVs, the three SVG panels and config.toml into
/// `dir`; returns the written file names (also listed in report.json).
std::vector<std::string> write_run(const std::string& dir, const ExperimentResult& result);

}  // namespace pinnode

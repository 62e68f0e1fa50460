#pragma once

#include <string>
#include <utility>
#include <vector>

#include "indiflow/sim_engine.hpp"

namespace indiflow {

struct ExpFit {
  double initial_value = 0.0;  // fitted value at t = 0
  double rate = 0.0;           // 1/s
  double r2 = 0.0;
  double window_start = 0.0, window_end = 0.0;
};

/// Least-squares line through (t, ln h) over the samples with t in
/// [t0, t1]. Throws WindowTooSmall (< 10 samples) or NonPositiveHeight.
ExpFit fit_exponential(const std::vector<double>& t, const std::vector<double>& height,
                       double t0, double t1);

/// Per-axis RMS of (y - setpoint) over t in [t0, t1]. Throws WindowTooSmall
/// when the window is empty.
Vec3 tracking_rmse(const std::vector<double>& t, const std::vector<Vec3>& y,
                   const Vec3& setpoint, double t0, double t1);

/// Time and relative vertical velocity at the first shutdown tick.
/// Throws NoTouchdown when the run never reached shutdown.
std::pair<double, double> touchdown_metrics(const SimLog& log);

/// Pearson correlation between the identified inverse-effectiveness
/// z-diagonal and the relative height, over active post-transient ticks.
/// Throws WindowTooSmall (< 30 ticks) or DegenerateSeries (zero variance).
double ginv_height_correlation(const SimLog& log, double transient = 2.0);

/// Post-process a finished run into its summary metrics. The fit window
/// skips the first `transient` seconds and stops at twice the guard height.
RunMetrics compute_metrics(const SimLog& log, const ScenarioConfig& cfg,
                           double transient = 2.0);

struct CompareReport {
  nlohmann::ordered_json json;
  std::string text;
};

CompareReport compare_report(const CompareResult& result);

/// Parse a log written by write_log_csv. Only the rows are recovered.
SimLog read_log_csv(const std::string& path);

/// Fit-vs-data table for external plotting: t, relative height, fitted curve.
void write_plot_csv(std::ostream& os, const SimLog& log, const ExpFit& fit);

}  // namespace indiflow

#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "indiflow/scenario.hpp"

namespace indiflow {

/// One control tick of the record: truth, measurements, controller outputs.
struct TickRow {
  double t = 0.0;
  Vec3 position{0, 0, 0}, velocity{0, 0, 0};
  Vec3 platform_position{0, 0, 0}, platform_velocity{0, 0, 0};
  double pitch = 0.0, roll = 0.0, thrust = 0.0;
  Vec3 flow_true{0, 0, 0}, flow_meas{0, 0, 0};
  Vec3 nu{0, 0, 0}, du{0, 0, 0};
  Vec3 g_diag{0, 0, 0}, gi_diag{0, 0, 0};
  double p_trace = 0.0;
  bool sat = false, hold = false, skip = false;
  int phase = 0;  // 0 = active, 1 = shutdown (latched)

  double relative_height() const { return position.z() - platform_position.z(); }
  double relative_vz() const { return velocity.z() - platform_velocity.z(); }
};

struct TimingStats {
  double median_s = 0.0;
  double p95_s = 0.0;
  std::size_t samples = 0;
};

TimingStats timing_stats(const std::vector<double>& wall_ns);

struct SimLog {
  std::vector<TickRow> rows;
  std::string config_echo;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string method;
  std::vector<double> step_wall_ns;  // control+estimation wall time per tick
  bool diverged = false;
  std::string divergence_reason;
};

struct RunMetrics {
  bool shutdown = false;
  bool diverged = false;
  int ticks = 0;
  std::optional<double> touchdown_time;      // s
  std::optional<double> touchdown_velocity;  // m/s, relative, at the guard
  std::optional<Vec3> tracking_rmse;         // rad/s per axis, post-transient
  std::optional<double> fit_rate;            // 1/s
  std::optional<double> fit_r2;
  std::optional<double> fit_initial_height;  // m
  TimingStats control_wall;
  int sat_count = 0, hold_count = 0, skip_count = 0;
};

struct RunResult {
  SimLog log;
  RunMetrics metrics;
};

/// Deterministic simulation of one scenario. Numerical divergence is
/// reported through the log/metrics (partial log retained), not thrown.
RunResult run_scenario(const ScenarioConfig& cfg);

struct CompareResult {
  RunResult conventional;
  RunResult direct;
  TimingStats conventional_wall;  // pooled over all repetitions
  TimingStats direct_wall;
  double wall_ratio_median = 0.0;  // direct / conventional
  int repetitions = 0;
};

/// Run the conventional and direct methods on the same config and seed.
/// Repetitions are interleaved between the arms and only accumulate timing
/// samples; the logs/metrics come from the first repetition.
CompareResult compare_methods(const ScenarioConfig& cfg, int repetitions = 20);

struct SweepEntry {
  std::string assignment;
  RunResult result;
};

/// One run per value of `param_path`, seeds offset by the value index.
std::vector<SweepEntry> sweep(const nlohmann::ordered_json& base_config,
                              const std::string& param_path,
                              const std::vector<std::string>& values);

void write_log_csv(std::ostream& os, const SimLog& log);
extern const char* const kLogCsvHeader;

nlohmann::ordered_json metrics_to_json(const RunMetrics& m, const SimLog& log);

}  // namespace indiflow

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "indiflow/dynamics.hpp"
#include "indiflow/indi_controller.hpp"

namespace indiflow {

enum class Sensing { Analytic, SyntheticFeatures };

struct EstimatorConfig {
  enum class Init { TruePerturbed, DiagonalPrior, Zero };

  double gamma_g = 0.8;      // forgetting factor when identifying G
  double gamma_ginv = 0.95;  // forgetting factor when identifying its inverse
  double p0 = 1e3;
  double epsilon_reg = 1e-6;   // estimator-side guard on the regressor norm
  double excitation = 1e-3;    // controller-side gate on the input-increment norm
  int ident_interval = 10;     // control ticks per identification window
  double ident_cutoff_hz = 5.0;   // filter cutoff for the identification pair
  Vec3 dither{0.005, 0.005, 0.02};  // probing amplitude (rad, rad, N)
  double warmup = 0.5;  // s; trim is held while the filters settle
  double perturbation = 0.2;  // relative offset applied by Init::TruePerturbed
  double condition_limit = 1e6;
  double p_trace_max = 1e4;
  Init init = Init::TruePerturbed;
  bool diagonal_only = false;

  void validate() const {
    if (!(gamma_g > 0.0 && gamma_g <= 1.0) || !(gamma_ginv > 0.0 && gamma_ginv <= 1.0))
      throw ConfigError("estimator gammas must be in (0, 1]");
    if (!(p0 > 0.0)) throw ConfigError("estimator.p0 must be > 0");
    if (epsilon_reg < 0.0) throw ConfigError("estimator.epsilon must be >= 0");
    if (excitation < 0.0) throw ConfigError("estimator.excitation must be >= 0");
    if (ident_interval < 1) throw ConfigError("estimator.ident_interval must be >= 1");
    if (!(ident_cutoff_hz > 0.0)) throw ConfigError("estimator.ident_cutoff_hz must be > 0");
    if (dither.minCoeff() < 0.0) throw ConfigError("estimator dither must be >= 0");
    if (warmup < 0.0) throw ConfigError("estimator.warmup must be >= 0");
    if (!(condition_limit > 1.0)) throw ConfigError("estimator.condition_limit must be > 1");
    if (!(p_trace_max > 0.0)) throw ConfigError("estimator.p_trace_max must be > 0");
  }
};

struct CameraConfig {
  double focal = 1.0;
  int grid_n = 5;
  double spacing = 0.3;  // m between grid features
  double fov = 2.0;
  int pair_cap = 200;

  void validate() const {
    if (!(focal > 0.0)) throw ConfigError("camera.focal must be > 0");
    if (grid_n < 2) throw ConfigError("camera.grid_n must be >= 2");
    if (!(spacing > 0.0)) throw ConfigError("camera.spacing must be > 0");
    if (!(fov > 0.0)) throw ConfigError("camera.fov must be > 0");
    if (pair_cap < 1) throw ConfigError("camera.pair_cap must be >= 1");
  }
};

/// Complete declarative description of one simulation run.
struct ScenarioConfig {
  std::string name = "custom";
  double duration = 50.0;  // s
  std::uint64_t seed = 1;
  int physics_hz = 1000;
  int control_hz = 100;
  Method method = Method::DirectGinv;
  AxisMode mode = AxisMode::Full3Axis;
  Sensing sensing = Sensing::Analytic;
  PhysicalParams physical;
  SensorParams sensor;
  CameraConfig camera;
  GainConfig gains;
  GuardConfig guard;
  EstimatorConfig estimator;
  InputLimits limits;
  InnerLoopParams inner_loop;
  PlatformMotion platform;
  Vec3 initial_position{0.0, 0.0, 3.0};
  Vec3 initial_velocity{0.0, 0.0, 0.0};
  Attitude initial_attitude;

  void validate() const;

  double control_dt() const { return 1.0 / control_hz; }
  double physics_dt() const { return 1.0 / physics_hz; }
  int substeps() const { return physics_hz / control_hz; }
  double hover_thrust() const { return physical.mass * physical.gravity; }
};

// JSON round trip. Field names double as override paths (e.g.
// "gains.setpoint_z"). Parsing is strict: unknown keys and type mismatches
// are ConfigError with the offending dotted path.
nlohmann::ordered_json config_to_json(const ScenarioConfig& cfg);
ScenarioConfig config_from_json(const nlohmann::ordered_json& j);

/// Apply one "dotted.path=value" assignment in place.
void apply_override(nlohmann::ordered_json& j, const std::string& assignment);

/// Read a config file. The file may name a `preset` to start from; its other
/// keys and then `overrides` are layered on top of that base.
ScenarioConfig load_config_file(const std::string& path,
                                const std::vector<std::string>& overrides = {});

/// Resolve a preset plus overrides without touching the filesystem.
ScenarioConfig resolve_config(const std::string& preset_name,
                              const std::vector<std::string>& overrides = {});

/// Canonical serialized form (also the config.echo.json payload).
std::string echo_config(const ScenarioConfig& cfg);

std::uint64_t fnv1a64(const std::string& data);

std::vector<std::string> preset_names();
ScenarioConfig preset_config(const std::string& name);
std::vector<ScenarioConfig> scenario_library();

}  // namespace indiflow

#include "indiflow/scenario.hpp"

#include <fstream>

namespace indiflow {

using nlohmann::ordered_json;

void ScenarioConfig::validate() const {
  if (!(duration > 0.0)) throw ConfigError("duration must be > 0");
  if (control_hz < 1) throw ConfigError("control_hz must be >= 1");
  if (physics_hz < control_hz)
    throw ConfigError("physics_hz must be >= control_hz");
  if (physics_hz % control_hz != 0)
    throw ConfigError("physics_hz must be an integer multiple of control_hz");
  physical.validate();
  sensor.validate();
  camera.validate();
  gains.validate();
  guard.validate();
  estimator.validate();
  limits.validate();
  inner_loop.validate();
  platform.validate();
  if (!(initial_attitude.pitch > -M_PI_2 && initial_attitude.pitch < M_PI_2 &&
        initial_attitude.roll > -M_PI_2 && initial_attitude.roll < M_PI_2))
    throw ConfigError("initial attitude must be within (-pi/2, pi/2)");
}

namespace {

std::string method_name(Method m) {
  switch (m) {
    case Method::ConventionalG: return "conventional";
    case Method::DirectGinv: return "direct";
    case Method::AnalyticOracle: return "oracle";
  }
  return "direct";
}

Method method_from(const std::string& s, const std::string& path) {
  if (s == "conventional") return Method::ConventionalG;
  if (s == "direct") return Method::DirectGinv;
  if (s == "oracle") return Method::AnalyticOracle;
  throw ConfigError(path + ": unknown method '" + s + "'");
}

std::string mode_name(AxisMode m) {
  return m == AxisMode::VerticalOnly ? "vertical" : "full";
}

AxisMode mode_from(const std::string& s, const std::string& path) {
  if (s == "full") return AxisMode::Full3Axis;
  if (s == "vertical") return AxisMode::VerticalOnly;
  throw ConfigError(path + ": unknown mode '" + s + "'");
}

std::string sensing_name(Sensing s) {
  return s == Sensing::SyntheticFeatures ? "features" : "analytic";
}

Sensing sensing_from(const std::string& s, const std::string& path) {
  if (s == "analytic") return Sensing::Analytic;
  if (s == "features") return Sensing::SyntheticFeatures;
  throw ConfigError(path + ": unknown sensing '" + s + "'");
}

std::string platform_name(PlatformMotion::Kind k) {
  switch (k) {
    case PlatformMotion::Kind::Static: return "static";
    case PlatformMotion::Kind::Sinusoidal: return "sinusoidal";
    case PlatformMotion::Kind::Terrain: return "terrain";
  }
  return "static";
}

PlatformMotion::Kind platform_from(const std::string& s, const std::string& path) {
  if (s == "static") return PlatformMotion::Kind::Static;
  if (s == "sinusoidal") return PlatformMotion::Kind::Sinusoidal;
  if (s == "terrain") return PlatformMotion::Kind::Terrain;
  throw ConfigError(path + ": unknown platform type '" + s + "'");
}

std::string init_name(EstimatorConfig::Init i) {
  switch (i) {
    case EstimatorConfig::Init::TruePerturbed: return "true_perturbed";
    case EstimatorConfig::Init::DiagonalPrior: return "diagonal_prior";
    case EstimatorConfig::Init::Zero: return "zero";
  }
  return "true_perturbed";
}

EstimatorConfig::Init init_from(const std::string& s, const std::string& path) {
  if (s == "true_perturbed") return EstimatorConfig::Init::TruePerturbed;
  if (s == "diagonal_prior") return EstimatorConfig::Init::DiagonalPrior;
  if (s == "zero") return EstimatorConfig::Init::Zero;
  throw ConfigError(path + ": unknown estimator init '" + s + "'");
}

// Strict merge of `src` over `dst`: every key in src must exist in dst with
// a compatible JSON type.
void merge_strict(ordered_json& dst, const ordered_json& src, const std::string& path) {
  for (const auto& [key, value] : src.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!dst.contains(key)) throw ConfigError("unknown config key: " + here);
    ordered_json& target = dst[key];
    if (target.is_object()) {
      if (!value.is_object())
        throw ConfigError(here + ": expected an object");
      merge_strict(target, value, here);
      continue;
    }
    if (target.is_number() && !value.is_number())
      throw ConfigError(here + ": expected a number");
    if (target.is_string() && !value.is_string())
      throw ConfigError(here + ": expected a string");
    if (target.is_boolean() && !value.is_boolean())
      throw ConfigError(here + ": expected a boolean");
    target = value;
  }
}

double num(const ordered_json& j, const char* key) { return j.at(key).get<double>(); }

}  // namespace

ordered_json config_to_json(const ScenarioConfig& c) {
  ordered_json j;
  j["schema_version"] = 1;
  j["name"] = c.name;
  j["duration"] = c.duration;
  j["seed"] = c.seed;
  j["physics_hz"] = c.physics_hz;
  j["control_hz"] = c.control_hz;
  j["method"] = method_name(c.method);
  j["mode"] = mode_name(c.mode);
  j["sensing"] = sensing_name(c.sensing);
  j["physical"] = {{"mass", c.physical.mass},
                   {"gravity", c.physical.gravity},
                   {"drag_x", c.physical.drag_k.x()},
                   {"drag_y", c.physical.drag_k.y()},
                   {"drag_z", c.physical.drag_k.z()}};
  j["sensor"] = {{"c_x", c.sensor.c.x()},
                 {"c_y", c.sensor.c.y()},
                 {"c_z", c.sensor.c.z()},
                 {"sigma_x", c.sensor.noise_sigma.x()},
                 {"sigma_y", c.sensor.noise_sigma.y()},
                 {"sigma_z", c.sensor.noise_sigma.z()},
                 {"cutoff_hz", c.sensor.cutoff_hz},
                 {"guard_height", c.sensor.guard_height}};
  j["camera"] = {{"focal", c.camera.focal},
                 {"grid_n", c.camera.grid_n},
                 {"spacing", c.camera.spacing},
                 {"fov", c.camera.fov},
                 {"pair_cap", c.camera.pair_cap}};
  j["gains"] = {{"kp_x", c.gains.kp.x()},       {"kp_y", c.gains.kp.y()},
                {"kp_z", c.gains.kp.z()},       {"ki_x", c.gains.ki.x()},
                {"ki_y", c.gains.ki.y()},       {"ki_z", c.gains.ki.z()},
                {"kd_x", c.gains.kd.x()},       {"kd_y", c.gains.kd.y()},
                {"kd_z", c.gains.kd.z()},       {"setpoint_x", c.gains.setpoint.x()},
                {"setpoint_y", c.gains.setpoint.y()},
                {"setpoint_z", c.gains.setpoint.z()},
                {"integral_limit", c.gains.integral_limit}};
  j["guard"] = {{"min_height", c.guard.min_height}, {"flow_limit", c.guard.flow_limit}};
  j["estimator"] = {{"gamma_g", c.estimator.gamma_g},
                    {"gamma_ginv", c.estimator.gamma_ginv},
                    {"p0", c.estimator.p0},
                    {"epsilon", c.estimator.epsilon_reg},
                    {"excitation", c.estimator.excitation},
                    {"ident_interval", c.estimator.ident_interval},
                    {"ident_cutoff_hz", c.estimator.ident_cutoff_hz},
                    {"dither_theta", c.estimator.dither.x()},
                    {"dither_phi", c.estimator.dither.y()},
                    {"dither_thrust", c.estimator.dither.z()},
                    {"warmup", c.estimator.warmup},
                    {"perturbation", c.estimator.perturbation},
                    {"condition_limit", c.estimator.condition_limit},
                    {"p_trace_max", c.estimator.p_trace_max},
                    {"init", init_name(c.estimator.init)},
                    {"diagonal_only", c.estimator.diagonal_only}};
  j["limits"] = {{"theta_max", c.limits.pitch_max},
                 {"phi_max", c.limits.roll_max},
                 {"thrust_max", c.limits.thrust_max}};
  j["inner_loop"] = {{"tau_attitude", c.inner_loop.tau_attitude},
                     {"tau_thrust", c.inner_loop.tau_thrust}};
  j["platform"] = {{"type", platform_name(c.platform.kind)},
                   {"x", c.platform.offset.x()},
                   {"y", c.platform.offset.y()},
                   {"z", c.platform.offset.z()},
                   {"amp_x", c.platform.amplitude.x()},
                   {"amp_y", c.platform.amplitude.y()},
                   {"amp_z", c.platform.amplitude.z()},
                   {"omega_x", c.platform.omega.x()},
                   {"omega_y", c.platform.omega.y()},
                   {"omega_z", c.platform.omega.z()},
                   {"phase_x", c.platform.phase.x()},
                   {"phase_y", c.platform.phase.y()},
                   {"phase_z", c.platform.phase.z()},
                   {"base", c.platform.terrain_base},
                   {"bump", c.platform.terrain_bump},
                   {"wavelength", c.platform.terrain_wavelength}};
  j["initial"] = {{"x", c.initial_position.x()},  {"y", c.initial_position.y()},
                  {"z", c.initial_position.z()},  {"vx", c.initial_velocity.x()},
                  {"vy", c.initial_velocity.y()}, {"vz", c.initial_velocity.z()},
                  {"pitch", c.initial_attitude.pitch},
                  {"roll", c.initial_attitude.roll}};
  return j;
}

ScenarioConfig config_from_json(const ordered_json& file) {
  ordered_json j = config_to_json(ScenarioConfig{});
  merge_strict(j, file, "");

  if (j.at("schema_version").get<int>() != 1)
    throw ConfigError("schema_version: expected 1");

  ScenarioConfig c;
  c.name = j.at("name").get<std::string>();
  c.duration = num(j, "duration");
  c.seed = j.at("seed").get<std::uint64_t>();
  c.physics_hz = j.at("physics_hz").get<int>();
  c.control_hz = j.at("control_hz").get<int>();
  c.method = method_from(j.at("method").get<std::string>(), "method");
  c.mode = mode_from(j.at("mode").get<std::string>(), "mode");
  c.sensing = sensing_from(j.at("sensing").get<std::string>(), "sensing");

  const auto& ph = j.at("physical");
  c.physical.mass = num(ph, "mass");
  c.physical.gravity = num(ph, "gravity");
  c.physical.drag_k = Vec3(num(ph, "drag_x"), num(ph, "drag_y"), num(ph, "drag_z"));

  const auto& se = j.at("sensor");
  c.sensor.c = Vec3(num(se, "c_x"), num(se, "c_y"), num(se, "c_z"));
  c.sensor.noise_sigma = Vec3(num(se, "sigma_x"), num(se, "sigma_y"), num(se, "sigma_z"));
  c.sensor.cutoff_hz = num(se, "cutoff_hz");
  c.sensor.guard_height = num(se, "guard_height");

  const auto& ca = j.at("camera");
  c.camera.focal = num(ca, "focal");
  c.camera.grid_n = ca.at("grid_n").get<int>();
  c.camera.spacing = num(ca, "spacing");
  c.camera.fov = num(ca, "fov");
  c.camera.pair_cap = ca.at("pair_cap").get<int>();

  const auto& ga = j.at("gains");
  c.gains.kp = Vec3(num(ga, "kp_x"), num(ga, "kp_y"), num(ga, "kp_z"));
  c.gains.ki = Vec3(num(ga, "ki_x"), num(ga, "ki_y"), num(ga, "ki_z"));
  c.gains.kd = Vec3(num(ga, "kd_x"), num(ga, "kd_y"), num(ga, "kd_z"));
  c.gains.setpoint =
      Vec3(num(ga, "setpoint_x"), num(ga, "setpoint_y"), num(ga, "setpoint_z"));
  c.gains.integral_limit = num(ga, "integral_limit");

  const auto& gu = j.at("guard");
  c.guard.min_height = num(gu, "min_height");
  c.guard.flow_limit = num(gu, "flow_limit");

  const auto& es = j.at("estimator");
  c.estimator.gamma_g = num(es, "gamma_g");
  c.estimator.gamma_ginv = num(es, "gamma_ginv");
  c.estimator.p0 = num(es, "p0");
  c.estimator.epsilon_reg = num(es, "epsilon");
  c.estimator.excitation = num(es, "excitation");
  c.estimator.ident_interval = es.at("ident_interval").get<int>();
  c.estimator.ident_cutoff_hz = num(es, "ident_cutoff_hz");
  c.estimator.dither = Vec3(num(es, "dither_theta"), num(es, "dither_phi"),
                            num(es, "dither_thrust"));
  c.estimator.warmup = num(es, "warmup");
  c.estimator.perturbation = num(es, "perturbation");
  c.estimator.condition_limit = num(es, "condition_limit");
  c.estimator.p_trace_max = num(es, "p_trace_max");
  c.estimator.init = init_from(es.at("init").get<std::string>(), "estimator.init");
  c.estimator.diagonal_only = es.at("diagonal_only").get<bool>();

  const auto& li = j.at("limits");
  c.limits.pitch_max = num(li, "theta_max");
  c.limits.roll_max = num(li, "phi_max");
  c.limits.thrust_max = num(li, "thrust_max");

  const auto& il = j.at("inner_loop");
  c.inner_loop.tau_attitude = num(il, "tau_attitude");
  c.inner_loop.tau_thrust = num(il, "tau_thrust");

  const auto& pl = j.at("platform");
  c.platform.kind = platform_from(pl.at("type").get<std::string>(), "platform.type");
  c.platform.offset = Vec3(num(pl, "x"), num(pl, "y"), num(pl, "z"));
  c.platform.amplitude = Vec3(num(pl, "amp_x"), num(pl, "amp_y"), num(pl, "amp_z"));
  c.platform.omega = Vec3(num(pl, "omega_x"), num(pl, "omega_y"), num(pl, "omega_z"));
  c.platform.phase = Vec3(num(pl, "phase_x"), num(pl, "phase_y"), num(pl, "phase_z"));
  c.platform.terrain_base = num(pl, "base");
  c.platform.terrain_bump = num(pl, "bump");
  c.platform.terrain_wavelength = num(pl, "wavelength");

  const auto& in = j.at("initial");
  c.initial_position = Vec3(num(in, "x"), num(in, "y"), num(in, "z"));
  c.initial_velocity = Vec3(num(in, "vx"), num(in, "vy"), num(in, "vz"));
  c.initial_attitude.pitch = num(in, "pitch");
  c.initial_attitude.roll = num(in, "roll");

  c.validate();
  return c;
}

void apply_override(ordered_json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    parts.push_back(path.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }

  ordered_json* node = &j;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->is_object() || !node->contains(parts[i]))
      throw ConfigError("unknown config key: " + path);
    node = &(*node)[parts[i]];
  }
  const std::string& leaf = parts.back();
  if (!node->is_object() || !node->contains(leaf) || (*node)[leaf].is_object())
    throw ConfigError("unknown config key: " + path);

  ordered_json parsed = ordered_json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = value;  // treat as a plain string

  ordered_json& target = (*node)[leaf];
  if (target.is_number() && !parsed.is_number())
    throw ConfigError(path + ": expected a number");
  if (target.is_string() && !parsed.is_string())
    throw ConfigError(path + ": expected a string");
  if (target.is_boolean() && !parsed.is_boolean())
    throw ConfigError(path + ": expected a boolean");
  target = parsed;
}

namespace {

ScenarioConfig from_layers(ordered_json file, const std::vector<std::string>& overrides) {
  ordered_json base;
  std::string preset_name;
  if (file.is_object() && file.contains("preset")) {
    if (!file.at("preset").is_string())
      throw ConfigError("preset: expected a string");
    preset_name = file.at("preset").get<std::string>();
    file.erase("preset");
    base = config_to_json(preset_config(preset_name));
  } else {
    base = config_to_json(ScenarioConfig{});
  }
  if (!file.is_object()) throw ConfigError("config root must be a JSON object");
  if (!preset_name.empty() && !file.contains("name")) base["name"] = preset_name;
  merge_strict(base, file, "");
  for (const std::string& o : overrides) apply_override(base, o);
  return config_from_json(base);
}

}  // namespace

ScenarioConfig load_config_file(const std::string& path,
                                const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  ordered_json file = ordered_json::parse(in, nullptr, false);
  if (file.is_discarded()) throw ConfigError("config file is not valid JSON: " + path);
  return from_layers(std::move(file), overrides);
}

ScenarioConfig resolve_config(const std::string& preset_name,
                              const std::vector<std::string>& overrides) {
  ordered_json file = ordered_json::object();
  file["preset"] = preset_name;
  return from_layers(std::move(file), overrides);
}

std::string echo_config(const ScenarioConfig& cfg) {
  return config_to_json(cfg).dump(2) + "\n";
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (const char ch : data) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

ScenarioConfig moving_platform_base() {
  ScenarioConfig c;
  c.duration = 50.0;
  c.gains.setpoint = Vec3(0.0, 0.0, -0.1);
  c.platform.kind = PlatformMotion::Kind::Sinusoidal;
  c.platform.amplitude = Vec3(0.5, 0.5, 0.2);
  c.platform.omega = Vec3(0.3, 0.4, 0.5);
  c.initial_position = Vec3(0.0, 0.0, 3.0);
  return c;
}

// Noisy flight analogs: slower identification window, long estimator
// memory, a trusted prior, per-axis identification, and a thrust probe
// sized against the flow-noise floor.
void flight_noise_settings(ScenarioConfig& c) {
  c.sensor.noise_sigma = Vec3(0.02, 0.02, 0.05);
  c.estimator.ident_cutoff_hz = 2.0;
  c.estimator.gamma_ginv = 0.999;
  c.estimator.p0 = 1.0;
  c.estimator.dither = Vec3(0.002, 0.002, 0.05);
  c.estimator.diagonal_only = true;
}

ScenarioConfig land_static(double setpoint, double duration) {
  ScenarioConfig c;
  c.duration = duration;
  c.method = Method::DirectGinv;
  c.mode = AxisMode::VerticalOnly;
  c.gains.setpoint = Vec3(0.0, 0.0, -setpoint);
  c.platform.kind = PlatformMotion::Kind::Static;
  flight_noise_settings(c);
  return c;
}

ScenarioConfig lateral_platform_base() {
  ScenarioConfig c;
  c.method = Method::DirectGinv;
  c.platform.kind = PlatformMotion::Kind::Sinusoidal;
  c.platform.amplitude = Vec3(0.0, 0.5, 0.0);
  c.platform.omega = Vec3(0.0, 0.4, 0.0);
  flight_noise_settings(c);
  return c;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"sim-moving-platform-G", "sim-moving-platform-Ginv", "land-static-0.1",
          "land-static-0.2",       "land-static-0.3",          "hover-lateral",
          "land-lateral",          "land-undulating"};
}

ScenarioConfig preset_config(const std::string& name) {
  ScenarioConfig c;
  if (name == "sim-moving-platform-G") {
    c = moving_platform_base();
    c.method = Method::ConventionalG;
  } else if (name == "sim-moving-platform-Ginv") {
    c = moving_platform_base();
    c.method = Method::DirectGinv;
  } else if (name == "land-static-0.1") {
    c = land_static(0.1, 60.0);
  } else if (name == "land-static-0.2") {
    c = land_static(0.2, 35.0);
  } else if (name == "land-static-0.3") {
    c = land_static(0.3, 25.0);
  } else if (name == "hover-lateral") {
    c = lateral_platform_base();
    c.duration = 20.0;
    c.gains.setpoint = Vec3::Zero();
  } else if (name == "land-lateral") {
    c = lateral_platform_base();
    c.duration = 35.0;
    c.gains.setpoint = Vec3(0.0, 0.0, -0.2);
  } else if (name == "land-undulating") {
    c.method = Method::DirectGinv;
    c.duration = 60.0;
    c.gains.setpoint = Vec3(0.0, -0.8, -0.1);
    c.platform.kind = PlatformMotion::Kind::Terrain;
    c.platform.terrain_base = 0.5;
    c.platform.terrain_bump = 0.05;
    c.platform.terrain_wavelength = 6.0;
    c.initial_position = Vec3(0.0, 0.0, 3.5);
    flight_noise_settings(c);
  } else {
    throw ConfigError("unknown preset: " + name);
  }
  c.name = name;
  return c;
}

std::vector<ScenarioConfig> scenario_library() {
  std::vector<ScenarioConfig> out;
  for (const std::string& n : preset_names()) out.push_back(preset_config(n));
  return out;
}

}  // namespace indiflow

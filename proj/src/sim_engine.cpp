#include "indiflow/sim_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "indiflow/analysis.hpp"

namespace indiflow {

namespace {

constexpr double kDivergenceHeight = 100.0;  // m
constexpr double kDivergenceSpeed = 50.0;    // m/s

std::string method_label(Method m) {
  switch (m) {
    case Method::ConventionalG: return "conventional";
    case Method::DirectGinv: return "direct";
    case Method::AnalyticOracle: return "oracle";
  }
  return "direct";
}

/// Produces the raw flow observation each tick, from truth or from the
/// synthetic camera, plus measurement noise.
class FlowSource {
 public:
  FlowSource(const ScenarioConfig& cfg)
      : cfg_(cfg), rng_(cfg.seed),
        camera_(PinholeCamera::grid(cfg.camera.grid_n, cfg.camera.spacing,
                                    cfg.camera.focal, cfg.camera.fov,
                                    cfg.camera.pair_cap)) {}

  FlowObservation sense(const WorldState& w, const RelativeState& rel, double t,
                        double dt) {
    FlowObservation obs;
    obs.timestamp = t;
    if (cfg_.sensing == Sensing::Analytic) {
      if (rel.height > cfg_.sensor.guard_height) {
        obs = analytic_flow(rel, cfg_.sensor, t);
      } else {
        obs.valid = false;
      }
    } else {
      obs = sense_features(w, rel, t, dt);
    }
    if (obs.valid) obs = add_noise(obs, cfg_.sensor.noise_sigma, rng_);
    return obs;
  }

 private:
  FlowObservation sense_features(const WorldState& w, const RelativeState& rel,
                                 double t, double dt) {
    FlowObservation obs;
    obs.timestamp = t;
    obs.valid = false;
    if (rel.height <= cfg_.sensor.guard_height) {
      prev_frame_.reset();
      return obs;
    }
    const Vec2 offset = w.position.head<2>() - w.platform_position.head<2>();
    FeatureFrame frame = project_features(camera_, offset, rel.height, w.attitude, t);
    if (prev_frame_) {
      try {
        const double div =
            estimate_divergence(*prev_frame_, frame, dt, camera_.pair_cap);
        const Vec2 lat = estimate_lateral_flow(*prev_frame_, frame, dt) / camera_.focal;
        obs.flow = Vec3(lat.x(), lat.y(), div);
        obs.valid = true;
      } catch (const InsufficientFeatures&) {
      } catch (const DegeneratePairs&) {
      }
    }
    prev_frame_ = std::move(frame);
    return obs;
  }

  const ScenarioConfig& cfg_;
  GaussianSource rng_;
  PinholeCamera camera_;
  std::optional<FeatureFrame> prev_frame_;
};

Eigen::MatrixXd initial_theta(const ScenarioConfig& cfg, const RelativeState& rel0,
                              const Attitude& att0, double thrust0) {
  const bool vertical = cfg.mode == AxisMode::VerticalOnly;
  const bool inverse_mode = cfg.method == Method::DirectGinv;
  const int dim = vertical ? 1 : 3;
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(dim, dim);
  switch (cfg.estimator.init) {
    case EstimatorConfig::Init::Zero:
      break;
    case EstimatorConfig::Init::DiagonalPrior: {
      const Vec3 prior_inv(0.1, -0.1, 3.0);
      for (int i = 0; i < 3; ++i) {
        const double v = inverse_mode ? prior_inv[i] : 1.0 / prior_inv[i];
        if (vertical) {
          if (i == 2) theta(0, 0) = v;
        } else {
          theta(i, i) = v;
        }
      }
      break;
    }
    case EstimatorConfig::Init::TruePerturbed: {
      const Mat3 G = analytic_G(rel0, att0, thrust0, cfg.physical, cfg.sensor.c);
      Mat3 base = G;
      if (inverse_mode) {
        const auto inv = invert_effectiveness(G, cfg.estimator.condition_limit);
        if (!inv)
          throw ConfigError("initial state has no invertible effectiveness");
        base = *inv;
      }
      const double scale = 1.0 + cfg.estimator.perturbation;
      if (vertical)
        theta(0, 0) = scale * base(2, 2);
      else
        theta = scale * base;
      break;
    }
  }
  return theta;
}

TruthChannel make_truth(const ScenarioConfig& cfg, const RelativeState& rel,
                        const Attitude& att, double thrust) {
  TruthChannel truth;
  truth.G = analytic_G(rel, att, thrust, cfg.physical, cfg.sensor.c);
  truth.Ginv = invert_effectiveness(truth.G, cfg.estimator.condition_limit);
  truth.applied = {att.pitch, att.roll, thrust};
  return truth;
}

}  // namespace

TimingStats timing_stats(const std::vector<double>& wall_ns) {
  TimingStats s;
  s.samples = wall_ns.size();
  if (wall_ns.empty()) return s;
  std::vector<double> sorted = wall_ns;
  std::sort(sorted.begin(), sorted.end());
  const auto at = [&](double q) {
    const std::size_t idx = static_cast<std::size_t>(q * (sorted.size() - 1));
    return sorted[idx] * 1e-9;
  };
  s.median_s = at(0.5);
  s.p95_s = at(0.95);
  return s;
}

RunResult run_scenario(const ScenarioConfig& cfg) {
  cfg.validate();

  const double dtc = cfg.control_dt();
  const double dtp = cfg.physics_dt();
  const int substeps = cfg.substeps();
  const long long ticks = std::llround(cfg.duration * cfg.control_hz);

  WorldState w;
  w.position = cfg.initial_position;
  w.velocity = cfg.initial_velocity;
  w.attitude = cfg.initial_attitude;
  w.thrust = cfg.hover_thrust();
  w.time = 0.0;

  auto refresh_platform = [&](double t) {
    const Vec3 accel = translational_derivatives(w, cfg.physical);
    const PlatformState ps =
        platform_state(cfg.platform, t, w.position.head<2>(), w.velocity.head<2>(),
                       accel.head<2>());
    w.platform_position = ps.position;
    w.platform_velocity = ps.velocity;
  };
  refresh_platform(0.0);

  {
    const RelativeState rel0 = relative_state(w);
    if (!(rel0.height > 0.0))
      throw ConfigError("initial position is at or below the surface");
  }

  ControllerConfig cc;
  cc.method = cfg.method;
  cc.mode = cfg.mode;
  cc.gains = cfg.gains;
  cc.limits = cfg.limits;
  cc.derivative_cutoff_hz = cfg.sensor.cutoff_hz;
  cc.condition_limit = cfg.estimator.condition_limit;
  cc.excitation_threshold = cfg.estimator.excitation;
  cc.ident_interval = cfg.estimator.ident_interval;
  cc.ident_cutoff_hz = cfg.estimator.ident_cutoff_hz;
  cc.dither = cfg.estimator.dither;
  cc.warmup_ticks = static_cast<int>(std::lround(cfg.estimator.warmup * cfg.control_hz));
  cc.rls.gamma = cfg.method == Method::ConventionalG ? cfg.estimator.gamma_g
                                                     : cfg.estimator.gamma_ginv;
  cc.rls.p0 = cfg.estimator.p0;
  cc.rls.epsilon_reg = cfg.estimator.epsilon_reg;
  cc.rls.diagonal_only = cfg.estimator.diagonal_only;
  cc.rls.p_trace_max = cfg.estimator.p_trace_max;
  cc.trim = ControlInput{0.0, 0.0, cfg.hover_thrust()};
  if (cfg.method != Method::AnalyticOracle)
    cc.theta0 = initial_theta(cfg, relative_state(w), w.attitude, w.thrust);

  IndiController controller(cc);
  FlowSource source(cfg);

  SimLog log;
  log.config_echo = echo_config(cfg);
  log.config_hash = fnv1a64(log.config_echo);
  log.seed = cfg.seed;
  log.method = method_label(cfg.method);
  log.rows.reserve(static_cast<std::size_t>(ticks));
  log.step_wall_ns.reserve(static_cast<std::size_t>(ticks));

  FlightPhase phase = FlightPhase::Active;
  using Clock = std::chrono::steady_clock;

  for (long long k = 0; k < ticks; ++k) {
    const double t = static_cast<double>(k) * dtc;
    w.time = t;
    refresh_platform(t);
    const RelativeState rel = relative_state(w);

    if (std::abs(rel.height) > kDivergenceHeight ||
        w.velocity.norm() > kDivergenceSpeed) {
      log.diverged = true;
      log.divergence_reason = "state bound exceeded at t=" + std::to_string(t);
      break;
    }

    FlowObservation flow_true;
    if (rel.height > cfg.sensor.guard_height)
      flow_true = analytic_flow(rel, cfg.sensor, t);
    else
      flow_true.valid = false;

    phase = height_guard(rel.height, flow_true.valid ? flow_true.flow.z() : 0.0,
                         cfg.guard, phase);

    const FlowObservation obs = source.sense(w, rel, t, dtc);
    const TruthChannel truth = make_truth(cfg, rel, w.attitude, w.thrust);

    const auto t0 = Clock::now();
    const ControlStepResult step = controller.step(obs, dtc, truth);
    const auto t1 = Clock::now();
    log.step_wall_ns.push_back(
        static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));

    TickRow row;
    row.t = t;
    row.position = w.position;
    row.velocity = w.velocity;
    row.platform_position = w.platform_position;
    row.platform_velocity = w.platform_velocity;
    row.pitch = w.attitude.pitch;
    row.roll = w.attitude.roll;
    row.thrust = w.thrust;
    row.flow_true = flow_true.flow;
    row.flow_meas = step.y_filtered;
    row.nu = step.nu;
    row.du = step.du;
    row.g_diag = step.g_diag;
    row.gi_diag = step.gi_diag;
    row.p_trace = step.p_trace;
    row.sat = step.saturated;
    row.hold = step.held;
    row.skip = step.skipped;
    row.phase = phase == FlightPhase::Shutdown ? 1 : 0;
    log.rows.push_back(row);

    if (phase == FlightPhase::Shutdown) break;

    try {
      for (int s = 0; s < substeps; ++s)
        w = integrate_step(w, step.command, dtp, cfg.physical, cfg.inner_loop,
                           cfg.limits, cfg.platform);
    } catch (const DegenerateHeight&) {
      log.diverged = true;
      log.divergence_reason = "surface contact between ticks at t=" + std::to_string(t);
      break;
    }
  }

  RunResult result;
  result.metrics = compute_metrics(log, cfg);
  result.log = std::move(log);
  return result;
}

CompareResult compare_methods(const ScenarioConfig& cfg, int repetitions) {
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");

  ScenarioConfig conventional = cfg;
  conventional.method = Method::ConventionalG;
  ScenarioConfig direct = cfg;
  direct.method = Method::DirectGinv;

  CompareResult out;
  out.repetitions = repetitions;
  std::vector<double> conv_ns, direct_ns;

  for (int rep = 0; rep < repetitions; ++rep) {
    RunResult c = run_scenario(conventional);
    RunResult d = run_scenario(direct);
    conv_ns.insert(conv_ns.end(), c.log.step_wall_ns.begin(), c.log.step_wall_ns.end());
    direct_ns.insert(direct_ns.end(), d.log.step_wall_ns.begin(),
                     d.log.step_wall_ns.end());
    if (rep == 0) {
      out.conventional = std::move(c);
      out.direct = std::move(d);
    }
  }

  out.conventional_wall = timing_stats(conv_ns);
  out.direct_wall = timing_stats(direct_ns);
  out.wall_ratio_median = out.conventional_wall.median_s > 0.0
                              ? out.direct_wall.median_s / out.conventional_wall.median_s
                              : 0.0;
  return out;
}

std::vector<SweepEntry> sweep(const nlohmann::ordered_json& base_config,
                              const std::string& param_path,
                              const std::vector<std::string>& values) {
  std::vector<SweepEntry> out;
  int index = 0;
  for (const std::string& value : values) {
    nlohmann::ordered_json j = base_config;
    const std::string assignment = param_path + "=" + value;
    apply_override(j, assignment);
    ScenarioConfig cfg = config_from_json(j);
    cfg.seed += static_cast<std::uint64_t>(index);
    cfg.name += "-sweep" + std::to_string(index);
    out.push_back({assignment, run_scenario(cfg)});
    ++index;
  }
  return out;
}

const char* const kLogCsvHeader =
    "t,dx,dy,dz,vx,vy,vz,drx,dry,drz,vrx,vry,vrz,theta,phi,thrust,"
    "flow_x,flow_y,flow_z,flow_meas_x,flow_meas_y,flow_meas_z,"
    "nu_x,nu_y,nu_z,du_theta,du_phi,du_T,g11,g22,g33,gi11,gi22,gi33,"
    "sat_flag,hold_flag,skip_flag,phase";

void write_log_csv(std::ostream& os, const SimLog& log) {
  os << kLogCsvHeader << '\n';
  char buf[1024];
  for (const TickRow& r : log.rows) {
    std::snprintf(
        buf, sizeof buf,
        "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,"
        "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,"
        "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%d,%d,%d,%d\n",
        r.t, r.position.x(), r.position.y(), r.position.z(), r.velocity.x(),
        r.velocity.y(), r.velocity.z(), r.platform_position.x(),
        r.platform_position.y(), r.platform_position.z(), r.platform_velocity.x(),
        r.platform_velocity.y(), r.platform_velocity.z(), r.pitch, r.roll, r.thrust,
        r.flow_true.x(), r.flow_true.y(), r.flow_true.z(), r.flow_meas.x(),
        r.flow_meas.y(), r.flow_meas.z(), r.nu.x(), r.nu.y(), r.nu.z(), r.du.x(),
        r.du.y(), r.du.z(), r.g_diag.x(), r.g_diag.y(), r.g_diag.z(), r.gi_diag.x(),
        r.gi_diag.y(), r.gi_diag.z(), r.sat ? 1 : 0, r.hold ? 1 : 0, r.skip ? 1 : 0,
        r.phase);
    os << buf;
  }
}

nlohmann::ordered_json metrics_to_json(const RunMetrics& m, const SimLog& log) {
  nlohmann::ordered_json j;
  j["method"] = log.method;
  j["seed"] = log.seed;
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(log.config_hash));
  j["config_hash"] = hash;
  j["ticks"] = m.ticks;
  j["shutdown"] = m.shutdown;
  j["diverged"] = m.diverged;
  if (!log.divergence_reason.empty()) j["divergence_reason"] = log.divergence_reason;
  j["touchdown_time_s"] =
      m.touchdown_time ? nlohmann::ordered_json(*m.touchdown_time) : nullptr;
  j["touchdown_velocity_ms"] =
      m.touchdown_velocity ? nlohmann::ordered_json(*m.touchdown_velocity) : nullptr;
  if (m.tracking_rmse) {
    j["rmse_x"] = m.tracking_rmse->x();
    j["rmse_y"] = m.tracking_rmse->y();
    j["rmse_z"] = m.tracking_rmse->z();
  } else {
    j["rmse_x"] = nullptr;
    j["rmse_y"] = nullptr;
    j["rmse_z"] = nullptr;
  }
  j["fit_rate"] = m.fit_rate ? nlohmann::ordered_json(*m.fit_rate) : nullptr;
  j["fit_r2"] = m.fit_r2 ? nlohmann::ordered_json(*m.fit_r2) : nullptr;
  j["fit_initial_height"] =
      m.fit_initial_height ? nlohmann::ordered_json(*m.fit_initial_height) : nullptr;
  j["wall_median_s"] = m.control_wall.median_s;
  j["wall_p95_s"] = m.control_wall.p95_s;
  j["sat_count"] = m.sat_count;
  j["hold_count"] = m.hold_count;
  j["skip_count"] = m.skip_count;
  return j;
}

}  // namespace indiflow

#include "indiflow/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace indiflow {

ExpFit fit_exponential(const std::vector<double>& t, const std::vector<double>& height,
                       double t0, double t1) {
  if (t.size() != height.size())
    throw DimensionMismatch("fit_exponential: mismatched series lengths");

  std::vector<double> ts, ys;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t0 || t[i] > t1) continue;
    if (!(height[i] > 0.0))
      throw NonPositiveHeight("height " + std::to_string(height[i]) + " at t=" +
                              std::to_string(t[i]));
    ts.push_back(t[i]);
    ys.push_back(std::log(height[i]));
  }
  if (ts.size() < 10)
    throw WindowTooSmall("exponential fit needs >= 10 samples, got " +
                         std::to_string(ts.size()));

  const double n = static_cast<double>(ts.size());
  double st = 0, sy = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sy += ys[i];
  }
  const double mt = st / n, my = sy / n;
  double stt = 0, sty = 0, syy = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double dt = ts[i] - mt, dy = ys[i] - my;
    stt += dt * dt;
    sty += dt * dy;
    syy += dy * dy;
  }
  if (stt == 0.0) throw DegenerateSeries("zero time variance in fit window");

  ExpFit fit;
  fit.rate = sty / stt;
  fit.initial_value = std::exp(my - fit.rate * mt);
  fit.window_start = ts.front();
  fit.window_end = ts.back();
  if (syy == 0.0) {
    fit.r2 = 1.0;  // constant series, exactly fit by rate 0
  } else {
    const double ss_res = syy - sty * sty / stt;
    fit.r2 = 1.0 - ss_res / syy;
  }
  return fit;
}

Vec3 tracking_rmse(const std::vector<double>& t, const std::vector<Vec3>& y,
                   const Vec3& setpoint, double t0, double t1) {
  if (t.size() != y.size())
    throw DimensionMismatch("tracking_rmse: mismatched series lengths");
  Vec3 acc = Vec3::Zero();
  std::size_t n = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < t0 || t[i] > t1) continue;
    const Vec3 e = y[i] - setpoint;
    acc += e.cwiseProduct(e);
    ++n;
  }
  if (n == 0) throw WindowTooSmall("empty rmse window");
  return (acc / static_cast<double>(n)).cwiseSqrt();
}

std::pair<double, double> touchdown_metrics(const SimLog& log) {
  for (const TickRow& r : log.rows)
    if (r.phase == 1) return {r.t, r.relative_vz()};
  throw NoTouchdown("run never reached shutdown");
}

double ginv_height_correlation(const SimLog& log, double transient) {
  std::vector<double> gi, h;
  for (const TickRow& r : log.rows) {
    if (r.t < transient || r.phase != 0) continue;
    gi.push_back(r.gi_diag.z());
    h.push_back(r.relative_height());
  }
  if (gi.size() < 30)
    throw WindowTooSmall("correlation needs >= 30 post-transient ticks, got " +
                         std::to_string(gi.size()));
  const double n = static_cast<double>(gi.size());
  double mg = 0, mh = 0;
  for (std::size_t i = 0; i < gi.size(); ++i) {
    mg += gi[i];
    mh += h[i];
  }
  mg /= n;
  mh /= n;
  double sgg = 0, shh = 0, sgh = 0;
  for (std::size_t i = 0; i < gi.size(); ++i) {
    sgg += (gi[i] - mg) * (gi[i] - mg);
    shh += (h[i] - mh) * (h[i] - mh);
    sgh += (gi[i] - mg) * (h[i] - mh);
  }
  if (sgg == 0.0 || shh == 0.0)
    throw DegenerateSeries("zero variance in correlation window");
  return sgh / std::sqrt(sgg * shh);
}

RunMetrics compute_metrics(const SimLog& log, const ScenarioConfig& cfg,
                           double transient) {
  RunMetrics m;
  m.diverged = log.diverged;
  m.ticks = static_cast<int>(log.rows.size());
  for (const TickRow& r : log.rows) {
    m.sat_count += r.sat;
    m.hold_count += r.hold;
    m.skip_count += r.skip;
    m.shutdown = m.shutdown || r.phase == 1;
  }
  m.control_wall = timing_stats(log.step_wall_ns);

  try {
    const auto [tt, tv] = touchdown_metrics(log);
    m.touchdown_time = tt;
    m.touchdown_velocity = tv;
  } catch (const NoTouchdown&) {
  }

  std::vector<double> ts;
  std::vector<Vec3> flows;
  std::vector<double> heights;
  std::vector<double> height_ts;
  for (const TickRow& r : log.rows) {
    ts.push_back(r.t);
    flows.push_back(r.flow_true);
    const double h = r.relative_height();
    if (r.t >= transient && h > 2.0 * cfg.guard.min_height) {
      height_ts.push_back(r.t);
      heights.push_back(h);
    }
  }
  try {
    m.tracking_rmse =
        tracking_rmse(ts, flows, cfg.gains.setpoint, transient,
                      std::numeric_limits<double>::infinity());
  } catch (const WindowTooSmall&) {
  }
  if (cfg.gains.setpoint.z() < 0.0) {
    try {
      const ExpFit fit = fit_exponential(
          height_ts, heights, transient, std::numeric_limits<double>::infinity());
      m.fit_rate = fit.rate;
      m.fit_r2 = fit.r2;
      m.fit_initial_height = fit.initial_value;
    } catch (const WindowTooSmall&) {
    } catch (const NonPositiveHeight&) {
    } catch (const DegenerateSeries&) {
    }
  }
  return m;
}

CompareReport compare_report(const CompareResult& result) {
  const RunMetrics& c = result.conventional.metrics;
  const RunMetrics& d = result.direct.metrics;

  nlohmann::ordered_json j;
  j["repetitions"] = result.repetitions;
  j["conventional"] = metrics_to_json(c, result.conventional.log);
  j["direct"] = metrics_to_json(d, result.direct.log);
  j["wall_median_conventional_s"] = result.conventional_wall.median_s;
  j["wall_median_direct_s"] = result.direct_wall.median_s;
  j["wall_p95_conventional_s"] = result.conventional_wall.p95_s;
  j["wall_p95_direct_s"] = result.direct_wall.p95_s;
  j["wall_time_ratio"] = result.wall_ratio_median;
  j["direct_wall_time_win"] = result.wall_ratio_median < 1.0;

  nlohmann::ordered_json deltas;
  auto delta = [](const std::optional<double>& a, const std::optional<double>& b) {
    return (a && b) ? nlohmann::ordered_json(*b - *a) : nlohmann::ordered_json(nullptr);
  };
  deltas["touchdown_time_s"] = delta(c.touchdown_time, d.touchdown_time);
  deltas["touchdown_velocity_ms"] = delta(c.touchdown_velocity, d.touchdown_velocity);
  deltas["fit_rate"] = delta(c.fit_rate, d.fit_rate);
  if (c.tracking_rmse && d.tracking_rmse) {
    deltas["rmse_x"] = d.tracking_rmse->x() - c.tracking_rmse->x();
    deltas["rmse_y"] = d.tracking_rmse->y() - c.tracking_rmse->y();
    deltas["rmse_z"] = d.tracking_rmse->z() - c.tracking_rmse->z();
  }
  deltas["sat_count"] = d.sat_count - c.sat_count;
  deltas["hold_count"] = d.hold_count - c.hold_count;
  deltas["skip_count"] = d.skip_count - c.skip_count;
  j["deltas"] = deltas;

  std::ostringstream text;
  char line[256];
  text << "method comparison (" << result.repetitions << " interleaved repetitions)\n";
  auto fmt_opt = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    char b[64];
    std::snprintf(b, sizeof b, "%.6g", *v);
    return std::string(b);
  };
  std::snprintf(line, sizeof line, "%-26s %14s %14s\n", "", "conventional", "direct");
  text << line;
  std::snprintf(line, sizeof line, "%-26s %14.4g %14.4g\n", "wall median (s)",
                result.conventional_wall.median_s, result.direct_wall.median_s);
  text << line;
  std::snprintf(line, sizeof line, "%-26s %14.4g %14.4g\n", "wall p95 (s)",
                result.conventional_wall.p95_s, result.direct_wall.p95_s);
  text << line;
  std::snprintf(line, sizeof line, "%-26s %14s %14s\n", "touchdown time (s)",
                fmt_opt(c.touchdown_time).c_str(), fmt_opt(d.touchdown_time).c_str());
  text << line;
  std::snprintf(line, sizeof line, "%-26s %14s %14s\n", "fit rate (1/s)",
                fmt_opt(c.fit_rate).c_str(), fmt_opt(d.fit_rate).c_str());
  text << line;
  std::snprintf(line, sizeof line, "%-26s %14s %14s\n", "rmse_z (rad/s)",
                fmt_opt(c.tracking_rmse ? std::optional<double>(c.tracking_rmse->z())
                                        : std::nullopt)
                    .c_str(),
                fmt_opt(d.tracking_rmse ? std::optional<double>(d.tracking_rmse->z())
                                        : std::nullopt)
                    .c_str());
  text << line;
  std::snprintf(line, sizeof line, "%-26s %14d %14d\n", "hold events", c.hold_count,
                d.hold_count);
  text << line;
  std::snprintf(line, sizeof line, "%-26s %14d %14d\n", "skip events", c.skip_count,
                d.skip_count);
  text << line;
  std::snprintf(line, sizeof line, "wall time ratio (direct/conventional): %.4f\n",
                result.wall_ratio_median);
  text << line;

  return {std::move(j), text.str()};
}

SimLog read_log_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open log: " + path);
  std::string header;
  if (!std::getline(in, header) || header != kLogCsvHeader)
    throw ConfigError("unrecognized log schema in " + path);

  SimLog log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double v[38];
    int field = 0;
    const char* p = line.c_str();
    char* end = nullptr;
    while (field < 38) {
      v[field] = std::strtod(p, &end);
      if (end == p) throw ConfigError("malformed log row in " + path);
      ++field;
      p = (*end == ',') ? end + 1 : end;
    }
    TickRow r;
    r.t = v[0];
    r.position = Vec3(v[1], v[2], v[3]);
    r.velocity = Vec3(v[4], v[5], v[6]);
    r.platform_position = Vec3(v[7], v[8], v[9]);
    r.platform_velocity = Vec3(v[10], v[11], v[12]);
    r.pitch = v[13];
    r.roll = v[14];
    r.thrust = v[15];
    r.flow_true = Vec3(v[16], v[17], v[18]);
    r.flow_meas = Vec3(v[19], v[20], v[21]);
    r.nu = Vec3(v[22], v[23], v[24]);
    r.du = Vec3(v[25], v[26], v[27]);
    r.g_diag = Vec3(v[28], v[29], v[30]);
    r.gi_diag = Vec3(v[31], v[32], v[33]);
    r.sat = v[34] != 0.0;
    r.hold = v[35] != 0.0;
    r.skip = v[36] != 0.0;
    r.phase = static_cast<int>(v[37]);
    log.rows.push_back(r);
  }
  return log;
}

void write_plot_csv(std::ostream& os, const SimLog& log, const ExpFit& fit) {
  os << "t,rel_height,fitted\n";
  char buf[128];
  for (const TickRow& r : log.rows) {
    const double fitted = fit.initial_value * std::exp(fit.rate * r.t);
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g\n", r.t, r.relative_height(),
                  fitted);
    os << buf;
  }
}

}  // namespace indiflow

#include "indiflow/flow_sensor.hpp"

#include <algorithm>
#include <cmath>

namespace indiflow {

FlowObservation analytic_flow(const RelativeState& x, const SensorParams& params,
                              double t) {
  if (!(x.height > params.guard_height))
    throw DegenerateHeight("flow undefined at height " + std::to_string(x.height));
  FlowObservation y;
  y.flow = params.c.cwiseProduct(x.velocity) / x.height;
  y.timestamp = t;
  y.valid = true;
  return y;
}

double GaussianSource::uniform() {
  // 53-bit mantissa draw mapped strictly into (0,1) so log() is safe.
  return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
}

double GaussianSource::sample() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double a = 2.0 * M_PI * uniform();
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

FlowObservation add_noise(const FlowObservation& y, const Vec3& sigma,
                          GaussianSource& rng) {
  FlowObservation out = y;
  for (int i = 0; i < 3; ++i)
    if (sigma[i] > 0.0) out.flow[i] += sigma[i] * rng.sample();
  return out;
}

PinholeCamera PinholeCamera::grid(int n, double spacing, double focal, double fov,
                                  int pair_cap) {
  PinholeCamera cam;
  cam.focal = focal;
  cam.fov = fov;
  cam.pair_cap = pair_cap;
  const double half = 0.5 * (n - 1) * spacing;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cam.layout.emplace_back(i * spacing - half, j * spacing - half);
  return cam;
}

FeatureFrame project_features(const PinholeCamera& camera, const Vec2& offset_xy,
                              double height, const Attitude& att, double t) {
  if (!(height > 0.0))
    throw DegenerateHeight("camera at or below the feature plane");

  // Body->inertial rotation consistent with the thrust direction (yaw = 0):
  // R = Ry(pitch) * Rx(roll). Features are mapped into the body frame with
  // its transpose.
  const double ct = std::cos(att.pitch), st = std::sin(att.pitch);
  const double cp = std::cos(att.roll), sp = std::sin(att.roll);
  Mat3 R;
  R << ct, st * sp, st * cp,
       0.0, cp, -sp,
       -st, ct * sp, ct * cp;

  FeatureFrame frame;
  frame.timestamp = t;
  int id = 0;
  for (const Vec2& p : camera.layout) {
    const Vec3 rel_world(p.x() - offset_xy.x(), p.y() - offset_xy.y(), -height);
    const Vec3 rel_body = R.transpose() * rel_world;
    const double depth = -rel_body.z();
    const int this_id = id++;
    if (depth <= 0.0) continue;  // behind the camera
    const Vec2 mu(camera.focal * rel_body.x() / depth,
                  camera.focal * rel_body.y() / depth);
    if (std::abs(mu.x()) > camera.fov || std::abs(mu.y()) > camera.fov) continue;
    frame.features.push_back({this_id, mu});
  }
  return frame;
}

namespace {

// Features present in both frames, in id order.
std::vector<std::pair<Vec2, Vec2>> match_features(const FeatureFrame& prev,
                                                  const FeatureFrame& curr) {
  std::vector<std::pair<Vec2, Vec2>> matches;
  auto it = curr.features.begin();
  for (const Feature& f : prev.features) {
    while (it != curr.features.end() && it->id < f.id) ++it;
    if (it == curr.features.end()) break;
    if (it->id == f.id) matches.emplace_back(f.image, it->image);
  }
  return matches;
}

}  // namespace

double estimate_divergence(const FeatureFrame& prev, const FeatureFrame& curr,
                           double dt, int pair_cap) {
  if (!(dt > 0.0)) throw ConfigError("divergence interval must be > 0");
  const auto matches = match_features(prev, curr);
  const std::size_t n = matches.size();
  if (n < 2)
    throw InsufficientFeatures("divergence needs >= 2 matched features, got " +
                               std::to_string(n));

  const std::size_t total = n * (n - 1) / 2;
  const std::size_t stride =
      total > static_cast<std::size_t>(pair_cap)
          ? (total + pair_cap - 1) / static_cast<std::size_t>(pair_cap)
          : 1;

  constexpr double kMinDistance = 1e-12;
  double sum = 0.0;
  std::size_t used = 0, index = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++index) {
      if (index % stride != 0) continue;
      const double kappa_prev = (matches[i].first - matches[j].first).norm();
      if (kappa_prev < kMinDistance) continue;  // degenerate pair, skip
      const double kappa_curr = (matches[i].second - matches[j].second).norm();
      sum += (kappa_prev - kappa_curr) / kappa_prev;
      ++used;
    }
  }
  if (used == 0) throw DegeneratePairs("all feature pairs degenerate");
  return sum / static_cast<double>(used) / dt;
}

Vec2 estimate_lateral_flow(const FeatureFrame& prev, const FeatureFrame& curr,
                           double dt) {
  if (!(dt > 0.0)) throw ConfigError("flow interval must be > 0");
  const auto matches = match_features(prev, curr);
  if (matches.empty())
    throw InsufficientFeatures("lateral flow needs >= 1 matched feature");
  Vec2 sum = Vec2::Zero();
  for (const auto& [mu_prev, mu_curr] : matches) sum += mu_prev - mu_curr;
  return sum / static_cast<double>(matches.size()) / dt;
}

double low_pass(double previous, double raw, double cutoff_hz, double dt) {
  const double alpha = dt / (dt + 1.0 / (2.0 * M_PI * cutoff_hz));
  return previous + alpha * (raw - previous);
}

void write_feature_csv(std::ostream& os, const std::vector<FeatureFrame>& frames) {
  os << "t,feature_id,mu_x,mu_y\n";
  char buf[128];
  for (const FeatureFrame& frame : frames) {
    for (const Feature& f : frame.features) {
      std::snprintf(buf, sizeof buf, "%.12g,%d,%.12g,%.12g\n", frame.timestamp,
                    f.id, f.image.x(), f.image.y());
      os << buf;
    }
  }
}

}  // namespace indiflow

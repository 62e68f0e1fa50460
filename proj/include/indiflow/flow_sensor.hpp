#pragma once

#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "indiflow/types.hpp"

namespace indiflow {

struct SensorParams {
  Vec3 c{1.0, 1.0, 1.0};            // proportionality constants (c_z > 0)
  Vec3 noise_sigma{0.0, 0.0, 0.0};  // rad/s, per channel
  double cutoff_hz = 5.0;           // low-pass cutoff
  double guard_height = 1e-3;       // m, below which the observation is invalid

  void validate() const {
    if (!(c.z() > 0.0)) throw ConfigError("sensor.c_z must be > 0");
    if (noise_sigma.minCoeff() < 0.0)
      throw ConfigError("sensor noise sigmas must be >= 0");
    if (!(cutoff_hz > 0.0)) throw ConfigError("sensor.cutoff_hz must be > 0");
  }
};

struct FlowObservation {
  Vec3 flow{0.0, 0.0, 0.0};  // [lateral x, lateral y, divergence] in rad/s
  double timestamp = 0.0;
  bool valid = true;
};

/// Lateral and divergence flow straight from the relative state:
/// flow = c (componentwise) * relative velocity / height.
/// Throws DegenerateHeight below the sensor guard height.
FlowObservation analytic_flow(const RelativeState& x, const SensorParams& params,
                              double t = 0.0);

/// Deterministic standard-normal stream (Box-Muller over a seeded mt19937_64;
/// implementation-defined std distributions are avoided on purpose).
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : eng_(seed) {}
  double sample();

 private:
  double uniform();
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

FlowObservation add_noise(const FlowObservation& y, const Vec3& sigma, GaussianSource& rng);

struct Feature {
  int id = 0;
  Vec2 image{0.0, 0.0};  // normalized image coordinates
};

struct FeatureFrame {
  std::vector<Feature> features;
  double timestamp = 0.0;
};

/// Synthetic stand-in for the downward camera: a normalized-focal pinhole
/// over a fixed grid of surface-fixed features.
struct PinholeCamera {
  double focal = 1.0;
  std::vector<Vec2> layout;  // feature positions on the surface plane, m
  double fov = 2.0;          // half-width of the image, normalized units
  int pair_cap = 200;

  void validate() const {
    if (!(focal > 0.0)) throw ConfigError("camera.focal must be > 0");
    if (!(fov > 0.0)) throw ConfigError("camera.fov must be > 0");
    if (pair_cap < 1) throw ConfigError("camera.pair_cap must be >= 1");
  }

  static PinholeCamera grid(int n, double spacing, double focal = 1.0,
                            double fov = 2.0, int pair_cap = 200);
};

/// Project the camera's surface-fixed features. `offset_xy` is the vehicle's
/// horizontal position relative to the feature-plane origin; `height` its
/// height above the plane. Features behind the camera or outside the field
/// of view are dropped.
FeatureFrame project_features(const PinholeCamera& camera, const Vec2& offset_xy,
                              double height, const Attitude& att, double t = 0.0);

/// Divergence from pairwise image distances: the mean over matched feature
/// pairs of (prev_dist - curr_dist)/prev_dist, divided by dt. Pairs are
/// every combination of matched features, thinned by a deterministic stride
/// when there are more than `pair_cap`.
/// Throws InsufficientFeatures (< 2 matches) or DegeneratePairs (all pairs
/// had ~zero prior distance).
double estimate_divergence(const FeatureFrame& prev, const FeatureFrame& curr,
                           double dt, int pair_cap = 200);

/// Mean feature displacement rate, (prev - curr)/dt averaged over matches.
/// The sign is chosen so that, divided by the focal length, the result
/// matches the analytic lateral flow. Throws InsufficientFeatures.
Vec2 estimate_lateral_flow(const FeatureFrame& prev, const FeatureFrame& curr, double dt);

/// Single-pole smoothing with alpha = dt/(dt + 1/(2 pi f_c)).
double low_pass(double previous, double raw, double cutoff_hz, double dt);

/// Debug dump, one row per feature: t,feature_id,mu_x,mu_y
void write_feature_csv(std::ostream& os, const std::vector<FeatureFrame>& frames);

}  // namespace indiflow

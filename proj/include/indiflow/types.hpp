#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace indiflow {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// ---------------------------------------------------------------------------
// Error types

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Relative height at or below zero: the quantities 1/height are undefined.
struct DegenerateHeight : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientFeatures : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// All candidate feature pairs were degenerate (zero prior distance).
struct DegeneratePairs : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WindowTooSmall : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NonPositiveHeight : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoTouchdown : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A statistic is undefined on the given series (e.g. zero variance).
struct DegenerateSeries : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Physical model types

/// Mass, gravity and the diagonal linear-drag coefficients of the vehicle.
/// Drag force is -drag_k (componentwise) * velocity; all defaults match the
/// drag-free simulation setup.
struct PhysicalParams {
  double mass = 1.2;       // kg
  double gravity = 9.81;   // m/s^2, acts along -Z inertial
  Vec3 drag_k{0.0, 0.0, 0.0};  // N s/m per axis

  void validate() const {
    if (!(mass > 0.0)) throw ConfigError("physical.mass must be > 0");
    if (!(gravity > 0.0)) throw ConfigError("physical.gravity must be > 0");
    if (drag_k.minCoeff() < 0.0)
      throw ConfigError("physical.drag coefficients must be >= 0");
  }
};

/// Pitch/roll of the vehicle. Yaw is identically zero in this model.
struct Attitude {
  double pitch = 0.0;  // rad
  double roll = 0.0;   // rad
};

/// Outer-loop command: attitude setpoints plus collective thrust.
struct ControlInput {
  double pitch = 0.0;   // rad
  double roll = 0.0;    // rad
  double thrust = 0.0;  // N

  Vec3 as_vector() const { return Vec3(pitch, roll, thrust); }
  static ControlInput from_vector(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
};

struct InputLimits {
  double pitch_max = 0.35;   // rad
  double roll_max = 0.35;    // rad
  double thrust_max = 23.544;  // N (2 M g at the default mass)

  void validate() const {
    if (!(pitch_max > 0.0 && pitch_max < M_PI_2))
      throw ConfigError("limits.theta_max must be in (0, pi/2)");
    if (!(roll_max > 0.0 && roll_max < M_PI_2))
      throw ConfigError("limits.phi_max must be in (0, pi/2)");
    if (!(thrust_max > 0.0)) throw ConfigError("limits.thrust_max must be > 0");
  }

  /// Componentwise clamp; idempotent.
  ControlInput clamp(const ControlInput& u, bool* clipped = nullptr) const {
    ControlInput out = u;
    bool hit = false;
    auto clampd = [&hit](double v, double lo, double hi) {
      if (v < lo) { hit = true; return lo; }
      if (v > hi) { hit = true; return hi; }
      return v;
    };
    out.pitch = clampd(u.pitch, -pitch_max, pitch_max);
    out.roll = clampd(u.roll, -roll_max, roll_max);
    out.thrust = clampd(u.thrust, 0.0, thrust_max);
    if (clipped) *clipped = hit;
    return out;
  }
};

/// Motion of the reference surface the vehicle lands on.
///  - Static: fixed offset, zero velocity.
///  - Sinusoidal: offset + amplitude*sin(omega*t + phase), per axis.
///  - Terrain: surface height is a function of the vehicle's horizontal
///    position (static ground, undulating profile); lateral position fixed.
struct PlatformMotion {
  enum class Kind { Static, Sinusoidal, Terrain };
  Kind kind = Kind::Static;
  Vec3 offset{0.0, 0.0, 0.0};
  Vec3 amplitude{0.0, 0.0, 0.0};
  Vec3 omega{0.0, 0.0, 0.0};
  Vec3 phase{0.0, 0.0, 0.0};
  double terrain_base = 0.0;        // m
  double terrain_bump = 0.0;        // m
  double terrain_wavelength = 1.0;  // m

  void validate() const {
    if (amplitude.minCoeff() < 0.0)
      throw ConfigError("platform amplitudes must be >= 0");
    if (terrain_bump < 0.0) throw ConfigError("platform.bump must be >= 0");
    if (!(terrain_wavelength > 0.0))
      throw ConfigError("platform.wavelength must be > 0");
  }
};

struct PlatformState {
  Vec3 position{0.0, 0.0, 0.0};
  Vec3 velocity{0.0, 0.0, 0.0};
  Vec3 acceleration{0.0, 0.0, 0.0};
};

/// Full simulation truth at one instant.
struct WorldState {
  Vec3 position{0.0, 0.0, 3.0};  // m, inertial North-East-Up
  Vec3 velocity{0.0, 0.0, 0.0};  // m/s
  Attitude attitude;
  double thrust = 0.0;  // N, currently produced by the rotors
  Vec3 platform_position{0.0, 0.0, 0.0};
  Vec3 platform_velocity{0.0, 0.0, 0.0};
  double time = 0.0;  // s
};

/// Reduced state the controller theory is written in: height above the
/// surface and the relative velocity.
struct RelativeState {
  double height = 0.0;  // m, must stay > 0 while flight is active
  Vec3 velocity{0.0, 0.0, 0.0};  // m/s, vehicle minus platform
};

inline RelativeState relative_state(const WorldState& w) {
  return {w.position.z() - w.platform_position.z(),
          w.velocity - w.platform_velocity};
}

}  // namespace indiflow

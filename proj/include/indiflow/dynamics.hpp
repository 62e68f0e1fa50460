#pragma once

#include "indiflow/types.hpp"

namespace indiflow {

/// Unit thrust direction in the inertial frame for a given attitude
/// (yaw = 0): [cos(roll) sin(pitch), -sin(roll), cos(roll) cos(pitch)].
Vec3 thrust_direction(const Attitude& att);

/// Acceleration of the vehicle: gravity + thrust/M + drag/M.
Vec3 translational_derivatives(const WorldState& state, const PhysicalParams& params);

struct RelativeDerivatives {
  double height_rate = 0.0;  // = relative vertical velocity
  Vec3 velocity_rate{0.0, 0.0, 0.0};
};

/// Time derivative of the relative state. Drag acts on the absolute
/// velocity, so it must be supplied alongside the relative state.
/// Throws DegenerateHeight when the relative height is not positive.
RelativeDerivatives relative_derivatives(const RelativeState& x, const Attitude& att,
                                         double thrust, const PhysicalParams& params,
                                         const Vec3& platform_accel,
                                         const Vec3& absolute_velocity);

struct InnerLoopParams {
  double tau_attitude = 0.05;  // s
  double tau_thrust = 0.02;    // s

  void validate() const {
    if (!(tau_attitude > 0.0) || !(tau_thrust > 0.0))
      throw ConfigError("inner_loop time constants must be > 0");
  }
};

/// One first-order-lag step of the inner attitude/thrust loop:
/// each channel moves by (dt/tau) of its remaining error, then is clamped.
void inner_loop_step(Attitude& att, double& thrust, const ControlInput& command,
                     const InnerLoopParams& inner, const InputLimits& limits, double dt);

/// Platform pose/velocity/acceleration at time t. Terrain surfaces are
/// functions of the vehicle's horizontal position, so its horizontal
/// kinematics are needed for the chain rule; the other variants ignore them.
PlatformState platform_state(const PlatformMotion& motion, double t,
                             const Vec2& mav_xy = Vec2::Zero(),
                             const Vec2& mav_vxy = Vec2::Zero(),
                             const Vec2& mav_axy = Vec2::Zero());

/// Advance the world by dt: inner loop relaxes toward the held command,
/// then RK4 integrates position/velocity with attitude and thrust frozen.
/// Throws DegenerateHeight if the vehicle ends up at or below the surface.
WorldState integrate_step(const WorldState& state, const ControlInput& command,
                          double dt, const PhysicalParams& params,
                          const InnerLoopParams& inner, const InputLimits& limits,
                          const PlatformMotion& motion);

}  // namespace indiflow

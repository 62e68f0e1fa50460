#include "indiflow/dynamics.hpp"

#include <cmath>

namespace indiflow {

Vec3 thrust_direction(const Attitude& att) {
  const double ct = std::cos(att.pitch), st = std::sin(att.pitch);
  const double cp = std::cos(att.roll), sp = std::sin(att.roll);
  return Vec3(cp * st, -sp, cp * ct);
}

Vec3 translational_derivatives(const WorldState& state, const PhysicalParams& params) {
  const Vec3 drag = -params.drag_k.cwiseProduct(state.velocity);
  return Vec3(0.0, 0.0, -params.gravity) +
         (state.thrust / params.mass) * thrust_direction(state.attitude) +
         drag / params.mass;
}

RelativeDerivatives relative_derivatives(const RelativeState& x, const Attitude& att,
                                         double thrust, const PhysicalParams& params,
                                         const Vec3& platform_accel,
                                         const Vec3& absolute_velocity) {
  if (!(x.height > 0.0))
    throw DegenerateHeight("relative height must be > 0, got " + std::to_string(x.height));
  const Vec3 drag = -params.drag_k.cwiseProduct(absolute_velocity);
  RelativeDerivatives d;
  d.height_rate = x.velocity.z();
  d.velocity_rate = Vec3(0.0, 0.0, -params.gravity) +
                    (thrust / params.mass) * thrust_direction(att) +
                    drag / params.mass - platform_accel;
  return d;
}

void inner_loop_step(Attitude& att, double& thrust, const ControlInput& command,
                     const InnerLoopParams& inner, const InputLimits& limits, double dt) {
  const double ka = dt / inner.tau_attitude;
  const double kt = dt / inner.tau_thrust;
  att.pitch += ka * (command.pitch - att.pitch);
  att.roll += ka * (command.roll - att.roll);
  thrust += kt * (command.thrust - thrust);
  const ControlInput clamped = limits.clamp({att.pitch, att.roll, thrust});
  att.pitch = clamped.pitch;
  att.roll = clamped.roll;
  thrust = clamped.thrust;
}

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

double terrain_height(const PlatformMotion& m, const Vec2& xy) {
  const double s = kTwoPi * (xy.x() + xy.y() - m.offset.x() - m.offset.y()) /
                   m.terrain_wavelength;
  return m.terrain_base + m.terrain_bump * std::sin(s);
}

}  // namespace

PlatformState platform_state(const PlatformMotion& motion, double t,
                             const Vec2& mav_xy, const Vec2& mav_vxy,
                             const Vec2& mav_axy) {
  PlatformState s;
  switch (motion.kind) {
    case PlatformMotion::Kind::Static:
      s.position = motion.offset;
      break;
    case PlatformMotion::Kind::Sinusoidal:
      for (int i = 0; i < 3; ++i) {
        const double arg = motion.omega[i] * t + motion.phase[i];
        s.position[i] = motion.offset[i] + motion.amplitude[i] * std::sin(arg);
        s.velocity[i] = motion.amplitude[i] * motion.omega[i] * std::cos(arg);
        s.acceleration[i] =
            -motion.amplitude[i] * motion.omega[i] * motion.omega[i] * std::sin(arg);
      }
      break;
    case PlatformMotion::Kind::Terrain: {
      // Surface point directly beneath the vehicle. Horizontal derivatives
      // follow from the chain rule through the vehicle's horizontal motion.
      const double k = kTwoPi / motion.terrain_wavelength;
      const double arg = k * (mav_xy.x() + mav_xy.y() - motion.offset.x() - motion.offset.y());
      const double dh = motion.terrain_bump * k * std::cos(arg);
      const double d2h = -motion.terrain_bump * k * k * std::sin(arg);
      const double sdot = mav_vxy.x() + mav_vxy.y();
      const double sddot = mav_axy.x() + mav_axy.y();
      s.position = Vec3(motion.offset.x(), motion.offset.y(), terrain_height(motion, mav_xy));
      s.velocity = Vec3(0.0, 0.0, dh * sdot);
      s.acceleration = Vec3(0.0, 0.0, d2h * sdot * sdot + dh * sddot);
      break;
    }
  }
  return s;
}

WorldState integrate_step(const WorldState& state, const ControlInput& command,
                          double dt, const PhysicalParams& params,
                          const InnerLoopParams& inner, const InputLimits& limits,
                          const PlatformMotion& motion) {
  if (!(dt > 0.0)) throw ConfigError("integration step must be > 0");

  WorldState next = state;
  inner_loop_step(next.attitude, next.thrust, command, inner, limits, dt);

  // RK4 on (position, velocity); attitude/thrust are frozen over the step,
  // so the acceleration depends only on velocity (through drag).
  auto accel = [&](const Vec3& v) {
    WorldState probe = next;
    probe.velocity = v;
    return translational_derivatives(probe, params);
  };
  const Vec3 d0 = state.position, v0 = state.velocity;
  const Vec3 a1 = accel(v0);
  const Vec3 a2 = accel(v0 + 0.5 * dt * a1);
  const Vec3 a3 = accel(v0 + 0.5 * dt * a2);
  const Vec3 a4 = accel(v0 + dt * a3);

  const Vec3 k1d = v0;
  const Vec3 k2d = v0 + 0.5 * dt * a1;
  const Vec3 k3d = v0 + 0.5 * dt * a2;
  const Vec3 k4d = v0 + dt * a3;

  next.position = d0 + (dt / 6.0) * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
  next.velocity = v0 + (dt / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
  next.time = state.time + dt;

  const Vec3 na = translational_derivatives(next, params);
  const PlatformState ps =
      platform_state(motion, next.time, next.position.head<2>(),
                     next.velocity.head<2>(), na.head<2>());
  next.platform_position = ps.position;
  next.platform_velocity = ps.velocity;

  if (!(next.position.z() - next.platform_position.z() > 0.0))
    throw DegenerateHeight("vehicle reached the surface during integration");
  return next;
}

}  // namespace indiflow

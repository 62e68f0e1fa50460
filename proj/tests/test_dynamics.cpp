#include <doctest.h>

#include <cmath>
#include <random>

#include "indiflow/dynamics.hpp"

using namespace indiflow;

namespace {

WorldState hover_state(const PhysicalParams& p, double height = 3.0) {
  WorldState w;
  w.position = Vec3(0.0, 0.0, height);
  w.thrust = p.mass * p.gravity;
  return w;
}

}  // namespace

TEST_CASE("hover equilibrium has zero acceleration") {
  PhysicalParams p;
  const Vec3 a = translational_derivatives(hover_state(p), p);
  CHECK(a.norm() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("free fall accelerates at -g") {
  PhysicalParams p;
  WorldState w = hover_state(p);
  w.thrust = 0.0;
  const Vec3 a = translational_derivatives(w, p);
  CHECK(a.x() == 0.0);
  CHECK(a.y() == 0.0);
  CHECK(a.z() == doctest::Approx(-p.gravity));
}

TEST_CASE("pitched thrust splits between x and z") {
  PhysicalParams p;  // M = 1.2, g = 9.81
  WorldState w = hover_state(p);
  w.attitude.pitch = 0.1;
  const Vec3 a = translational_derivatives(w, p);
  // Closed form: thrust = M g, so a_x = g cos(0) sin(0.1), a_z = g (cos 0.1 - 1).
  CHECK(a.x() == doctest::Approx(9.81 * std::sin(0.1)).epsilon(1e-12));
  CHECK(a.x() == doctest::Approx(0.9794).epsilon(1e-4));
  CHECK(a.y() == 0.0);
  CHECK(a.z() == doctest::Approx(9.81 * (std::cos(0.1) - 1.0)).epsilon(1e-12));
  CHECK(a.z() == doctest::Approx(-0.0490).epsilon(1e-2));
}

TEST_CASE("thrust vector norm equals commanded thrust for any attitude") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> angle(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Attitude att{angle(rng), angle(rng)};
    CHECK(thrust_direction(att).norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(thrust_direction({0.0, 0.0}) == Vec3(0.0, 0.0, 1.0));
}

TEST_CASE("relative derivatives: hover over a static platform") {
  PhysicalParams p;
  RelativeState x{3.0, Vec3::Zero()};
  const auto d = relative_derivatives(x, {}, p.mass * p.gravity, p, Vec3::Zero(),
                                      Vec3::Zero());
  CHECK(d.height_rate == x.velocity.z());
  CHECK(d.velocity_rate.norm() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("platform acceleration enters relative dynamics with opposite sign") {
  PhysicalParams p;
  RelativeState x{3.0, Vec3::Zero()};
  const auto d = relative_derivatives(x, {}, p.mass * p.gravity, p,
                                      Vec3(0.0, 0.0, 0.5), Vec3::Zero());
  CHECK(d.velocity_rate.z() == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("relative derivatives equal absolute minus platform acceleration") {
  // Oracle: compute in the absolute frame and subtract.
  PhysicalParams p;
  p.drag_k = Vec3(0.1, 0.05, 0.2);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    WorldState w;
    w.position = Vec3(u(rng), u(rng), 2.0 + u(rng));
    w.velocity = Vec3(u(rng), u(rng), u(rng));
    w.attitude = {0.3 * u(rng), 0.3 * u(rng)};
    w.thrust = p.mass * p.gravity * (1.0 + 0.3 * u(rng));
    w.platform_position = Vec3(u(rng), u(rng), -1.0);
    w.platform_velocity = Vec3(u(rng), u(rng), u(rng));
    const Vec3 platform_accel(u(rng), u(rng), u(rng));

    const Vec3 absolute = translational_derivatives(w, p);
    const auto rel = relative_derivatives(relative_state(w), w.attitude, w.thrust, p,
                                          platform_accel, w.velocity);
    CHECK((rel.velocity_rate - (absolute - platform_accel)).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rel.height_rate == relative_state(w).velocity.z());
  }
}

TEST_CASE("relative derivatives reject non-positive height") {
  PhysicalParams p;
  RelativeState x{0.0, Vec3::Zero()};
  CHECK_THROWS_AS(
      relative_derivatives(x, {}, 1.0, p, Vec3::Zero(), Vec3::Zero()),
      DegenerateHeight);
}

TEST_CASE("inner loop holds when command equals state") {
  Attitude att{0.1, -0.05};
  double thrust = 10.0;
  inner_loop_step(att, thrust, {0.1, -0.05, 10.0}, {}, {}, 0.001);
  CHECK(att.pitch == doctest::Approx(0.1));
  CHECK(att.roll == doctest::Approx(-0.05));
  CHECK(thrust == doctest::Approx(10.0));
}

TEST_CASE("inner loop reaches the command in one step when dt == tau") {
  Attitude att{0.0, 0.0};
  double thrust = 10.0;
  InnerLoopParams inner;
  inner.tau_attitude = 0.05;
  inner_loop_step(att, thrust, {0.1, 0.0, 10.0}, inner, {}, 0.05);
  CHECK(att.pitch == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("inner loop approaches exponentially for dt much smaller than tau") {
  Attitude att{0.0, 0.0};
  double thrust = 10.0;
  InnerLoopParams inner;  // tau_att = 0.05
  const double dt = 1e-3;
  const ControlInput cmd{0.2, 0.0, 10.0};
  InputLimits limits;
  for (int i = 0; i < 50; ++i) inner_loop_step(att, thrust, cmd, inner, limits, dt);
  // After one time constant the remaining error should match e^{-1} within 2%.
  const double expected = 0.2 * (1.0 - std::exp(-1.0));
  CHECK(std::abs(att.pitch - expected) <= 0.02 * expected);
}

TEST_CASE("static platform stays put") {
  PlatformMotion m;
  m.offset = Vec3(1.0, 2.0, 0.5);
  const PlatformState s = platform_state(m, 17.3);
  CHECK(s.position == m.offset);
  CHECK(s.velocity.norm() == 0.0);
  CHECK(s.acceleration.norm() == 0.0);
}

TEST_CASE("sinusoidal platform matches analytic derivatives") {
  PlatformMotion m;
  m.kind = PlatformMotion::Kind::Sinusoidal;
  m.amplitude = Vec3(0.0, 0.0, 0.2);
  m.omega = Vec3(0.0, 0.0, 1.0);
  const PlatformState s = platform_state(m, M_PI_2);
  CHECK(s.position.z() == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(s.velocity.z() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.acceleration.z() == doctest::Approx(-0.2).epsilon(1e-12));
}

TEST_CASE("flat terrain degenerates to a static platform") {
  PlatformMotion m;
  m.kind = PlatformMotion::Kind::Terrain;
  m.terrain_base = 0.7;
  m.terrain_bump = 0.0;
  const PlatformState s =
      platform_state(m, 3.0, Vec2(4.0, -2.0), Vec2(1.0, 0.5), Vec2(0.1, 0.0));
  CHECK(s.position.z() == doctest::Approx(0.7));
  CHECK(s.velocity.norm() == doctest::Approx(0.0));
  CHECK(s.acceleration.norm() == doctest::Approx(0.0));
}

TEST_CASE("platform derivative chains agree with finite differences") {
  // Oracle: central differences of position/velocity along a smooth
  // synthetic vehicle path, O(dt^2).
  const double dt = 1e-4;
  auto path = [](double t) { return Vec2(0.4 * std::sin(0.9 * t), 0.25 * t); };
  auto path_v = [](double t) { return Vec2(0.36 * std::cos(0.9 * t), 0.25); };
  auto path_a = [](double t) { return Vec2(-0.324 * std::sin(0.9 * t), 0.0); };

  std::vector<PlatformMotion> motions(3);
  motions[0].kind = PlatformMotion::Kind::Static;
  motions[0].offset = Vec3(0.3, 0.1, 0.2);
  motions[1].kind = PlatformMotion::Kind::Sinusoidal;
  motions[1].amplitude = Vec3(0.5, 0.5, 0.2);
  motions[1].omega = Vec3(0.3, 0.4, 0.5);
  motions[1].phase = Vec3(0.1, 0.0, 1.0);
  motions[2].kind = PlatformMotion::Kind::Terrain;
  motions[2].terrain_base = 0.5;
  motions[2].terrain_bump = 0.1;
  motions[2].terrain_wavelength = 3.0;

  for (const PlatformMotion& m : motions) {
    for (double t : {0.5, 2.0, 7.7}) {
      auto eval = [&](double tt) {
        return platform_state(m, tt, path(tt), path_v(tt), path_a(tt));
      };
      const PlatformState sm = eval(t - dt), s0 = eval(t), sp = eval(t + dt);
      const Vec3 v_fd = (sp.position - sm.position) / (2.0 * dt);
      const Vec3 a_fd = (sp.velocity - sm.velocity) / (2.0 * dt);
      CHECK((v_fd - s0.velocity).norm() <= 1e-5);
      CHECK((a_fd - s0.acceleration).norm() <= 1e-5);
    }
  }
}

TEST_CASE("ballistic arc matches the closed form to 1e-9") {
  PhysicalParams p;
  PlatformMotion ground;
  ground.offset = Vec3(0.0, 0.0, -100.0);  // keep the surface far away
  WorldState w;
  w.position = Vec3(0.0, 0.0, 3.0);
  w.velocity = Vec3(1.0, -0.5, 2.0);
  w.thrust = 0.0;
  const ControlInput cmd{0.0, 0.0, 0.0};
  const double dt = 1e-3;
  for (int i = 0; i < 1000; ++i)
    w = integrate_step(w, cmd, dt, p, {}, {}, ground);
  const double t = 1.0;
  CHECK(w.position.x() == doctest::Approx(1.0 * t).epsilon(1e-12));
  CHECK(std::abs(w.position.z() - (3.0 + 2.0 * t - 0.5 * p.gravity * t * t)) <= 1e-9);
  CHECK(std::abs(w.velocity.z() - (2.0 - p.gravity * t)) <= 1e-9);
}

TEST_CASE("zero step size is rejected") {
  PhysicalParams p;
  WorldState w = hover_state(p);
  CHECK_THROWS_AS(integrate_step(w, {0, 0, w.thrust}, 0.0, p, {}, {}, {}),
                  ConfigError);
}

TEST_CASE("hover is a fixed point of the integrator") {
  PhysicalParams p;
  WorldState w = hover_state(p);
  const ControlInput cmd{0.0, 0.0, w.thrust};
  const WorldState next = integrate_step(w, cmd, 1e-3, p, {}, {}, {});
  CHECK((next.position - w.position).norm() <= 1e-12);
  CHECK((next.velocity - w.velocity).norm() <= 1e-12);
  CHECK(next.thrust == doctest::Approx(w.thrust).epsilon(1e-15));
}

TEST_CASE("drag-free hover preserves energy over 10 s") {
  PhysicalParams p;
  WorldState w = hover_state(p);
  const ControlInput cmd{0.0, 0.0, w.thrust};
  auto energy = [&](const WorldState& s) {
    return 0.5 * p.mass * s.velocity.squaredNorm() +
           p.mass * p.gravity * s.position.z();
  };
  const double e0 = energy(w);
  for (int i = 0; i < 10000; ++i) w = integrate_step(w, cmd, 1e-3, p, {}, {}, {});
  CHECK(std::abs(energy(w) - e0) <= 1e-6);
}

TEST_CASE("trajectory satisfies the relative-state equations of motion") {
  // Finite-difference residual check along an integrated trajectory over a
  // sinusoidal platform: d(rel)/dt from the log vs relative_derivatives.
  PhysicalParams p;
  PlatformMotion m;
  m.kind = PlatformMotion::Kind::Sinusoidal;
  m.amplitude = Vec3(0.2, 0.0, 0.1);
  m.omega = Vec3(0.4, 0.0, 0.5);

  WorldState w = hover_state(p);
  const ControlInput cmd{0.02, -0.01, p.mass * p.gravity * 1.001};
  const double dt = 1e-3;
  std::vector<WorldState> traj{w};
  for (int i = 0; i < 3000; ++i) {
    w = integrate_step(w, cmd, dt, p, {}, {}, m);
    traj.push_back(w);
  }
  // Sample after the inner-loop transient has settled; the equations assume
  // smooth applied inputs.
  for (std::size_t k = 1500; k < traj.size() - 1; k += 100) {
    const RelativeState prev = relative_state(traj[k - 1]);
    const RelativeState mid = relative_state(traj[k]);
    const RelativeState next = relative_state(traj[k + 1]);
    const double hdot_fd = (next.height - prev.height) / (2.0 * dt);
    const Vec3 vdot_fd = (next.velocity - prev.velocity) / (2.0 * dt);

    const Vec3 accel = translational_derivatives(traj[k], p);
    const PlatformState ps = platform_state(m, traj[k].time, traj[k].position.head<2>(),
                                            traj[k].velocity.head<2>(), accel.head<2>());
    const auto rd = relative_derivatives(mid, traj[k].attitude, traj[k].thrust, p,
                                         ps.acceleration, traj[k].velocity);
    CHECK(std::abs(hdot_fd - rd.height_rate) <= 1e-8);
    CHECK((vdot_fd - rd.velocity_rate).norm() <= 1e-8);
  }
}

TEST_CASE("integration is deterministic") {
  PhysicalParams p;
  PlatformMotion m;
  m.kind = PlatformMotion::Kind::Sinusoidal;
  m.amplitude = Vec3(0.5, 0.5, 0.2);
  m.omega = Vec3(0.3, 0.4, 0.5);
  auto run = [&]() {
    WorldState w = hover_state(p);
    for (int i = 0; i < 500; ++i)
      w = integrate_step(w, {0.01, 0.02, 11.9}, 1e-3, p, {}, {}, m);
    return w;
  };
  const WorldState a = run(), b = run();
  CHECK(a.position == b.position);
  CHECK(a.velocity == b.velocity);
  CHECK(a.thrust == b.thrust);
}

TEST_CASE("linear drag settles a fall at the terminal velocity") {
  PhysicalParams p;
  p.drag_k = Vec3(0.0, 0.0, 2.0);
  PlatformMotion ground;
  ground.offset = Vec3(0.0, 0.0, -1000.0);
  WorldState w;
  w.position = Vec3(0.0, 0.0, 3.0);
  w.thrust = 0.0;
  for (int i = 0; i < 20000; ++i)
    w = integrate_step(w, {0.0, 0.0, 0.0}, 1e-3, p, {}, {}, ground);
  const double terminal = -p.mass * p.gravity / p.drag_k.z();
  CHECK(w.velocity.z() == doctest::Approx(terminal).epsilon(1e-6));
}

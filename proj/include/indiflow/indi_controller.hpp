#pragma once

#include <optional>

#include "indiflow/effectiveness.hpp"
#include "indiflow/types.hpp"

namespace indiflow {

enum class Method { ConventionalG, DirectGinv, AnalyticOracle };
enum class AxisMode { Full3Axis, VerticalOnly };
enum class FlightPhase { Active, Shutdown };

struct GainConfig {
  Vec3 kp{1.0, 1.0, 1.0};
  Vec3 ki{0.0, 0.0, 0.0};
  Vec3 kd{0.0, 0.0, 0.0};
  Vec3 setpoint{0.0, 0.0, 0.0};  // rad/s; negative z component for landing
  double integral_limit = 0.5;   // rad/s * s, per-axis anti-windup clamp

  void validate() const {
    if (kp.minCoeff() < 0.0 || ki.minCoeff() < 0.0 || kd.minCoeff() < 0.0)
      throw ConfigError("gains must be >= 0");
    if (!(integral_limit > 0.0)) throw ConfigError("gains.integral_limit must be > 0");
  }
};

struct GuardConfig {
  double min_height = 0.05;  // m, shutdown threshold on relative height
  double flow_limit = 10.0;  // rad/s, fallback threshold on |flow_z|

  void validate() const {
    if (!(min_height > 0.0)) throw ConfigError("guard.min_height must be > 0");
    if (!(flow_limit > 0.0)) throw ConfigError("guard.flow_limit must be > 0");
  }
};

/// Latched shutdown: once tripped it never reverts. Trips when the height
/// reaches the guard threshold or the divergence magnitude the limit.
FlightPhase height_guard(double rel_height, double flow_z, const GuardConfig& guard,
                         FlightPhase current);

/// PID virtual input: nu = -Kp e - Ki int(e) - Kd ydot with e = y - setpoint.
/// `integral` accumulates trapezoidally (with `prev_error`) and is clamped.
Vec3 virtual_input(const Vec3& y, const Vec3& ydot, Vec3& integral, Vec3& prev_error,
                   bool& integral_primed, const GainConfig& gains, double dt);

/// Two cascaded single-pole stages at the same cutoff. Differentiating a
/// once-filtered signal at the control rate passes far too much noise
/// through the 1/dt gain; the second pole makes the derivative usable.
class TwoPoleFilter {
 public:
  explicit TwoPoleFilter(double cutoff_hz = 5.0) : cutoff_hz_(cutoff_hz) {}
  Vec3 step(const Vec3& raw, double dt);
  const Vec3& value() const { return stage2_; }
  bool primed() const { return primed_; }
  void reset() { primed_ = false; }

 private:
  double cutoff_hz_;
  Vec3 stage1_{0.0, 0.0, 0.0}, stage2_{0.0, 0.0, 0.0};
  bool primed_ = false;
};

/// Backward difference of low-pass-filtered samples; the first sample
/// primes the filter and yields a zero derivative.
class DerivativeEstimator {
 public:
  explicit DerivativeEstimator(double cutoff_hz = 5.0) : filter_(cutoff_hz) {}
  Vec3 step(const Vec3& raw, double dt, Vec3& filtered_out);
  void reset() { filter_.reset(); }

 private:
  TwoPoleFilter filter_;
};

/// u = saturate(u_prev + Ginv (nu - ydot)). Never fails; saturation is
/// reported through `saturated`.
ControlInput control_step_direct(const Vec3& nu, const Vec3& ydot, const Mat3& Ginv,
                                 const ControlInput& u_prev, const InputLimits& limits,
                                 bool* saturated = nullptr);

/// Conventional route: invert G first. An ill-conditioned G holds the
/// previous command (`held` set) instead of aborting.
ControlInput control_step_conventional(const Vec3& nu, const Vec3& ydot, const Mat3& G,
                                       double condition_limit, const ControlInput& u_prev,
                                       const InputLimits& limits, bool* saturated = nullptr,
                                       bool* held = nullptr);

/// Plant-side quantities the simulation hands the controller each tick: the
/// input actually applied (post inner loop) and the analytic effectiveness
/// at the current state (used by the oracle method and for logging
/// reference traces).
struct TruthChannel {
  Mat3 G = Mat3::Zero();
  std::optional<Mat3> Ginv;
  ControlInput applied;
};

struct ControllerConfig {
  Method method = Method::DirectGinv;
  AxisMode mode = AxisMode::Full3Axis;
  GainConfig gains;
  InputLimits limits;
  double derivative_cutoff_hz = 5.0;
  double condition_limit = 1e6;
  double excitation_threshold = 1e-3;  // input-increment norm gating identification
  int ident_interval = 10;      // control ticks per identification window
  double ident_cutoff_hz = 5.0;   // lag-matched filter pair for identification
  // Deterministic probing added to the command so the identification stays
  // well posed while the tracking loop is quiet. Amplitudes per channel.
  Vec3 dither{0.0, 0.0, 0.0};
  int warmup_ticks = 0;  // hold trim while the filters settle
  RlsEstimator::Options rls;
  Eigen::MatrixXd theta0;  // initial estimate; dimension set by mode/method
  ControlInput trim;       // initial held command (level, hover thrust)
};

struct ControlStepResult {
  ControlInput command;
  Vec3 y_filtered{0.0, 0.0, 0.0};
  Vec3 ydot{0.0, 0.0, 0.0};
  Vec3 nu{0.0, 0.0, 0.0};
  Vec3 du{0.0, 0.0, 0.0};
  bool saturated = false;
  bool held = false;
  bool skipped = false;
  Vec3 g_diag{0.0, 0.0, 0.0};   // diagonal of the G in play (estimate or truth)
  Vec3 gi_diag{0.0, 0.0, 0.0};  // diagonal of the inverse in play
  double p_trace = 0.0;         // estimator covariance trace (0 for the oracle)
};

/// Outer-loop controller. One tick = filter, differentiate, identify with
/// last tick's increments, form the virtual input, increment, saturate.
///
/// The increment is taken around the applied input passed through the same
/// low-pass as the flow, so both sides of the incremental relation carry the
/// same lag. Incrementing the raw previous command instead makes the loop
/// ring against the sensor filter and inner-loop dynamics.
class IndiController {
 public:
  explicit IndiController(const ControllerConfig& cfg);

  ControlStepResult step(const FlowObservation& observation, double dt,
                         const TruthChannel& truth);

  const RlsEstimator* estimator() const { return estimator_ ? &*estimator_ : nullptr; }
  const ControlInput& last_command() const { return u_prev_; }

 private:
  void fill_trace(ControlStepResult& r, const TruthChannel& truth,
                  const Mat3& inverse_in_play) const;
  ControllerConfig cfg_;
  std::optional<RlsEstimator> estimator_;
  DerivativeEstimator deriv_;
  Vec3 integral_{0.0, 0.0, 0.0};
  Vec3 prev_error_{0.0, 0.0, 0.0};
  bool integral_primed_ = false;
  ControlInput u_prev_;    // previous saturated command
  TwoPoleFilter u_filter_;  // applied input through the same filter as the flow
  Vec3 u_filtered_{0.0, 0.0, 0.0};
  // Identification state: the same filter acts on the flow and on the
  // integral of the applied input, so the windowed differences stay
  // lag-matched. Samples are taken every ident_interval ticks.
  TwoPoleFilter ident_y_filter_;
  TwoPoleFilter ident_w_filter_;
  Vec3 ident_u_integral_{0.0, 0.0, 0.0};
  Vec3 ident_y_prev_{0.0, 0.0, 0.0};
  Vec3 ident_w_prev_{0.0, 0.0, 0.0};
  Vec3 ident_u_prev_{0.0, 0.0, 0.0};
  Vec3 ident_ydot_prev_{0.0, 0.0, 0.0};
  int ident_primed_ = 0;  // pairs are formed after two full priming samples
  int ident_countdown_ = 0;
  Vec3 last_raw_{0.0, 0.0, 0.0};
  bool have_raw_ = false;
  Mat3 last_ginv_ = Mat3::Zero();
  int tick_ = 0;
};

}  // namespace indiflow

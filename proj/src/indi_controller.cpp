#include "indiflow/indi_controller.hpp"

#include <cmath>

namespace indiflow {

namespace {

// White-ish deterministic sign sequence, one independent stream per axis.
double dither_sign(int tick, int axis) {
  std::uint64_t x = static_cast<std::uint64_t>(tick) * 0x9e3779b97f4a7c15ull +
                    static_cast<std::uint64_t>(axis + 1) * 0xbf58476d1ce4e5b9ull;
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return (x & 1u) ? 1.0 : -1.0;
}

}  // namespace

FlightPhase height_guard(double rel_height, double flow_z, const GuardConfig& guard,
                         FlightPhase current) {
  if (current == FlightPhase::Shutdown) return FlightPhase::Shutdown;
  if (rel_height <= guard.min_height) return FlightPhase::Shutdown;
  if (std::abs(flow_z) >= guard.flow_limit) return FlightPhase::Shutdown;
  return FlightPhase::Active;
}

Vec3 virtual_input(const Vec3& y, const Vec3& ydot, Vec3& integral, Vec3& prev_error,
                   bool& integral_primed, const GainConfig& gains, double dt) {
  const Vec3 error = y - gains.setpoint;
  if (!integral_primed) {
    prev_error = error;
    integral_primed = true;
  }
  integral += 0.5 * (prev_error + error) * dt;
  integral = integral.cwiseMax(-gains.integral_limit).cwiseMin(gains.integral_limit);
  prev_error = error;
  return -gains.kp.cwiseProduct(error) - gains.ki.cwiseProduct(integral) -
         gains.kd.cwiseProduct(ydot);
}

Vec3 TwoPoleFilter::step(const Vec3& raw, double dt) {
  if (!primed_) {
    stage1_ = raw;
    stage2_ = raw;
    primed_ = true;
    return stage2_;
  }
  for (int i = 0; i < 3; ++i) {
    stage1_[i] = low_pass(stage1_[i], raw[i], cutoff_hz_, dt);
    stage2_[i] = low_pass(stage2_[i], stage1_[i], cutoff_hz_, dt);
  }
  return stage2_;
}

Vec3 DerivativeEstimator::step(const Vec3& raw, double dt, Vec3& filtered_out) {
  const bool first = !filter_.primed();
  const Vec3 prev = filter_.value();
  filtered_out = filter_.step(raw, dt);
  if (first) return Vec3::Zero();
  return (filtered_out - prev) / dt;
}

ControlInput control_step_direct(const Vec3& nu, const Vec3& ydot, const Mat3& Ginv,
                                 const ControlInput& u_prev, const InputLimits& limits,
                                 bool* saturated) {
  const Vec3 du = Ginv * (nu - ydot);
  return limits.clamp(ControlInput::from_vector(u_prev.as_vector() + du), saturated);
}

ControlInput control_step_conventional(const Vec3& nu, const Vec3& ydot, const Mat3& G,
                                       double condition_limit, const ControlInput& u_prev,
                                       const InputLimits& limits, bool* saturated,
                                       bool* held) {
  if (saturated) *saturated = false;
  const std::optional<Mat3> inv = invert_effectiveness(G, condition_limit);
  if (!inv) {
    if (held) *held = true;
    return u_prev;
  }
  if (held) *held = false;
  return control_step_direct(nu, ydot, *inv, u_prev, limits, saturated);
}

void IndiController::fill_trace(ControlStepResult& r, const TruthChannel& truth,
                                const Mat3& inverse_in_play) const {
  r.g_diag = truth.G.diagonal();
  r.gi_diag = truth.Ginv ? Vec3(truth.Ginv->diagonal()) : Vec3::Zero();
  if (!estimator_) return;
  r.p_trace = estimator_->covariance_trace();
  const bool vertical = cfg_.mode == AxisMode::VerticalOnly;
  if (cfg_.method == Method::ConventionalG) {
    if (vertical)
      r.g_diag.z() = estimator_->estimate()(0, 0);
    else
      r.g_diag = estimator_->estimate().diagonal();
    r.gi_diag = inverse_in_play.diagonal();
  } else if (vertical) {
    r.gi_diag.z() = estimator_->estimate()(0, 0);
  } else {
    r.gi_diag = estimator_->estimate().diagonal();
  }
}

IndiController::IndiController(const ControllerConfig& cfg)
    : cfg_(cfg), deriv_(cfg.derivative_cutoff_hz), u_prev_(cfg.trim),
      u_filter_(cfg.derivative_cutoff_hz), ident_y_filter_(cfg.ident_cutoff_hz),
      ident_w_filter_(cfg.ident_cutoff_hz) {
  cfg_.gains.validate();
  cfg_.limits.validate();
  if (cfg_.method != Method::AnalyticOracle)
    estimator_.emplace(cfg_.theta0, cfg_.rls);
}

ControlStepResult IndiController::step(const FlowObservation& observation, double dt,
                                       const TruthChannel& truth) {
  ControlStepResult r;

  // Invalid observations are held at the last raw value.
  const Vec3 y_raw =
      observation.valid ? observation.flow : (have_raw_ ? last_raw_ : Vec3::Zero());
  last_raw_ = y_raw;
  have_raw_ = true;

  const Vec3 ydot = deriv_.step(y_raw, dt, r.y_filtered);
  r.ydot = ydot;

  // Applied input through the same filter as the flow, so the increment
  // operating point and the measured derivative share one lag.
  u_filtered_ = u_filter_.step(truth.applied.as_vector(), dt);

  // Identification runs on window-averaged signals: every ident_interval
  // ticks the filtered flow and the filtered input integral are differenced,
  // which applies the same linear operator to both sides of the incremental
  // relation (window mean of ydot on one side, of u on the other). Pairing
  // the differences of consecutive windows makes each sample resolve a real
  // change instead of per-tick measurement jitter. The pair is only
  // informative about the input-output map when the input actually moved, so
  // both identification directions are gated on input excitation.
  if (estimator_) {
    ident_u_integral_ += truth.applied.as_vector() * dt;
    const Vec3 y_window = ident_y_filter_.step(y_raw, dt);
    const Vec3 w_window = ident_w_filter_.step(ident_u_integral_, dt);
    if (tick_ == 0) {
      ident_y_prev_ = y_window;
      ident_w_prev_ = w_window;
      ident_countdown_ = cfg_.ident_interval;
    } else if (--ident_countdown_ <= 0) {
      const double span = cfg_.ident_interval * dt;
      const Vec3 ydot_s = (y_window - ident_y_prev_) / span;
      const Vec3 u_s = (w_window - ident_w_prev_) / span;
      ident_y_prev_ = y_window;
      ident_w_prev_ = w_window;
      ident_countdown_ = cfg_.ident_interval;

      if (ident_primed_ < 2) {
        ident_ydot_prev_ = ydot_s;
        ident_u_prev_ = u_s;
        ++ident_primed_;
      } else {
        const Vec3 du_prev = u_s - ident_u_prev_;
        const Vec3 dydot = ydot_s - ident_ydot_prev_;
        ident_u_prev_ = u_s;
        ident_ydot_prev_ = ydot_s;

        const bool excited =
            (cfg_.mode == AxisMode::VerticalOnly ? std::abs(du_prev.z())
                                                 : du_prev.norm()) >=
            cfg_.excitation_threshold;
        if (!excited) {
          r.skipped = true;
        } else if (cfg_.mode == AxisMode::VerticalOnly) {
          Eigen::VectorXd reg(1), resp(1);
          if (cfg_.method == Method::DirectGinv) {
            reg << dydot.z();
            resp << du_prev.z();
          } else {
            reg << du_prev.z();
            resp << dydot.z();
          }
          r.skipped = !estimator_->update(reg, resp);
        } else if (cfg_.method == Method::DirectGinv) {
          r.skipped = !estimator_->update(dydot, du_prev);
        } else {
          r.skipped = !estimator_->update(du_prev, dydot);
        }
      }
    }
  }

  r.nu = virtual_input(r.y_filtered, ydot, integral_, prev_error_, integral_primed_,
                       cfg_.gains, dt);

  if (tick_ < cfg_.warmup_ticks) {
    r.command = u_prev_;
    fill_trace(r, truth, last_ginv_);
    ++tick_;
    return r;
  }

  // Resolve the inverse effectiveness in play this tick.
  const bool vertical = cfg_.mode == AxisMode::VerticalOnly;
  double gi33 = 0.0;
  Mat3 Gi = Mat3::Zero();
  bool have_inverse = true;
  switch (cfg_.method) {
    case Method::AnalyticOracle:
      if (vertical) {
        const double g33 = truth.G(2, 2);
        if (std::abs(g33) * cfg_.condition_limit >= 1.0)
          gi33 = 1.0 / g33;
        else
          have_inverse = false;
      } else if (truth.Ginv) {
        Gi = *truth.Ginv;
      } else {
        have_inverse = false;
      }
      break;
    case Method::DirectGinv:
      if (vertical)
        gi33 = estimator_->estimate()(0, 0);
      else
        Gi = estimator_->estimate();
      break;
    case Method::ConventionalG:
      if (vertical) {
        const double g33 = estimator_->estimate()(0, 0);
        if (std::abs(g33) * cfg_.condition_limit >= 1.0)
          gi33 = 1.0 / g33;
        else
          have_inverse = false;
      } else {
        const std::optional<Mat3> inv =
            invert_effectiveness(estimator_->estimate(), cfg_.condition_limit);
        if (inv)
          Gi = *inv;
        else
          have_inverse = false;
      }
      break;
  }

  ControlInput u_cmd;
  if (!have_inverse) {
    r.held = true;
    u_cmd = u_prev_;  // hold the previous (already saturated) command
    Gi = last_ginv_;
  } else {
    Vec3 probe = Vec3::Zero();
    if (estimator_) {
      const int window = tick_ / cfg_.ident_interval;
      probe = Vec3(dither_sign(window, 0) * cfg_.dither.x(),
                   dither_sign(window, 1) * cfg_.dither.y(),
                   dither_sign(window, 2) * cfg_.dither.z());
      if (vertical) probe.head<2>().setZero();
    }
    if (vertical) {
      Gi(2, 2) = gi33;
      const double thrust =
          u_filtered_.z() + gi33 * (r.nu.z() - ydot.z()) + probe.z();
      u_cmd = cfg_.limits.clamp({0.0, 0.0, thrust}, &r.saturated);
    } else {
      const ControlInput base = ControlInput::from_vector(u_filtered_ + probe);
      u_cmd = control_step_direct(r.nu, ydot, Gi, base, cfg_.limits, &r.saturated);
    }
    last_ginv_ = Gi;
  }

  r.du = u_cmd.as_vector() - u_prev_.as_vector();
  r.command = u_cmd;
  fill_trace(r, truth, last_ginv_);

  u_prev_ = u_cmd;
  ++tick_;
  return r;
}

}  // namespace indiflow

#include "indiflow/effectiveness.hpp"

#include <cmath>

namespace indiflow {

Mat3 analytic_G(const RelativeState& x, const Attitude& att, double thrust,
                const PhysicalParams& params, const Vec3& c) {
  if (!(x.height > 0.0))
    throw DegenerateHeight("effectiveness undefined at height " +
                           std::to_string(x.height));
  const double ct = std::cos(att.pitch), st = std::sin(att.pitch);
  const double cp = std::cos(att.roll), sp = std::sin(att.roll);
  const double T = thrust;
  Mat3 G;
  G << c.x() * cp * ct * T, -c.x() * sp * st * T, c.x() * cp * st,
       0.0, -c.y() * cp * T, -c.y() * sp,
       -c.z() * cp * st * T, -c.z() * sp * ct * T, c.z() * cp * ct;
  G /= params.mass * x.height;
  return G;
}

std::optional<Mat3> invert_effectiveness(const Mat3& G, double condition_limit,
                                         double* condition_out) {
  const double det = G.determinant();
  if (condition_out) *condition_out = std::numeric_limits<double>::infinity();
  if (det == 0.0 || !std::isfinite(det)) return std::nullopt;

  const Mat3 inv = G.inverse();
  const double cond = G.cwiseAbs().rowwise().sum().maxCoeff() *
                      inv.cwiseAbs().rowwise().sum().maxCoeff();
  if (condition_out) *condition_out = cond;
  if (!std::isfinite(cond) || cond > condition_limit) return std::nullopt;
  return inv;
}

std::optional<Mat3> true_Ginv(const RelativeState& x, const Attitude& att,
                              double thrust, const PhysicalParams& params,
                              const Vec3& c, double condition_limit) {
  return invert_effectiveness(analytic_G(x, att, thrust, params, c), condition_limit);
}

RlsEstimator::RlsEstimator(const Eigen::MatrixXd& theta0, const Options& opts)
    : theta_(theta0), opts_(opts) {
  opts_.validate();
  const int regressor_dim =
      opts_.diagonal_only ? 1 : static_cast<int>(theta_.cols());
  for (int i = 0; i < theta_.rows(); ++i)
    p_.push_back(opts_.p0 *
                 Eigen::MatrixXd::Identity(regressor_dim, regressor_dim));
  pphi_.resize(regressor_dim);
  gain_.resize(regressor_dim);
}

bool RlsEstimator::update(const Eigen::VectorXd& regressor,
                          const Eigen::VectorXd& response) {
  if (regressor.size() != theta_.cols() || response.size() != theta_.rows())
    throw DimensionMismatch("rls update: regressor " +
                            std::to_string(regressor.size()) + ", response " +
                            std::to_string(response.size()) + " vs estimator " +
                            std::to_string(theta_.rows()) + "x" +
                            std::to_string(theta_.cols()));
  if (regressor.norm() < opts_.epsilon_reg) return false;

  const int rows = static_cast<int>(theta_.rows());
  for (int i = 0; i < rows; ++i) {
    Eigen::MatrixXd& P = p_[i];
    if (opts_.diagonal_only) {
      const double phi = regressor[i];
      double& p = P(0, 0);
      const double denom = opts_.gamma + phi * p * phi;
      const double gain = p * phi / denom;
      theta_(i, i) += gain * (response[i] - theta_(i, i) * phi);
      p = (p - gain * phi * p) / opts_.gamma;
      if (p > opts_.p_trace_max) p = opts_.p_trace_max;
      continue;
    }
    pphi_.noalias() = P * regressor;
    const double denom = opts_.gamma + regressor.dot(pphi_);
    gain_ = pphi_ / denom;
    const double innovation = response[i] - theta_.row(i).dot(regressor);
    theta_.row(i) += innovation * gain_.transpose();
    P.noalias() -= gain_ * pphi_.transpose();
    P /= opts_.gamma;
    const double tr = P.trace();
    if (tr > opts_.p_trace_max) P *= opts_.p_trace_max / tr;
  }
  ++update_count_;
  return true;
}

double RlsEstimator::covariance_trace() const {
  double tr = 0.0;
  for (const auto& P : p_) tr += P.trace();
  return tr;
}

}  // namespace indiflow

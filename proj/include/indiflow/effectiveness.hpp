#pragma once

#include <Eigen/Dense>
#include <optional>

#include "indiflow/flow_sensor.hpp"
#include "indiflow/types.hpp"

namespace indiflow {

/// Control effectiveness: sensitivity of the flow derivative to the input
/// u = [pitch, roll, thrust]. Rows are ordered [flow_x, flow_y, flow_z].
///
///             | c_x cos(phi) cos(th) T   -c_x sin(phi) sin(th) T   c_x cos(phi) sin(th) |
/// 1/(M h)  *  | 0                        -c_y cos(phi) T           -c_y sin(phi)        |
///             | -c_z cos(phi) sin(th) T  -c_z sin(phi) cos(th) T   c_z cos(phi) cos(th) |
///
/// Throws DegenerateHeight when the relative height is not positive.
Mat3 analytic_G(const RelativeState& x, const Attitude& att, double thrust,
                const PhysicalParams& params, const Vec3& c);

/// Cofactor inversion guarded by an infinity-norm condition estimate.
/// Returns nullopt when the estimate exceeds `condition_limit` (the caller
/// is expected to hold its previous command). `condition_out`, when given,
/// receives the estimate (inf for singular input).
std::optional<Mat3> invert_effectiveness(const Mat3& G, double condition_limit = 1e6,
                                         double* condition_out = nullptr);

/// invert_effectiveness(analytic_G(...)): the ground-truth inverse used by
/// the oracle controller and the convergence diagnostics.
std::optional<Mat3> true_Ginv(const RelativeState& x, const Attitude& att,
                              double thrust, const PhysicalParams& params,
                              const Vec3& c, double condition_limit = 1e6);

/// Exponentially weighted recursive least squares, one independent recursion
/// per output row (all rows share the regressor unless diagonal_only, in
/// which case row i regresses on component i alone).
///
/// Per row: gain = P phi / (gamma + phi' P phi); theta += gain * innovation;
/// P = (P - gain phi' P) / gamma. Updates are skipped entirely when the
/// regressor norm falls below the excitation threshold.
class RlsEstimator {
 public:
  struct Options {
    double gamma = 0.95;        // forgetting factor, (0, 1]
    double p0 = 1e3;            // initial covariance scale
    double epsilon_reg = 1e-6;  // excitation threshold on the regressor norm
    bool diagonal_only = false;
    double p_trace_max = 1e4;   // covariance wind-up bound, per row

    void validate() const {
      if (!(gamma > 0.0 && gamma <= 1.0))
        throw ConfigError("estimator gamma must be in (0, 1]");
      if (!(p0 > 0.0)) throw ConfigError("estimator p0 must be > 0");
      if (epsilon_reg < 0.0) throw ConfigError("estimator epsilon must be >= 0");
      if (!(p_trace_max > 0.0)) throw ConfigError("estimator p_trace_max must be > 0");
    }
  };

  RlsEstimator(const Eigen::MatrixXd& theta0, const Options& opts);

  /// One recursion over all rows. Returns false (state untouched) when the
  /// excitation guard rejects the regressor. Throws DimensionMismatch.
  bool update(const Eigen::VectorXd& regressor, const Eigen::VectorXd& response);

  const Eigen::MatrixXd& estimate() const { return theta_; }
  const Eigen::MatrixXd& covariance(int row) const { return p_.at(row); }
  double covariance_trace() const;
  int update_count() const { return update_count_; }
  int rows() const { return static_cast<int>(theta_.rows()); }
  int regressor_size() const { return static_cast<int>(theta_.cols()); }

 private:
  Eigen::MatrixXd theta_;
  std::vector<Eigen::MatrixXd> p_;  // one covariance per output row
  Options opts_;
  int update_count_ = 0;
  // preallocated workspace, no allocation inside update()
  Eigen::VectorXd pphi_, gain_;
};

}  // namespace indiflow

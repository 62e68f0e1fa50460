#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "indiflow/effectiveness.hpp"

using namespace indiflow;

namespace {

// Independent oracle for the estimator tests: ordinary batch least squares,
// one output row at a time, via column-pivoted QR.
Eigen::MatrixXd batch_least_squares(const Eigen::MatrixXd& regressors,
                                    const Eigen::MatrixXd& responses) {
  Eigen::MatrixXd theta(responses.cols(), regressors.cols());
  const auto qr = regressors.colPivHouseholderQr();
  for (int i = 0; i < responses.cols(); ++i)
    theta.row(i) = qr.solve(responses.col(i)).transpose();
  return theta;
}

const PhysicalParams kParams;  // M = 1.2, g = 9.81
const Vec3 kUnitC(1.0, 1.0, 1.0);

Mat3 hover_G(double height) {
  return analytic_G({height, Vec3::Zero()}, {}, kParams.mass * kParams.gravity,
                    kParams, kUnitC);
}

}  // namespace

TEST_CASE("analytic G at hover matches the hand evaluation") {
  const Mat3 G = hover_G(3.0);
  // T/(M h) = 9.81/3 = 3.27 with thrust at M g and unit constants.
  CHECK(G(0, 0) == doctest::Approx(3.27).epsilon(1e-12));
  CHECK(G(1, 1) == doctest::Approx(-3.27).epsilon(1e-12));
  CHECK(G(2, 2) == doctest::Approx(1.0 / 3.6).epsilon(1e-12));
  CHECK(G(0, 0) == doctest::Approx(3.27).epsilon(1e-4));
  CHECK(G(2, 2) == doctest::Approx(0.27778).epsilon(1e-4));

  // All off-diagonal entries vanish at level attitude.
  CHECK(G(0, 1) == 0.0);
  CHECK(G(0, 2) == 0.0);
  CHECK(G(1, 0) == 0.0);
  CHECK(G(1, 2) == 0.0);
  CHECK(G(2, 0) == 0.0);
  CHECK(G(2, 1) == 0.0);
}

TEST_CASE("G21 is structurally zero for any attitude") {
  const Attitude att{0.25, -0.3};
  const Mat3 G = analytic_G({1.7, Vec3::Zero()}, att, 14.0, kParams, kUnitC);
  CHECK(G(1, 0) == 0.0);
}

TEST_CASE("G scales exactly as the inverse height") {
  const Attitude att{0.1, 0.2};
  const Mat3 G1 = analytic_G({1.5, Vec3::Zero()}, att, 13.0, kParams, kUnitC);
  const Mat3 G2 = analytic_G({3.0, Vec3::Zero()}, att, 13.0, kParams, kUnitC);
  CHECK((G1 / 2.0 - G2).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("inverting the identity gives the identity") {
  const auto inv = invert_effectiveness(Mat3::Identity());
  REQUIRE(inv.has_value());
  CHECK((*inv - Mat3::Identity()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hover inverse is the reciprocal diagonal") {
  const auto inv = invert_effectiveness(hover_G(3.0));
  REQUIRE(inv.has_value());
  CHECK((*inv)(0, 0) == doctest::Approx(1.0 / 3.27).epsilon(1e-12));
  CHECK((*inv)(0, 0) == doctest::Approx(0.3058).epsilon(1e-3));
  CHECK((*inv)(1, 1) == doctest::Approx(-0.3058).epsilon(1e-3));
  CHECK((*inv)(2, 2) == doctest::Approx(3.6).epsilon(1e-12));
}

TEST_CASE("zero-thrust effectiveness is singular") {
  const Mat3 G = analytic_G({2.0, Vec3::Zero()}, {0.1, 0.1}, 0.0, kParams, kUnitC);
  double cond = 0.0;
  CHECK_FALSE(invert_effectiveness(G, 1e6, &cond).has_value());
  CHECK(std::isinf(cond));
}

TEST_CASE("inversion identity and height scaling over the flight envelope") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> angle(-0.3, 0.3);
  std::uniform_real_distribution<double> thrust(0.5 * 11.772, 1.5 * 11.772);
  std::uniform_real_distribution<double> height(0.1, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const RelativeState x{height(rng), Vec3::Zero()};
    const Attitude att{angle(rng), angle(rng)};
    const double T = thrust(rng);
    const Mat3 G = analytic_G(x, att, T, kParams, kUnitC);
    const auto Gi = true_Ginv(x, att, T, kParams, kUnitC);
    REQUIRE(Gi.has_value());
    CHECK(((G * *Gi) - Mat3::Identity()).cwiseAbs().maxCoeff() <= 1e-9);

    const RelativeState x2{2.0 * x.height, Vec3::Zero()};
    const Mat3 G2 = analytic_G(x2, att, T, kParams, kUnitC);
    const auto Gi2 = true_Ginv(x2, att, T, kParams, kUnitC);
    REQUIRE(Gi2.has_value());
    CHECK((G2 - G / 2.0).cwiseAbs().maxCoeff() == 0.0);
    CHECK((*Gi2 - 2.0 * *Gi).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("analytic G rejects non-positive heights") {
  CHECK_THROWS_AS(analytic_G({0.0, Vec3::Zero()}, {}, 10.0, kParams, kUnitC),
                  DegenerateHeight);
}

TEST_CASE("sub-threshold regressors are skipped without touching state") {
  RlsEstimator::Options opts;
  opts.epsilon_reg = 1e-6;
  RlsEstimator est(Eigen::MatrixXd::Identity(3, 3), opts);
  const Eigen::MatrixXd theta_before = est.estimate();
  const Eigen::MatrixXd p_before = est.covariance(0);

  Eigen::VectorXd tiny(3), resp(3);
  tiny << 1e-9, -1e-8, 1e-7;
  resp << 1.0, 1.0, 1.0;
  for (int i = 0; i < 50; ++i) CHECK_FALSE(est.update(tiny, resp));

  CHECK(est.estimate() == theta_before);
  CHECK(est.covariance(0) == p_before);
  CHECK(est.update_count() == 0);
}

TEST_CASE("rls dimension mismatch is an error") {
  RlsEstimator est(Eigen::MatrixXd::Zero(3, 3), {});
  CHECK_THROWS_AS(est.update(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(3)),
                  DimensionMismatch);
  CHECK_THROWS_AS(est.update(Eigen::VectorXd::Ones(3), Eigen::VectorXd::Zero(1)),
                  DimensionMismatch);
}

TEST_CASE("rls with unit forgetting matches batch least squares") {
  Mat3 truth;
  truth << 3.2, 0.1, -0.4,
           0.0, -2.8, 0.2,
           -0.3, 0.5, 0.9;

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 50;
  Eigen::MatrixXd regressors(n, 3), responses(n, 3);
  for (int k = 0; k < n; ++k) {
    const Vec3 phi(u(rng), u(rng), u(rng));
    regressors.row(k) = phi.transpose();
    responses.row(k) = (truth * phi).transpose();
  }

  const Eigen::MatrixXd oracle = batch_least_squares(regressors, responses);

  RlsEstimator::Options opts;
  opts.gamma = 1.0;
  opts.p0 = 1e9;  // weak prior so the recursion converges to the batch solution
  opts.p_trace_max = 1e12;
  RlsEstimator est(Eigen::MatrixXd::Zero(3, 3), opts);
  for (int k = 0; k < n; ++k)
    CHECK(est.update(regressors.row(k).transpose(), responses.row(k).transpose()));

  const double rel_batch =
      (est.estimate() - oracle).norm() / oracle.norm();
  CHECK(rel_batch <= 1e-8);
  const double rel_truth = (est.estimate() - truth).norm() / truth.norm();
  CHECK(rel_truth <= 1e-8);
}

TEST_CASE("rls tracks a drifting scalar map") {
  // theta(t) = 1 + 0.01 t sampled at 100 Hz with persistent excitation;
  // oracle: sliding-window batch least squares over the same samples.
  const double dt = 0.01;
  const int n = 1000;
  std::vector<double> phis(n), resps(n);
  for (int k = 0; k < n; ++k) {
    const double t = k * dt;
    phis[k] = (k % 2 == 0 ? 1.0 : -1.0) + 0.3 * std::sin(2.0 * M_PI * 1.3 * t);
    resps[k] = (1.0 + 0.01 * t) * phis[k];
  }

  RlsEstimator::Options opts;
  opts.gamma = 0.8;
  RlsEstimator est(Eigen::MatrixXd::Zero(1, 1), opts);

  const int window = 10;
  double max_err_truth = 0.0, max_err_window = 0.0;
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd phi(1), resp(1);
    phi << phis[k];
    resp << resps[k];
    est.update(phi, resp);
    if (k * dt < 2.0 || k + 1 < window) continue;

    Eigen::MatrixXd regressors(window, 1), responses(window, 1);
    for (int j = 0; j < window; ++j) {
      regressors(j, 0) = phis[k - window + 1 + j];
      responses(j, 0) = resps[k - window + 1 + j];
    }
    const double oracle = batch_least_squares(regressors, responses)(0, 0);
    const double theta = est.estimate()(0, 0);
    max_err_truth = std::max(max_err_truth, std::abs(theta - (1.0 + 0.01 * k * dt)));
    max_err_window = std::max(max_err_window, std::abs(theta - oracle));
  }
  CHECK(max_err_truth <= 0.02);
  CHECK(max_err_window <= 0.02);
}

TEST_CASE("forward and inverse identification agree on noiseless data") {
  Mat3 truth;
  truth << 3.0, 0.2, 0.0,
           0.0, -2.5, 0.3,
           -0.2, 0.1, 0.8;
  const Mat3 truth_inv = truth.inverse();

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  RlsEstimator::Options opts;
  opts.gamma = 1.0;
  opts.p0 = 1e9;
  opts.p_trace_max = 1e12;
  RlsEstimator forward(Eigen::MatrixXd::Zero(3, 3), opts);
  RlsEstimator inverse(Eigen::MatrixXd::Zero(3, 3), opts);

  for (int k = 0; k < 200; ++k) {
    const Vec3 du(u(rng), u(rng), u(rng));
    const Vec3 dydot = truth * du;
    forward.update(du, dydot);
    inverse.update(dydot, du);
  }

  const Mat3 forward_inverted = Mat3(forward.estimate()).inverse();
  const double rel =
      (forward_inverted - inverse.estimate()).norm() / inverse.estimate().norm();
  CHECK(rel <= 1e-6);
  CHECK((inverse.estimate() - truth_inv).norm() / truth_inv.norm() <= 1e-6);
}

TEST_CASE("diagonal-only mode identifies per-axis gains independently") {
  const Vec3 diag_truth(3.0, -2.5, 0.8);
  RlsEstimator::Options opts;
  opts.gamma = 1.0;
  opts.p0 = 1e9;
  opts.p_trace_max = 1e12;
  opts.diagonal_only = true;
  RlsEstimator est(Eigen::MatrixXd::Zero(3, 3), opts);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    const Vec3 phi(u(rng), u(rng), u(rng));
    est.update(phi, diag_truth.cwiseProduct(phi));
  }
  for (int i = 0; i < 3; ++i)
    CHECK(est.estimate()(i, i) == doctest::Approx(diag_truth[i]).epsilon(1e-9));
  CHECK(est.estimate()(0, 1) == 0.0);
}

#include <Eigen/LU>
#include <doctest.h>

#include <cmath>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "profmon/competitors.hpp"
#include "profmon/error.hpp"
#include "profmon/stats.hpp"

using namespace profmon;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("T2 closed forms") {
  const GaussianModel id(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  CHECK(t2_statistic(id, Eigen::Vector2d(3, 4)) == doctest::Approx(25.0).epsilon(1e-14));
  const GaussianModel shifted(Eigen::Vector2d(1, -2), Eigen::MatrixXd::Identity(2, 2));
  CHECK(t2_statistic(shifted, Eigen::Vector2d(1, -2)) == 0.0);
  const GaussianModel diag(Eigen::VectorXd::Zero(2), Eigen::Vector2d(4, 1).asDiagonal());
  CHECK(t2_statistic(diag, Eigen::Vector2d(2, 1)) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(t2_statistic(id, Eigen::Vector3d(1, 2, 3)), Error);
}

TEST_CASE("T2 against an explicit inverse") {
  RngStream rng(3);
  Eigen::MatrixXd a(6, 6);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  const Eigen::MatrixXd sigma = a * a.transpose() + Eigen::MatrixXd::Identity(6, 6);
  Eigen::VectorXd mu(6), y(6);
  for (Eigen::Index i = 0; i < 6; ++i) {
    mu(i) = rng.normal();
    y(i) = rng.normal();
  }
  const GaussianModel model(mu, sigma);
  const double ref = (y - mu).dot(sigma.inverse() * (y - mu));
  CHECK(t2_statistic(model, y) == doctest::Approx(ref).epsilon(1e-10));
}

TEST_CASE("T2 decisions are invariant under affine reparameterization") {
  const auto model = true_model(study_in_control(1), study_grid(1));
  RngStream rng(5);
  Eigen::MatrixXd a(10, 10);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = rng.normal();
  a += 4 * Eigen::MatrixXd::Identity(10, 10);
  Eigen::VectorXd b(10);
  for (Eigen::Index i = 0; i < 10; ++i) b(i) = 10 * rng.normal();
  const GaussianModel mapped(a * model.mean() + b, a * model.covariance() * a.transpose());
  const double limit = 18.0;
  int disagreements = 0;
  for (const auto& y : sample(model, 2000, rng)) {
    const double s0 = t2_statistic(model, y.values);
    const double s1 = t2_statistic(mapped, Eigen::VectorXd(a * y.values + b));
    CHECK(s1 == doctest::Approx(s0).epsilon(1e-7));
    if (std::abs(s0 - limit) > 1e-6) disagreements += (s0 > limit) != (s1 > limit);
  }
  CHECK(disagreements == 0);
}

TEST_CASE("T2 under the true model is chi-square with n degrees of freedom") {
  const auto model = true_model(study_in_control(1), study_grid(1));
  RngStream rng(8);
  Eigen::MatrixXd draws(10, 100000);
  sample_into(model, draws, rng);
  std::vector<double> t2(static_cast<std::size_t>(draws.cols()));
  for (Eigen::Index c = 0; c < draws.cols(); ++c) {
    t2[static_cast<std::size_t>(c)] = t2_statistic(model, draws.col(c));
  }
  const boost::math::chi_squared chi(10.0);
  const double d = ks_statistic(t2, [&](double x) { return x <= 0 ? 0.0 : boost::math::cdf(chi, x); });
  CHECK(d < ks_critical_value(t2.size(), 1e-3));
}

TEST_CASE("PCA keeps one component for data on a line") {
  RngStream rng(2);
  std::vector<ProfileSample> hist;
  for (int i = 0; i < 500; ++i) {
    const double t = rng.normal();
    hist.push_back({Eigen::Vector2d(t + 1e-3 * rng.normal(), 2 * t + 1e-3 * rng.normal()), 0});
  }
  const auto chart = pca_chart_fit(hist, 0.9);
  CHECK(chart.q() == 1);
  const Eigen::Vector2d dir = chart.loadings.col(0);
  CHECK(std::abs(std::abs(dir(1) / dir(0)) - 2.0) < 1e-2);
}

TEST_CASE("PCA on isotropic covariance keeps ceil of the fraction") {
  const GaussianModel iso(Eigen::VectorXd::Zero(10), Eigen::MatrixXd::Identity(10, 10));
  CHECK(pca_chart_from_model(iso, 0.9).q() == 9);
  CHECK(pca_chart_from_model(iso, 0.85).q() == 9);
  CHECK(pca_chart_from_model(iso, 1.0).q() == 10);
  CHECK_THROWS_AS(pca_chart_from_model(iso, 0.0), Error);
}

TEST_CASE("PCA loadings are orthonormal and scores decorrelated") {
  const auto model = true_model(study_in_control(1), study_grid(1));
  RngStream rng(4);
  std::vector<ProfileSample> hist = sample(model, 5000, rng);
  const auto chart = pca_chart_fit(hist, 0.9);
  const Eigen::MatrixXd gram = chart.loadings.transpose() * chart.loadings;
  CHECK((gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-10);
  for (Eigen::Index i = 1; i < chart.eigenvalues.size(); ++i) {
    CHECK(chart.eigenvalues(i - 1) >= chart.eigenvalues(i));
  }
  Eigen::MatrixXd draws(10, 100000);
  sample_into(model, draws, rng);
  const Eigen::MatrixXd scores = chart.loadings.transpose() * (draws.colwise() - chart.mean);
  const Eigen::MatrixXd centered = scores.colwise() - scores.rowwise().mean();
  const Eigen::MatrixXd cov = centered * centered.transpose() / static_cast<double>(draws.cols() - 1);
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    for (Eigen::Index j = 0; j < cov.cols(); ++j) {
      if (i != j) CHECK(std::abs(cov(i, j)) < 0.02);
    }
  }
}

TEST_CASE("full-rank PCA reproduces T2") {
  for (int study : {1, 3}) {
    const auto model = true_model(study_in_control(study), study_grid(study));
    const auto chart = pca_chart_from_model(model, 1.0);
    REQUIRE(chart.q() == 10);
    RngStream rng(6);
    for (const auto& y : sample(model, 500, rng)) {
      const double t2 = t2_statistic(model, y.values);
      CHECK(std::abs(chart.statistic(y.values) - t2) < 1e-8 * std::max(1.0, t2));
    }
  }
}

TEST_CASE("Monte Carlo limit matches the chi-square quantile for a known model") {
  const auto grid = study_grid(1);
  const auto spec = study_in_control(1);
  const auto model = true_model(spec, grid);
  RngStream rng(12);
  const double limit = calibrate_to_far(
      [&](const Eigen::Ref<const Eigen::VectorXd>& y) { return t2_statistic(model, y); }, spec,
      grid, 0.001, 1000000, rng);
  CHECK(limit == doctest::Approx(chi_square_quantile(0.999, 10.0)).epsilon(0.02));
  CHECK(limit == doctest::Approx(29.59).epsilon(0.02));
}

TEST_CASE("limit is the empirical quantile") {
  const auto grid = study_grid(1);
  const auto spec = study_in_control(1);
  const auto model = true_model(spec, grid);
  const ChartStatistic stat = [&](const Eigen::Ref<const Eigen::VectorXd>& y) {
    return t2_statistic(model, y);
  };
  RngStream a(9), b(9);
  const double limit = calibrate_to_far(stat, spec, grid, 0.01, 10000, a);
  ProcessSampler sampler(spec, grid);
  std::vector<double> s(10000);
  Eigen::VectorXd y(10);
  for (auto& v : s) {
    sampler.draw(b, y);
    v = stat(y);
  }
  std::sort(s.begin(), s.end());
  CHECK(limit == s[9899]);
  CHECK(std::count_if(s.begin(), s.end(), [&](double v) { return v > limit; }) == 100);
}

TEST_CASE("calibration boundaries") {
  const auto grid = study_grid(1);
  const auto spec = study_in_control(1);
  const ChartStatistic stat = [](const Eigen::Ref<const Eigen::VectorXd>& y) { return y.sum(); };
  RngStream rng(1);
  CHECK(code_of([&] { calibrate_to_far(stat, spec, grid, 0.0, 1000, rng); }) ==
        ErrorCode::Unattainable);
  CHECK(code_of([&] { calibrate_to_far(stat, spec, grid, 1.0, 1000, rng); }) ==
        ErrorCode::Unattainable);
  CHECK(code_of([&] { calibrate_to_far(stat, spec, grid, 0.001, 1000, rng); }) ==
        ErrorCode::InsufficientReps);
}

TEST_CASE("alarm probability for a target false-alarm rate") {
  // tau q false alarms expected before one true alarm.
  const double q = alarm_prob_for_far(0.2, 100);
  CHECK(100 * q / (100 * q + 1) == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(code_of([] { alarm_prob_for_far(0.0, 100); }) == ErrorCode::Unattainable);
  CHECK(code_of([] { alarm_prob_for_far(0.999, 1); }) == ErrorCode::Unattainable);
}

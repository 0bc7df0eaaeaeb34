#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "profmon/error.hpp"
#include "profmon/monitor.hpp"
#include "profmon/normal.hpp"
#include "profmon/processes.hpp"
#include "profmon/stats.hpp"

using namespace profmon;

namespace {

ProfileSample profile(std::initializer_list<double> v, std::int64_t t = 0) {
  ProfileSample p;
  p.values = Eigen::Map<const Eigen::VectorXd>(v.begin(), static_cast<Eigen::Index>(v.size()));
  p.time_index = t;
  return p;
}

GaussianModel identity(Eigen::Index n) {
  return GaussianModel(Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Identity(n, n));
}

}  // namespace

TEST_CASE("normal cdf against an independent series") {
  for (double z = -8.0; z <= 8.0; z += 0.37) {
    const double ref = oracle::phi_series(z);
    CHECK(std::abs(normal_cdf(z) - ref) <= 1e-17 + 1e-13 * ref);
  }
  CHECK(normal_cdf(-1.959963984540054) == doctest::Approx(0.025).epsilon(1e-14));
  CHECK(normal_cdf(0.0) == 0.5);
}

TEST_CASE("log normal cdf is continuous across the asymptotic switch") {
  const double below = log_normal_cdf(-kLogTailSwitch - 1e-13);
  const double above = log_normal_cdf(-kLogTailSwitch + 1e-13);
  CHECK(below == doctest::Approx(above).epsilon(1e-13));
  CHECK(log_normal_cdf(-30.0) == doctest::Approx(std::log(normal_cdf(-30.0))).epsilon(1e-14));
  // log Phi(-z) ~ -z^2/2 - log z - log sqrt(2 pi) for large z.
  const double z = 200.0;
  CHECK(log_normal_cdf(-z) == doctest::Approx(-0.5 * z * z - std::log(z) -
                                               0.5 * std::log(2 * M_PI) +
                                               std::log1p(-1.0 / (z * z)))
                                   .epsilon(1e-12));
  CHECK(std::isfinite(log_normal_cdf(-1e6)));
}

TEST_CASE("min tail is floored and symmetric") {
  CHECK(normal_min_tail(0.0) == 0.5);
  CHECK(normal_min_tail(1.3) == normal_min_tail(-1.3));
  CHECK(normal_min_tail(60.0) == kPValueFloor);
  CHECK(normal_min_tail(-1e300) == kPValueFloor);
}

TEST_CASE("p-values at the conditional mean") {
  const auto p = site_p_values(identity(2), profile({0, 0}));
  CHECK(p == std::vector<double>{0.5, 0.5});
}

TEST_CASE("p-value at the upper 97.5 percent point") {
  const auto p = site_p_values(identity(2), profile({1.959964, 0}));
  CHECK(std::abs(p[0] - 0.025) < 1e-6);
  CHECK(p[1] == 0.5);
}

TEST_CASE("p-value equals one half at the bivariate conditional mean") {
  Eigen::MatrixXd sigma(2, 2);
  sigma << 1, 0.8, 0.8, 1;
  const GaussianModel model(Eigen::VectorXd::Zero(2), sigma);
  const auto p = site_p_values(model, profile({0.8, 1.0}));
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("aggregation rules") {
  const std::vector<double> half(10, 0.5);
  CHECK(aggregate(half, AggregationRule::Minimum) == 0.5);
  CHECK(aggregate(half, AggregationRule::GeometricMean) == doctest::Approx(0.5).epsilon(1e-15));
  const std::vector<double> p{0.01, 0.25, 0.25};
  CHECK(aggregate(p, AggregationRule::Minimum) == 0.01);
  CHECK(aggregate(p, AggregationRule::GeometricMean) ==
        doctest::Approx(std::cbrt(0.01 * 0.25 * 0.25)).epsilon(1e-12));
  CHECK(aggregate(p, AggregationRule::GeometricMean) == doctest::Approx(0.0854988).epsilon(1e-6));
  CHECK_THROWS_AS(aggregate(std::vector<double>{}, AggregationRule::Minimum), Error);
}

TEST_CASE("minimum never exceeds the geometric mean and both agree with the scorer") {
  const auto model = true_model(study_in_control(1), study_grid(1));
  ConditionalScorer scorer(model);
  RngStream rng(17);
  const auto draws = sample(model, 2000, rng);
  for (const auto& y : draws) {
    const auto p = site_p_values(model, y);
    const double mn = aggregate(p, AggregationRule::Minimum);
    const double geo = aggregate(p, AggregationRule::GeometricMean);
    CHECK(mn <= geo);
    for (const double v : p) {
      CHECK(v > 0.0);
      CHECK(v <= 0.5);
    }
    const auto s = scorer.score(y.values);
    CHECK(s.minimum == doctest::Approx(mn).epsilon(1e-12));
    CHECK(s.geometric_mean == doctest::Approx(geo).epsilon(1e-12));
    const auto stats = site_statistics(model, y, AggregationRule::GeometricMean);
    CHECK(stats.aggregated == doctest::Approx(geo).epsilon(1e-12));
  }
}

TEST_CASE("p-values survive extreme outliers") {
  const auto model = identity(3);
  const auto p = site_p_values(model, profile({1e6, 0.0, -1e200}));
  CHECK(p[0] == kPValueFloor);
  CHECK(p[2] == kPValueFloor);
  CHECK(std::isfinite(std::log(aggregate(p, AggregationRule::GeometricMean))));
}

TEST_CASE("p-values are scale invariant") {
  const auto model = true_model(study_in_control(1), study_grid(1));
  RngStream rng(3);
  const auto y = sample(model, 1, rng).front();
  for (const double c : {1e-3, 0.5, 7.0, 1e4}) {
    const GaussianModel scaled(c * model.mean(), c * c * model.covariance());
    const auto p0 = site_p_values(model, y);
    const auto p1 = site_p_values(scaled, ProfileSample{c * y.values, 0});
    for (std::size_t j = 0; j < p0.size(); ++j) {
      CHECK(p1[j] == doctest::Approx(p0[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("p-value is unimodal in its own coordinate") {
  Eigen::MatrixXd sigma(3, 3);
  sigma << 2, 0.6, -0.3, 0.6, 1, 0.2, -0.3, 0.2, 0.5;
  const GaussianModel model(Eigen::Vector3d(1, 0, -1), sigma);
  ProfileSample y = profile({0.0, 0.4, -0.7});
  const double center = conditional_law(model, y, 0).cond_mean;
  double prev = 0.0;
  for (double d = -6.0; d <= 0.0; d += 0.05) {
    y.values(0) = center + d;
    const double p = site_p_values(model, y)[0];
    CHECK(p >= prev);
    prev = p;
  }
  y.values(0) = center;
  CHECK(site_p_values(model, y)[0] == doctest::Approx(0.5).epsilon(1e-12));
  prev = 0.5;
  for (double d = 0.0; d <= 6.0; d += 0.05) {
    y.values(0) = center + d;
    const double p = site_p_values(model, y)[0];
    CHECK(p <= prev + 1e-15);
    prev = p;
  }
}

TEST_CASE("doubled p-values are uniform under the true model") {
  const auto model = true_model(study_in_control(1), study_grid(1));
  RngStream rng(2718);
  Eigen::MatrixXd draws(static_cast<Eigen::Index>(model.dim()), 20000);
  sample_into(model, draws, rng);
  const double crit = ks_critical_value(20000, 1e-3);
  for (std::size_t j = 0; j < model.dim(); ++j) {
    std::vector<double> u;
    for (Eigen::Index c = 0; c < draws.cols(); ++c) {
      u.push_back(2.0 * site_p_values(model, ProfileSample{draws.col(c), 0})[j]);
    }
    CHECK(ks_statistic(u, [](double x) { return std::clamp(x, 0.0, 1.0); }) < crit);
  }
}

TEST_CASE("stopping rule bounds") {
  CHECK_THROWS_AS(StoppingRule(0.0, AggregationRule::Minimum), Error);
  CHECK_THROWS_AS(StoppingRule(1.0, AggregationRule::Minimum), Error);
  CHECK(StoppingRule(0.3, AggregationRule::Minimum).limit() == 0.3);
}

TEST_CASE("immediate alarm") {
  const auto model = identity(2);
  const StoppingRule stop(0.5, AggregationRule::GeometricMean);
  const auto rec = monitor_stream(
      model, [](std::int64_t t) { return ProfileSample{Eigen::Vector2d(40, 40), t}; }, stop, 10);
  REQUIRE(rec.alarm_time);
  CHECK(*rec.alarm_time == 1);
  CHECK(!rec.truncated);
}

TEST_CASE("cap truncates a quiet stream") {
  const auto model = identity(2);
  const StoppingRule stop(0.01, AggregationRule::Minimum);
  const auto rec = monitor_stream(
      model, [](std::int64_t t) { return ProfileSample{Eigen::Vector2d(0, 0), t}; }, stop, 5);
  CHECK(!rec.alarm_time);
  CHECK(rec.truncated);
  CHECK(rec.false_alarm_times.empty());
}

TEST_CASE("multi-alarm mode records false alarms and continues") {
  const std::vector<std::int64_t> alarm_at{3, 7, 12, 15};
  const AlarmTest test = [&](const ProfileSample& y) {
    return std::find(alarm_at.begin(), alarm_at.end(), y.time_index) != alarm_at.end();
  };
  const ProfileSource src = [](std::int64_t t) { return ProfileSample{Eigen::Vector2d(0, 0), t}; };
  const auto multi = run_monitor(test, src, 100, 10, AlarmMode::MultiAlarm);
  CHECK(multi.false_alarm_times == std::vector<std::int64_t>{3, 7});
  REQUIRE(multi.alarm_time);
  CHECK(*multi.alarm_time == 12);
  CHECK(multi.changepoint == 10);
  const auto first = run_monitor(test, src, 100, 10, AlarmMode::FirstAlarm);
  CHECK(first.false_alarm_times == std::vector<std::int64_t>{3});
  CHECK(!first.alarm_time);
  const auto capped = run_monitor(test, src, 11, 10, AlarmMode::MultiAlarm);
  CHECK(capped.truncated);
  CHECK(!capped.alarm_time);
  const auto one = run_monitor([](const ProfileSample&) { return false; }, src, 1, 0);
  CHECK(one.truncated);
}

TEST_CASE("shared stream is fetched once per step") {
  int fetches = 0;
  const ProfileSource src = [&](std::int64_t t) {
    ++fetches;
    return ProfileSample{Eigen::Vector2d(0, 0), t};
  };
  const std::vector<AlarmTest> tests{[](const ProfileSample& y) { return y.time_index == 4; },
                                     [](const ProfileSample& y) { return y.time_index == 9; }};
  const auto recs = run_monitors(tests, src, 50, 0);
  CHECK(fetches == 9);
  CHECK(*recs[0].alarm_time == 4);
  CHECK(*recs[1].alarm_time == 9);
}

TEST_CASE("known-model run length is geometric at the exact quantile") {
  const Eigen::Index n = 4;
  const auto model = identity(n);
  const double alpha = 0.02;
  // Pr(min_j p_j < r) = 1 - (1 - 2r)^n for independent sites.
  const double r = 0.5 * (1.0 - std::pow(1.0 - alpha, 1.0 / static_cast<double>(n)));
  const StoppingRule stop(r, AggregationRule::Minimum);
  RngStream base(555);
  RunningMoments rl;
  for (int rep = 0; rep < 10000; ++rep) {
    RngStream rng = base.child(static_cast<std::uint64_t>(rep));
    const auto rec = monitor_stream(
        model,
        [&](std::int64_t t) {
          ProfileSample y{Eigen::VectorXd(n), t};
          for (Eigen::Index i = 0; i < n; ++i) y.values(i) = rng.normal();
          return y;
        },
        stop, 100000);
    REQUIRE(rec.alarm_time);
    rl.push(static_cast<double>(*rec.alarm_time));
  }
  CHECK(std::abs(rl.mean() - 1.0 / alpha) < 3.0 * rl.standard_error());
}

TEST_CASE("rule names round trip") {
  for (auto r : {AggregationRule::Minimum, AggregationRule::GeometricMean}) {
    CHECK(parse_rule(to_string(r)) == r);
  }
  CHECK_THROWS_AS(parse_rule("median"), Error);
}

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include <Eigen/Core>

#include "profmon/gaussian.hpp"
#include "profmon/processes.hpp"
#include "profmon/rng.hpp"

namespace profmon {

/// (y - mu)^T Sigma^{-1} (y - mu) through the cached Cholesky factor.
double t2_statistic(const GaussianModel& model, const ProfileSample& y);
double t2_statistic(const GaussianModel& model, const Eigen::Ref<const Eigen::VectorXd>& y);

/// Phase II Hotelling chart: alarm when T^2 exceeds `limit`.
struct T2Chart {
  GaussianModel model;
  double limit = 0.0;

  double statistic(const Eigen::Ref<const Eigen::VectorXd>& y) const {
    return t2_statistic(model, y);
  }
  bool alarm(const Eigen::Ref<const Eigen::VectorXd>& y) const { return statistic(y) > limit; }
};

/// Hotelling T^2 on the leading q principal components of the historical
/// covariance. Score variances are the eigenvalues of that same covariance.
struct PcaChart {
  Eigen::VectorXd mean;
  Eigen::MatrixXd loadings;     // n x q, orthonormal columns
  Eigen::VectorXd eigenvalues;  // q, descending
  double limit = 0.0;

  std::size_t q() const noexcept { return static_cast<std::size_t>(loadings.cols()); }
  double statistic(const Eigen::Ref<const Eigen::VectorXd>& y) const;
  bool alarm(const Eigen::Ref<const Eigen::VectorXd>& y) const { return statistic(y) > limit; }
};

/// Keeps the smallest q whose leading eigenvalues hold at least
/// `variance_fraction` of the total variance. Throws RankDeficient when a
/// retained eigenvalue is numerically zero.
PcaChart pca_chart_fit(std::span<const ProfileSample> historical, double variance_fraction = 0.9);
PcaChart pca_chart_from_model(const GaussianModel& model, double variance_fraction = 0.9);

using ChartStatistic = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;

/// Upper control limit such that an in-control profile alarms with
/// probability `alarm_prob` per step: the ceil((1 - alarm_prob) reps)-th
/// smallest statistic over `reps` draws of the in-control process.
/// Throws Unattainable for alarm_prob outside (0, 1) and InsufficientReps when
/// fewer than ten exceedances are expected.
double calibrate_to_far(const ChartStatistic& statistic, const ProcessSpec& in_control,
                        const MonitorGrid& grid, double alarm_prob, std::size_t reps,
                        RngStream& rng);

/// Per-step alarm probability q giving a false-alarm rate (share of alarms
/// that are false, chart reset after each) of `far` when the process stays in
/// control for `changepoint` steps and then yields one true alarm:
/// far = tau q / (tau q + 1).
double alarm_prob_for_far(double far, std::int64_t changepoint);

}  // namespace profmon

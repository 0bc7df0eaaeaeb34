#include "profmon/competitors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

#include "profmon/error.hpp"

namespace profmon {

double t2_statistic(const GaussianModel& model, const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (static_cast<std::size_t>(y.size()) != model.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "t2_statistic: profile length differs from model");
  }
  return model.whiten(y).squaredNorm();
}

double t2_statistic(const GaussianModel& model, const ProfileSample& y) {
  return t2_statistic(model, y.values);
}

double PcaChart::statistic(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  const Eigen::VectorXd scores = loadings.transpose() * (y - mean);
  return (scores.array().square() / eigenvalues.array()).sum();
}

PcaChart pca_chart_from_model(const GaussianModel& model, double variance_fraction) {
  if (!(variance_fraction > 0.0 && variance_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "pca_chart: variance_fraction must lie in (0, 1]");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.covariance());
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::RankDeficient, "pca_chart: eigendecomposition failed");
  }
  // Eigen returns ascending eigenvalues.
  const Eigen::Index n = model.covariance().rows();
  const Eigen::VectorXd values = eig.eigenvalues().reverse();
  const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
  const double total = values.sum();

  Eigen::Index q = n;
  double running = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    running += values(i);
    if (running >= variance_fraction * total * (1.0 - 1e-12)) {
      q = i + 1;
      break;
    }
  }
  if (!(values(q - 1) > 1e-12 * values(0))) {
    throw Error(ErrorCode::RankDeficient, "pca_chart: retained component has zero variance");
  }
  PcaChart chart;
  chart.mean = model.mean();
  chart.loadings = vectors.leftCols(q);
  chart.eigenvalues = values.head(q);
  return chart;
}

PcaChart pca_chart_fit(std::span<const ProfileSample> historical, double variance_fraction) {
  return pca_chart_from_model(estimate_moments(historical), variance_fraction);
}

double calibrate_to_far(const ChartStatistic& statistic, const ProcessSpec& in_control,
                        const MonitorGrid& grid, double alarm_prob, std::size_t reps,
                        RngStream& rng) {
  if (!(alarm_prob > 0.0 && alarm_prob < 1.0)) {
    throw Error(ErrorCode::Unattainable, "calibrate_to_far: alarm probability must lie in (0, 1)");
  }
  if (static_cast<double>(reps) * alarm_prob < 10.0) {
    throw Error(ErrorCode::InsufficientReps,
                "calibrate_to_far: fewer than ten expected exceedances; increase reps");
  }
  ProcessSampler sampler(in_control, grid);
  Eigen::VectorXd y(static_cast<Eigen::Index>(sampler.dim()));
  std::vector<double> stats(reps);
  for (auto& s : stats) {
    sampler.draw(rng, y);
    s = statistic(y);
  }
  const auto rank = static_cast<std::size_t>(
      std::ceil((1.0 - alarm_prob) * static_cast<double>(reps)));
  const std::size_t index = std::clamp<std::size_t>(rank, 1, reps) - 1;
  std::nth_element(stats.begin(), stats.begin() + static_cast<std::ptrdiff_t>(index), stats.end());
  return stats[index];
}

double alarm_prob_for_far(double far, std::int64_t changepoint) {
  if (!(far > 0.0 && far < 1.0)) {
    throw Error(ErrorCode::Unattainable, "alarm_prob_for_far: far must lie in (0, 1)");
  }
  if (changepoint < 1) {
    throw Error(ErrorCode::InvalidArgument, "alarm_prob_for_far: changepoint must be >= 1");
  }
  const double q = far / (static_cast<double>(changepoint) * (1.0 - far));
  if (!(q < 1.0)) {
    throw Error(ErrorCode::Unattainable, "alarm_prob_for_far: implied alarm probability >= 1");
  }
  return q;
}

}  // namespace profmon

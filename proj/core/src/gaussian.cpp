#include "profmon/gaussian.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <Eigen/Cholesky>

#include "profmon/error.hpp"

namespace profmon {

namespace {

bool all_finite(const Eigen::Ref<const Eigen::MatrixXd>& m) { return m.allFinite(); }

}  // namespace

GaussianModel::GaussianModel(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
    : mean_(std::move(mean)), covariance_(std::move(covariance)) {
  const Eigen::Index n = mean_.size();
  if (n < 2) {
    throw Error(ErrorCode::InvalidArgument, "GaussianModel: need at least two monitor sites");
  }
  if (covariance_.rows() != n || covariance_.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "GaussianModel: covariance must be n x n");
  }
  if (!all_finite(mean_) || !all_finite(covariance_)) {
    throw Error(ErrorCode::InvalidArgument, "GaussianModel: non-finite mean or covariance");
  }
  const double asym = (covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance) {
    throw Error(ErrorCode::InvalidArgument,
                "GaussianModel: covariance not symmetric (max |S - S^T| = " +
                    std::to_string(asym) + ")");
  }
  covariance_ = 0.5 * (covariance_ + covariance_.transpose()).eval();

  const double scale = covariance_.trace() / static_cast<double>(n);
  constexpr std::array<double, 6> kDeltas{0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6};
  for (const double delta : kDeltas) {
    if (delta > 0.0 && !(scale > 0.0)) {
      break;
    }
    Eigen::MatrixXd trial = covariance_;
    trial.diagonal().array() += delta * scale;
    Eigen::LLT<Eigen::MatrixXd> llt(trial);
    if (llt.info() != Eigen::Success) {
      continue;
    }
    Eigen::MatrixXd l = llt.matrixL();
    if ((l.diagonal().array() <= 0.0).any()) {
      continue;
    }
    jitter_ = delta * scale;
    covariance_ = std::move(trial);
    chol_ = std::move(l);
    precision_ = llt.solve(Eigen::MatrixXd::Identity(n, n));
    precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
    return;
  }
  throw Error(ErrorCode::SingularCovariance,
              "GaussianModel: covariance is not positive definite even after jitter");
}

Eigen::VectorXd GaussianModel::whiten(const Eigen::Ref<const Eigen::VectorXd>& y) const {
  return chol_.triangularView<Eigen::Lower>().solve(y - mean_);
}

GaussianModel estimate_moments(const Eigen::MatrixXd& columns) {
  const Eigen::Index n = columns.rows();
  const Eigen::Index m = columns.cols();
  if (n < 2) {
    throw Error(ErrorCode::InvalidArgument, "estimate_moments: need at least two monitor sites");
  }
  if (m < n + 1) {
    throw Error(ErrorCode::InsufficientSamples,
                "estimate_moments: need m >= n + 1 profiles (m = " + std::to_string(m) +
                    ", n = " + std::to_string(n) + ")");
  }
  if (!columns.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "estimate_moments: non-finite observation");
  }
  Eigen::VectorXd mean = columns.rowwise().mean();
  const Eigen::MatrixXd centered = columns.colwise() - mean;
  Eigen::MatrixXd cov = (centered * centered.transpose()) / static_cast<double>(m - 1);
  return GaussianModel(std::move(mean), std::move(cov));
}

GaussianModel estimate_moments(std::span<const ProfileSample> samples) {
  if (samples.empty()) {
    throw Error(ErrorCode::InsufficientSamples, "estimate_moments: no samples");
  }
  const Eigen::Index n = samples.front().values.size();
  Eigen::MatrixXd columns(n, static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].values.size() != n) {
      throw Error(ErrorCode::DimensionMismatch,
                  "estimate_moments: sample " + std::to_string(i) + " has " +
                      std::to_string(samples[i].values.size()) + " sites, expected " +
                      std::to_string(n));
    }
    columns.col(static_cast<Eigen::Index>(i)) = samples[i].values;
  }
  return estimate_moments(columns);
}

void check_profile(const GaussianModel& model, const ProfileSample& y) {
  if (y.size() != model.dim()) {
    throw Error(ErrorCode::DimensionMismatch,
                "profile has " + std::to_string(y.size()) + " sites, model has " +
                    std::to_string(model.dim()));
  }
  if (!y.values.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "profile contains non-finite values");
  }
}

namespace {

// r_j = (Q (y - mu))_j
ConditionalLaw law_from_residual(const GaussianModel& model, const ProfileSample& y, double rj,
                                 std::size_t site) {
  const auto j = static_cast<Eigen::Index>(site);
  const double qjj = model.precision()(j, j);
  const double floor = GaussianModel::kVarianceFloor * model.covariance()(j, j);
  return ConditionalLaw{site, y.values(j) - rj / qjj, std::max(1.0 / qjj, floor)};
}

}  // namespace

ConditionalLaw conditional_law(const GaussianModel& model, const ProfileSample& y,
                               std::size_t site) {
  check_profile(model, y);
  if (site >= model.dim()) {
    throw Error(ErrorCode::InvalidArgument, "conditional_law: site out of range");
  }
  const auto j = static_cast<Eigen::Index>(site);
  const double rj = model.precision().row(j).dot(y.values - model.mean());
  return law_from_residual(model, y, rj, site);
}

std::vector<ConditionalLaw> conditional_laws(const GaussianModel& model, const ProfileSample& y) {
  check_profile(model, y);
  const Eigen::VectorXd r = model.precision() * (y.values - model.mean());
  std::vector<ConditionalLaw> laws;
  laws.reserve(model.dim());
  for (std::size_t j = 0; j < model.dim(); ++j) {
    laws.push_back(law_from_residual(model, y, r(static_cast<Eigen::Index>(j)), j));
  }
  return laws;
}

void sample_into(const GaussianModel& model, Eigen::MatrixXd& out, RngStream& rng) {
  const Eigen::Index n = static_cast<Eigen::Index>(model.dim());
  if (out.rows() != n) {
    throw Error(ErrorCode::DimensionMismatch, "sample_into: output must have n rows");
  }
  for (Eigen::Index c = 0; c < out.cols(); ++c) {
    for (Eigen::Index i = 0; i < n; ++i) {
      out(i, c) = rng.normal();
    }
  }
  out = (model.chol().triangularView<Eigen::Lower>() * out).eval();
  out.colwise() += model.mean();
}

std::vector<ProfileSample> sample(const GaussianModel& model, std::size_t count, RngStream& rng) {
  if (count == 0) {
    throw Error(ErrorCode::InvalidArgument, "sample: count must be >= 1");
  }
  Eigen::MatrixXd draws(static_cast<Eigen::Index>(model.dim()), static_cast<Eigen::Index>(count));
  sample_into(model, draws, rng);
  std::vector<ProfileSample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(ProfileSample{draws.col(static_cast<Eigen::Index>(i)),
                                static_cast<std::int64_t>(i) + 1});
  }
  return out;
}

}  // namespace profmon

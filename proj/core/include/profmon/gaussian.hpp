#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "profmon/rng.hpp"

namespace profmon {

/// One observed response vector at the n fixed monitor sites. Historical
/// profiles carry time indices -m+1..0, online profiles 1, 2, ...
struct ProfileSample {
  Eigen::VectorXd values;
  std::int64_t time_index = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(values.size()); }
};

/// In-control law of the n-dimensional response: N(mean, covariance).
///
/// The covariance is symmetrized and factorized once at construction. When
/// the Cholesky factorization fails, delta * trace / n is added to the
/// diagonal with delta escalating from 1e-10 to 1e-6; the stored covariance
/// is the one that was actually factorized. Immutable afterwards, so a model
/// can be shared freely between threads.
class GaussianModel {
 public:
  static constexpr double kSymmetryTolerance = 1e-10;
  static constexpr double kVarianceFloor = 1e-12;

  GaussianModel(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(mean_.size()); }
  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }
  /// Lower-triangular L with covariance = L L^T.
  const Eigen::MatrixXd& chol() const noexcept { return chol_; }
  const Eigen::MatrixXd& precision() const noexcept { return precision_; }
  /// Diagonal jitter that was added (0 when the input factorized directly).
  double jitter() const noexcept { return jitter_; }

  /// L^{-1} (y - mean).
  Eigen::VectorXd whiten(const Eigen::Ref<const Eigen::VectorXd>& y) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd chol_;
  Eigen::MatrixXd precision_;
  double jitter_ = 0.0;
};

/// Law of Y_j given every other coordinate of y.
struct ConditionalLaw {
  std::size_t site = 0;
  double cond_mean = 0.0;
  double cond_var = 0.0;
};

/// Sample mean and (m-1)-divisor covariance. Requires m >= n + 1.
GaussianModel estimate_moments(std::span<const ProfileSample> samples);
/// Same, with one profile per column of an n x m matrix.
GaussianModel estimate_moments(const Eigen::MatrixXd& columns);

/// Conditional law at `site` (0-based). All sites share the precision matrix:
/// Var = 1 / Q_jj and E = y_j - (Q (y - mu))_j / Q_jj, which is the Schur
/// complement form without an (n-1) x (n-1) solve per site.
ConditionalLaw conditional_law(const GaussianModel& model, const ProfileSample& y,
                               std::size_t site);
std::vector<ConditionalLaw> conditional_laws(const GaussianModel& model,
                                             const ProfileSample& y);

/// i.i.d. draws mean + L z. Time indices are 1..count.
std::vector<ProfileSample> sample(const GaussianModel& model, std::size_t count,
                                  RngStream& rng);
/// Fills every column of `out` (n x count, preallocated) with one draw.
void sample_into(const GaussianModel& model, Eigen::MatrixXd& out, RngStream& rng);

void check_profile(const GaussianModel& model, const ProfileSample& y);

}  // namespace profmon

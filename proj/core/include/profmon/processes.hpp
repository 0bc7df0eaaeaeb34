#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "profmon/gaussian.hpp"
#include "profmon/rng.hpp"

namespace profmon {

/// Fixed monitor sites inside a closed domain [lower, upper].
struct MonitorGrid {
  std::vector<double> sites;
  double lower = 0.0;
  double upper = 1.0;

  std::size_t size() const noexcept { return sites.size(); }
  bool operator==(const MonitorGrid&) const = default;

  /// n sites equally spaced from lower to upper, endpoints included.
  static MonitorGrid equispaced(double lower, double upper, std::size_t n);
  void validate() const;
};

/// f(x, a) = a sin(x), a ~ N(coef_mean, coef_sd^2).
struct Sine {
  double coef_mean = 0.0;
  double coef_sd = 1.0;

  bool operator==(const Sine&) const = default;
};

/// f(x, a) = sum_{k=0}^{degree} a_k x^k with i.i.d. a_k ~ N(coef_mean, coef_sd^2).
struct Monomial {
  int degree = 6;
  double coef_mean = 0.0;
  double coef_sd = 1.0;

  bool operator==(const Monomial&) const = default;
};

using BaseProcess = std::variant<Sine, Monomial>;

/// Base profile shifted by xi at every site.
struct GlobalShift {
  BaseProcess base;
  double xi = 0.0;

  bool operator==(const GlobalShift&) const = default;
};

/// At `site` (0-based) the response is (1 - xi) [f + eps] + xi Z, Z ~ N(0, 1).
struct BrokenMonitor {
  BaseProcess base;
  double xi = 0.0;
  std::size_t site = 2;

  bool operator==(const BrokenMonitor&) const = default;
};

/// Past `pivot_site` (0-based) the path is reflected about f(x_pivot):
/// y = -(f(x) - f(x_pivot)) + f(x_pivot) + eps. Coefficient means are shifted
/// by xi.
struct TrajectorySwitch {
  BaseProcess base;
  std::size_t pivot_site = 5;
  double xi = 0.0;

  bool operator==(const TrajectorySwitch&) const = default;
};

using ProcessKind = std::variant<Sine, Monomial, GlobalShift, BrokenMonitor, TrajectorySwitch>;

struct ProcessSpec {
  ProcessKind kind = Sine{};
  double noise_sd = 0.1;

  void validate(const MonitorGrid& grid) const;
  bool operator==(const ProcessSpec&) const = default;
};

/// Precomputed linear form of a process on a grid:
/// y = loadings a + noise_sd (noise_scale .* eps) + shift + z_scale Z e_{z_site}
/// with a ~ N(coef_mean, coef_sd^2 I). Draws reuse it without allocating.
class ProcessSampler {
 public:
  ProcessSampler(const ProcessSpec& spec, const MonitorGrid& grid);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(loadings_.rows()); }
  void draw(RngStream& rng, Eigen::Ref<Eigen::VectorXd> out);
  GaussianModel model() const;

 private:
  Eigen::MatrixXd loadings_;
  Eigen::VectorXd coef_mean_;
  double coef_sd_ = 1.0;
  Eigen::VectorXd noise_scale_;
  Eigen::VectorXd shift_;
  Eigen::Index z_site_ = -1;
  double z_scale_ = 0.0;
  double noise_sd_ = 0.1;
  Eigen::VectorXd coef_;
};

/// One profile Y_x = f(x, a) + eps_x at the grid sites, with a fresh
/// coefficient draw per profile.
ProfileSample draw_profile(const ProcessSpec& spec, const MonitorGrid& grid, RngStream& rng);

/// Batch version: each column of `out` (n x count) receives one profile.
void draw_profiles(const ProcessSpec& spec, const MonitorGrid& grid, RngStream& rng,
                   Eigen::MatrixXd& out);

/// Exact mean and covariance of the profile vector. Every supported kind is
/// a linear map of Gaussian coefficients and noise, so the law is Gaussian.
GaussianModel true_model(const ProcessSpec& spec, const MonitorGrid& grid);

/// SNR(x) = xi / sqrt(sin(x)^2 + noise_sd^2); one row per xi, one column per site.
Eigen::MatrixXd snr_table(const std::vector<double>& xi_values, const MonitorGrid& grid,
                          double noise_sd);

// Simulation studies: 1 global shift, 2 broken monitor, 3 trajectory switch.
MonitorGrid study_grid(int study, std::size_t n = 10);
ProcessSpec study_in_control(int study);
ProcessSpec study_out_of_control(int study, double xi);

}  // namespace profmon

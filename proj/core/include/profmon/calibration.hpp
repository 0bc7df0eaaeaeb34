#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "profmon/gaussian.hpp"
#include "profmon/monitor.hpp"
#include "profmon/rng.hpp"
#include "profmon/stats.hpp"

namespace profmon {

// ---------------------------------------------------------------------------
// Order-statistic control limits
// ---------------------------------------------------------------------------

/// Lower control limit at the k-th smallest of m reference statistics. For
/// i.i.d. continuous statistics the in-control ARL is exactly m / (k - 1).
struct OrderStatChart {
  std::vector<double> reference;  // strictly increasing
  std::size_t k = 0;              // 1-based order index
  double limit = 0.0;

  std::size_t m() const noexcept { return reference.size(); }
  double implied_arl0() const noexcept {
    return static_cast<double>(reference.size()) / static_cast<double>(k - 1);
  }
};

/// k = 1 + m / arl0. Throws NonIntegerOrder unless arl0 divides m, and
/// InvalidArgument unless 2 <= k < m.
std::size_t order_index_for(std::size_t m, std::size_t arl0);

/// Sorts `stats` (ties broken in index order and nudged apart by one ulp) and
/// places the limit at the order index for `arl0`.
OrderStatChart order_stat_limit(std::vector<double> stats, std::size_t arl0);

/// k-th smallest value (1-based) by selection; reorders `values`.
double kth_smallest(std::span<double> values, std::size_t k);

// ---------------------------------------------------------------------------
// Exact run-length distribution of the order-statistic chart
// ---------------------------------------------------------------------------

/// m / (k - 1). k == 1 throws ErrorCode::InfiniteArl.
double arl0_exact(std::size_t m, std::size_t k);

/// Pr(no alarm in the first T observations) = C(m,k) / C(T+m,k); 1 at T = 0.
double no_alarm_prob(std::size_t m, std::size_t k, std::uint64_t T);

/// Pr(first alarm at T) = C(m,k) k / ((T+m) C(T+m-1,k)); k/(m+1) at T = 1.
double first_alarm_pmf(std::size_t m, std::size_t k, std::uint64_t T);

/// Partial sum sum_{t=1}^{trunc} t Pr(first alarm at t).
double arl0_series(std::size_t m, std::size_t k, std::uint64_t trunc);

/// Exact run-length variance m k (m-k+1) / ((k-1)^2 (k-2)); +inf for k = 2.
double run_length_variance(std::size_t m, std::size_t k);

/// Variance of Geometric(1/arl0) on {1, 2, ...}: arl0 (arl0 - 1).
double geometric_variance(double arl0) noexcept;

// ---------------------------------------------------------------------------
// Monte Carlo check of the run-length law
// ---------------------------------------------------------------------------

enum class ReferenceDistribution { Uniform, Normal, StudentT2, Cauchy, ChiSquare2, Beta1_10 };

std::string_view to_string(ReferenceDistribution d) noexcept;
ReferenceDistribution parse_distribution(std::string_view name);
double draw(ReferenceDistribution d, RngStream& rng);

/// Draws m reference statistics and streams fresh ones until one falls below
/// the k-th order statistic. Returns the alarm time.
std::int64_t simulate_run_length(std::size_t m, std::size_t k, ReferenceDistribution d,
                                 RngStream& rng, std::vector<double>& workspace);

struct GeometricLimitReport {
  std::size_t m = 0;
  std::size_t k = 0;
  std::size_t arl0 = 0;
  std::size_t reps = 0;
  ReferenceDistribution distribution = ReferenceDistribution::Normal;
  double sample_arl = 0.0;
  double arl_se = 0.0;  // NaN when reps < 2
  double sample_sd = 0.0;
  double geometric_sd = 0.0;
  double exact_sd = 0.0;  // +inf at k = 2
  /// Pearson test against Geometric(1/arl0) over equiprobable bins; absent
  /// (bins == 0) when reps is too small for five expected counts per bin.
  std::size_t bins = 0;
  ChiSquareResult chi_square;
};

/// Replication r uses rng.child(r), so the report does not depend on `workers`.
GeometricLimitReport geometric_limit_check(std::size_t m, std::size_t arl0, std::size_t reps,
                                           ReferenceDistribution d, const RngStream& rng,
                                           std::size_t workers = 1);

// ---------------------------------------------------------------------------
// Semi-parametric bootstrap
// ---------------------------------------------------------------------------

struct BootstrapPlan {
  std::size_t m_star = 0;  // 0 selects m / 2
  std::size_t b1 = 100;
  std::size_t b2 = 5;
  std::size_t arl0 = 200;
  /// Synthetic historical size per outer resample; 0 selects m.
  std::size_t inner_size = 0;
  std::size_t batch = 10000;

  std::size_t m_prime() const noexcept { return b1 * b2 * arl0; }
  /// m' / arl0 + 1
  std::size_t order_index() const noexcept { return b1 * b2 + 1; }
  bool operator==(const BootstrapPlan&) const = default;
};

struct RuleChart {
  AggregationRule rule;
  OrderStatChart chart;
};

struct BootstrapCalibration {
  GaussianModel monitor_model;
  GaussianModel boot_model;
  std::size_t m = 0;
  std::size_t m_star = 0;
  std::vector<RuleChart> charts;

  const OrderStatChart& chart(AggregationRule rule) const;
};

/// The first m - m_star historical profiles fit the monitoring model, the last
/// m_star fit the bootstrap model. Each outer resample j draws inner_size
/// profiles from the bootstrap model, refits, and draws b2 * arl0 profiles from
/// the refit; every draw is scored under the monitoring model for each rule.
/// The limit per rule is the (m'/arl0 + 1)-th smallest score.
BootstrapCalibration bootstrap_calibrate(std::span<const ProfileSample> historical,
                                         const BootstrapPlan& plan,
                                         std::span<const AggregationRule> rules,
                                         RngStream& rng, std::size_t workers = 1);

}  // namespace profmon

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace profmon {

/// Welford accumulator for mean and variance of a stream.
class RunningMoments {
 public:
  void push(double x) noexcept;

  std::size_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased (n-1) variance; NaN when fewer than two values were pushed.
  double variance() const noexcept;
  double sd() const noexcept;
  /// Standard error of the mean; NaN when fewer than two values were pushed.
  double standard_error() const noexcept;

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Two-sided one-sample Kolmogorov-Smirnov statistic D_n against `cdf`.
double ks_statistic(std::vector<double> samples,
                    const std::function<double(double)>& cdf);

/// Asymptotic Kolmogorov tail Pr(sqrt(n) D_n > x).
double kolmogorov_survival(double x) noexcept;

/// Critical value d such that Pr(D_n > d) = level (asymptotic).
double ks_critical_value(std::size_t n, double level);

struct ChiSquareResult {
  double statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
};

/// Pearson goodness of fit. `expected` holds expected counts, not
/// probabilities; both spans must have equal length of at least two.
ChiSquareResult chi_square_gof(std::span<const std::int64_t> observed,
                               std::span<const double> expected);

/// Upper tail of the chi-square distribution.
double chi_square_survival(double x, double degrees_of_freedom);
double chi_square_quantile(double p, double degrees_of_freedom);

}  // namespace profmon

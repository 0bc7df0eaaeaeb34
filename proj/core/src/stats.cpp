#include "profmon/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>

#include "profmon/error.hpp"

namespace profmon {

void RunningMoments::push(double x) noexcept {
  ++count_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (x - mean_);
}

double RunningMoments::variance() const noexcept {
  if (count_ < 2) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return m2_ / static_cast<double>(count_ - 1);
}

double RunningMoments::sd() const noexcept { return std::sqrt(variance()); }

double RunningMoments::standard_error() const noexcept {
  return sd() / std::sqrt(static_cast<double>(count_));
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) {
    throw Error(ErrorCode::EmptyInput, "ks_statistic: no samples");
  }
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double kolmogorov_survival(double x) noexcept {
  if (x <= 0.2) {
    return 1.0;
  }
  double sum = 0.0;
  for (int k = 1; k <= 200; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) {
      break;
    }
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_critical_value(std::size_t n, double level) {
  if (n == 0 || !(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "ks_critical_value: need n > 0 and level in (0,1)");
  }
  double lo = 0.2;
  double hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (kolmogorov_survival(mid) > level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi) / std::sqrt(static_cast<double>(n));
}

ChiSquareResult chi_square_gof(std::span<const std::int64_t> observed,
                               std::span<const double> expected) {
  if (observed.size() != expected.size() || observed.size() < 2) {
    throw Error(ErrorCode::DimensionMismatch,
                "chi_square_gof: observed and expected must have the same length >= 2");
  }
  ChiSquareResult out;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (!(expected[i] > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "chi_square_gof: expected counts must be positive");
    }
    const double diff = static_cast<double>(observed[i]) - expected[i];
    out.statistic += diff * diff / expected[i];
  }
  out.degrees_of_freedom = static_cast<int>(observed.size()) - 1;
  out.p_value = chi_square_survival(out.statistic, out.degrees_of_freedom);
  return out;
}

double chi_square_survival(double x, double degrees_of_freedom) {
  if (x <= 0.0) {
    return 1.0;
  }
  boost::math::chi_squared dist(degrees_of_freedom);
  return boost::math::cdf(boost::math::complement(dist, x));
}

double chi_square_quantile(double p, double degrees_of_freedom) {
  boost::math::chi_squared dist(degrees_of_freedom);
  return boost::math::quantile(dist, p);
}

}  // namespace profmon

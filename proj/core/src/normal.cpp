#include "profmon/normal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace profmon {

double normal_cdf(double z) noexcept {
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

double log_normal_cdf(double z) noexcept {
  if (z >= -kLogTailSwitch) {
    return std::log(normal_cdf(z));
  }
  // Phi(z) = phi(z)/|z| * (1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8 - ...)
  const double a = -z;
  const double inv2 = 1.0 / (a * a);
  const double series = 1.0 - inv2 * (1.0 - inv2 * (3.0 - inv2 * (15.0 - inv2 * 105.0)));
  return -0.5 * a * a - std::log(a) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log(series);
}

double normal_min_tail(double z) noexcept {
  const double a = std::fabs(z);
  const double p = a <= kLogTailSwitch ? 0.5 * std::erfc(a / std::numbers::sqrt2)
                                       : std::exp(log_normal_cdf(-a));
  return std::max(p, kPValueFloor);
}

}  // namespace profmon

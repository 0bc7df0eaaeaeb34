#pragma once

namespace profmon {

/// Standard normal CDF through erfc; accurate to full relative precision in
/// both tails until erfc underflows.
double normal_cdf(double z) noexcept;

/// log Phi(z). Uses the asymptotic Mills-ratio expansion once z < -37, where
/// erfc has already lost (or is about to lose) its normal-range result.
double log_normal_cdf(double z) noexcept;

/// min(Phi(z), 1 - Phi(z)) = Phi(-|z|), floored at kPValueFloor.
double normal_min_tail(double z) noexcept;

inline constexpr double kPValueFloor = 1e-300;
inline constexpr double kLogTailSwitch = 37.0;

}  // namespace profmon

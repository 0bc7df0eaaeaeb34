#pragma once

#include <cstdint>
#include <random>

namespace profmon {

/// Seedable, splittable random stream.
///
/// A stream is identified by a 64-bit key. `child(i)` derives a new key from
/// the parent key and `i` only, never from the parent's draw position, so a
/// tree of streams such as (seed, replication, purpose) is reproducible no
/// matter how work is scheduled across threads.
class RngStream {
 public:
  using result_type = std::mt19937_64::result_type;

  explicit RngStream(std::uint64_t seed);

  RngStream child(std::uint64_t index) const;

  std::uint64_t key() const noexcept { return key_; }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform();
  double normal() { return normal_(engine_); }
  std::uint64_t uniform_index(std::uint64_t bound);

 private:
  struct FromKey {};
  RngStream(FromKey, std::uint64_t key);

  std::uint64_t key_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace profmon

#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace avgerr {

/// SplitMix64 step; used for seeding and for deriving child seeds.
[[nodiscard]] std::uint64_t splitmix64(std::uint64_t& state) noexcept;

/// Derive an independent stream seed for ensemble member `index` of a master seed.
///
/// The rule is pinned: child = splitmix64 applied to (master + (index + 1) * 0x9E3779B97F4A7C15),
/// so member seeds never depend on the number of workers or on evaluation order.
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// xoshiro256** 1.0 (Blackman & Vigna), seeded through SplitMix64.
///
/// Satisfies UniformRandomBitGenerator. Output is bit-identical on every platform.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Uniform double on the half-open interval (0, 1].
  double uniform_open_closed() noexcept;

  /// Uniform double on [0, 1).
  double uniform() noexcept;

 private:
  std::array<std::uint64_t, 4> s_{};
};

/// Standard normal deviates by the Box-Muller transform over Xoshiro256.
///
/// Deviates are produced in pairs (cosine branch first, then the cached sine branch).
class NormalGenerator {
 public:
  explicit NormalGenerator(std::uint64_t seed) noexcept : bits_(seed) {}

  double operator()() noexcept;

 private:
  Xoshiro256 bits_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace avgerr

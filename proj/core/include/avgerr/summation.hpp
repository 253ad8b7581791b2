#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace avgerr {

/// Neumaier's variant of Kahan compensated summation.
class CompensatedSum {
 public:
  constexpr CompensatedSum() = default;

  constexpr void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }

  constexpr CompensatedSum& operator+=(double v) noexcept {
    add(v);
    return *this;
  }

  [[nodiscard]] constexpr double value() const noexcept { return sum_ + comp_; }
  [[nodiscard]] constexpr double high() const noexcept { return sum_; }
  [[nodiscard]] constexpr double low() const noexcept { return comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

[[nodiscard]] inline double compensated_sum(std::span<const double> values) noexcept {
  CompensatedSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

}  // namespace avgerr

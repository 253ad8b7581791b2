#pragma once

#include <cstddef>
#include <vector>

#include "avgerr/series.hpp"

namespace avgerr {

/// Outcome of the minimum-uncertainty initial-transient search.
struct TransientResult {
  /// Number of leading samples to discard, in [1, floor(N/2)].
  std::size_t k_hat = 1;
  /// objective_curve[k - 1] is the objective for candidate k = 1..floor(N/2).
  std::vector<double> objective_curve;
  /// One-based index of the first retained sample (k_hat + 1).
  std::size_t stationary_start_index = 2;
  /// Length of the series the result was computed from.
  std::size_t series_length = 0;
  /// Set when the retained tail has zero variance.
  bool degenerate_tail = false;
};

/// Chooses k in [1, floor(N/2)] minimising
///   sum_{i>k} (X_i - mean_{k})^2 / (N - k - 1)^2
/// using suffix sums, O(N). Ties go to the smallest k.
[[nodiscard]] TransientResult detect_transient(const TimeSeries& x);

/// The stationary tail {X_{k+1}, ..., X_N}.
[[nodiscard]] TimeSeries split_at_transient(const TimeSeries& x, const TransientResult& result);

}  // namespace avgerr

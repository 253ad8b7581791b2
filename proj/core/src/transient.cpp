#include "avgerr/transient.hpp"

#include <algorithm>
#include <vector>

#include "avgerr/errors.hpp"
#include "avgerr/summation.hpp"

namespace avgerr {

TransientResult detect_transient(const TimeSeries& x) {
  const std::size_t n = x.size();
  if (n < 4) throw InvalidInput("transient detection needs at least 4 samples");

  // Centring by the global mean removes most of the cancellation in sum x^2 - (sum x)^2 / n.
  const double shift = sample_mean(x);
  const std::size_t k_max = n / 2;

  // Suffix sums over i >= k (zero-based), built from the end.
  std::vector<double> suffix(n + 1, 0.0);
  std::vector<double> suffix_sq(n + 1, 0.0);
  CompensatedSum s1;
  CompensatedSum s2;
  for (std::size_t i = n; i-- > 0;) {
    const double d = x[i] - shift;
    s1.add(d);
    s2.add(d * d);
    suffix[i] = s1.value();
    suffix_sq[i] = s2.value();
  }

  TransientResult result;
  result.series_length = n;
  result.objective_curve.resize(k_max);
  double best = 0.0;
  for (std::size_t k = 1; k <= k_max; ++k) {
    // The tail is samples k..n-1 (zero-based), i.e. X_{k+1}..X_N.
    const double count = static_cast<double>(n - k);
    const double ss = std::max(0.0, suffix_sq[k] - suffix[k] * suffix[k] / count);
    const double denom = count - 1.0;
    const double objective = ss / (denom * denom);
    result.objective_curve[k - 1] = objective;
    if (k == 1 || objective < best) {
      best = objective;
      result.k_hat = k;
    }
  }
  result.stationary_start_index = result.k_hat + 1;
  result.degenerate_tail = best == 0.0;
  return result;
}

TimeSeries split_at_transient(const TimeSeries& x, const TransientResult& result) {
  if (result.series_length != x.size() || result.objective_curve.size() != x.size() / 2) {
    throw InvalidInput("transient result was computed for a series of a different length");
  }
  if (result.k_hat < 1 || result.k_hat > x.size() / 2) {
    throw InvalidInput("transient split point out of range");
  }
  return x.tail(result.k_hat);
}

}  // namespace avgerr

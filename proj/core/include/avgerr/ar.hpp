#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "avgerr/series.hpp"

namespace avgerr {

/// x_i - mean = sum_k coeffs[k-1] (x_{i-k} - mean) + e_i,  e_i ~ N(0, noise_variance).
struct ArModel {
  std::vector<double> coeffs;
  double noise_variance = 1.0;
  double mean = 0.0;

  [[nodiscard]] std::size_t order() const noexcept { return coeffs.size(); }
};

/// The AR(6) process used in the reference experiments: sigma_e^2 = 0.1, zero mean.
[[nodiscard]] ArModel paper_ar6();

/// Partial autocorrelations by the step-down (reverse Levinson) recursion.
/// Throws InvalidInput if a partial autocorrelation reaches magnitude 1.
[[nodiscard]] std::vector<double> partial_autocorrelations(const ArModel& model);

/// Coefficients from partial autocorrelations (step-up recursion).
[[nodiscard]] std::vector<double> coefficients_from_pacf(std::span<const double> pacf);

/// True when every root of z^n - a_1 z^{n-1} - ... - a_n lies strictly inside the unit circle.
[[nodiscard]] bool is_stationary(const ArModel& model);

/// Roots of the characteristic polynomial (companion-matrix eigenvalues).
[[nodiscard]] std::vector<std::complex<double>> characteristic_roots(const ArModel& model);

/// Simulates n samples. `init` holds the order() pre-sample values, oldest first.
/// Refuses non-stationary models.
[[nodiscard]] TimeSeries simulate_ar(const ArModel& model, std::size_t n, std::span<const double> init,
                                     std::uint64_t seed);

/// Simulates n samples approximately from the stationary distribution: starts at the mean
/// and discards stationary_burn_in(model) leading samples.
[[nodiscard]] TimeSeries simulate_ar_stationary(const ArModel& model, std::size_t n, std::uint64_t seed);

/// Samples after which the start-up transient from the mean has decayed below 1e-12 of its
/// initial size, judged by the largest characteristic-root modulus.
[[nodiscard]] std::size_t stationary_burn_in(const ArModel& model);

/// Exact stationary mean, variance and autocorrelation up to lag k_max from the Yule-Walker system.
[[nodiscard]] ExactStatistics yule_walker_truth(const ArModel& model, std::size_t k_max);

/// Exact Gaussian log-likelihood of `x` under `model`, computed from the innovations
/// of the Durbin-Levinson predictor (the first `order` innovations carry the
/// stationary prediction variances).
[[nodiscard]] double ar_log_likelihood(const ArModel& model, std::span<const double> x);

struct ArMleFit {
  ArModel model;
  double log_likelihood = 0.0;
  /// Log-likelihood at the Yule-Walker starting point.
  double initial_log_likelihood = 0.0;
  bool converged = false;
  /// Optimisation failed; `model` is the Yule-Walker estimate.
  bool fell_back_to_yule_walker = false;
};

/// Yule-Walker AR(p) estimate from the biased sample autocorrelation.
[[nodiscard]] ArModel fit_ar_yule_walker(const TimeSeries& x, std::size_t p);

/// Gaussian maximum-likelihood AR(p) fit. The mean is the sample mean; coefficients
/// are optimised over partial autocorrelations (tanh-parameterised, so every iterate
/// is stationary) with the innovation variance profiled out. Requires N > 10 p.
[[nodiscard]] ArMleFit fit_ar_mle(const TimeSeries& x, std::size_t p);

/// Squared averaging error at length s implied by the model's exact statistics.
[[nodiscard]] double ar_error_estimate(const ArModel& model, std::size_t s);

}  // namespace avgerr

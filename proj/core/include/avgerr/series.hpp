#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace avgerr {

/// Uniformly sampled scalar signal.
///
/// Construction validates that every sample is finite and that the sampling
/// interval is positive. Length requirements are enforced by each estimator.
class TimeSeries {
 public:
  TimeSeries() = default;
  explicit TimeSeries(std::vector<double> samples, double sampling_interval = 1.0,
                      std::string label = {});

  [[nodiscard]] std::span<const double> samples() const noexcept { return samples_; }
  [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
  [[nodiscard]] bool empty() const noexcept { return samples_.empty(); }
  [[nodiscard]] double operator[](std::size_t i) const noexcept { return samples_[i]; }
  [[nodiscard]] double sampling_interval() const noexcept { return sampling_interval_; }
  [[nodiscard]] const std::string& label() const noexcept { return label_; }

  /// Samples [first, size()) as a new series with the same interval and label.
  [[nodiscard]] TimeSeries tail(std::size_t first) const;
  /// The first `count` samples.
  [[nodiscard]] TimeSeries head(std::size_t count) const;

 private:
  std::vector<double> samples_;
  double sampling_interval_ = 1.0;
  std::string label_;
};

/// Mean-squared block means for block lengths s = 1..floor(sqrt(N)).
struct MultiscaleProfile {
  std::size_t n = 0;
  std::size_t q = 0;
  /// msq[s - 1] is the mean of squared non-overlapping block means of length s.
  std::vector<double> msq;
  /// block_counts[s - 1] = floor(N / s).
  std::vector<std::size_t> block_counts;

  [[nodiscard]] double at_scale(std::size_t s) const { return msq.at(s - 1); }
};

/// Mean, variance and autocorrelation of a stationary process.
struct ExactStatistics {
  double mu = 0.0;
  double sigma2 = 0.0;
  /// rho[k] for k = 0, 1, ...; rho[0] == 1.
  std::vector<double> rho;
};

[[nodiscard]] double sample_mean(std::span<const double> x);
[[nodiscard]] double sample_mean(const TimeSeries& x);

/// Population (1/N) variance about the sample mean.
[[nodiscard]] double sample_variance(std::span<const double> x);

/// Means of the floor(N/s) non-overlapping blocks of length s; the last N mod s samples are dropped.
[[nodiscard]] std::vector<double> shifted_sample_means(const TimeSeries& x, std::size_t s);

[[nodiscard]] double mean_squared_shifted_sample_mean(const TimeSeries& x, std::size_t s);

/// Builds the profile from one compensated prefix-sum pass. Requires N >= 4.
[[nodiscard]] MultiscaleProfile multiscale_profile(const TimeSeries& x);

/// Expected squared error of a length-s average given exact statistics:
/// (sigma^2 / s) [1 + 2 sum_{k=1}^{s-1} (1 - k/s) rho(k)].
[[nodiscard]] double exact_sq_averaging_error(const ExactStatistics& stats, std::size_t s);

/// Biased (1/N) sample autocorrelation up to lag k_max. Throws DegenerateSeries for zero variance.
[[nodiscard]] ExactStatistics empirical_autocorrelation(const TimeSeries& x, std::size_t k_max);

// Reference laws for uncorrelated and continuously sampled signals.

/// sigma^2 / N, the squared averaging error of N i.i.d. samples.
[[nodiscard]] double iid_sq_averaging_error(double sigma2, std::size_t n);

/// sigma * sqrt(2 tau_f / T), the integral-time-scale model for an average over duration T.
[[nodiscard]] double integral_timescale_error(double sigma, double integral_timescale, double duration);

/// 2 tau_f / c, a sampling interval at which consecutive samples are usefully but not wastefully correlated.
[[nodiscard]] double suggested_sampling_interval(double integral_timescale, double c = 10.0);

}  // namespace avgerr

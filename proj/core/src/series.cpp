#include "avgerr/series.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "avgerr/errors.hpp"
#include "avgerr/summation.hpp"

namespace avgerr {

namespace {

void require_block_length(std::size_t n, std::size_t s) {
  if (s == 0 || s > n) {
    throw InvalidInput("block length must satisfy 1 <= s <= N (s = " + std::to_string(s) +
                       ", N = " + std::to_string(n) + ")");
  }
}

// Chunked inner products keep the hot loop vectorisable while the cross-chunk
// accumulation stays compensated.
double lagged_product_sum(const std::vector<double>& c, std::size_t lag) {
  constexpr std::size_t kChunk = 1024;
  const std::size_t count = c.size() - lag;
  CompensatedSum total;
  for (std::size_t begin = 0; begin < count; begin += kChunk) {
    const std::size_t end = std::min(count, begin + kChunk);
    double partial = 0.0;
    for (std::size_t i = begin; i < end; ++i) partial += c[i] * c[i + lag];
    total.add(partial);
  }
  return total.value();
}

}  // namespace

TimeSeries::TimeSeries(std::vector<double> samples, double sampling_interval, std::string label)
    : samples_(std::move(samples)), sampling_interval_(sampling_interval), label_(std::move(label)) {
  if (!(sampling_interval_ > 0.0) || !std::isfinite(sampling_interval_)) {
    throw InvalidInput("sampling interval must be positive and finite");
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i])) {
      throw InvalidInput("sample " + std::to_string(i) + " is not finite");
    }
  }
}

TimeSeries TimeSeries::tail(std::size_t first) const {
  if (first > samples_.size()) throw InvalidInput("tail start beyond series end");
  return TimeSeries(std::vector<double>(samples_.begin() + static_cast<std::ptrdiff_t>(first), samples_.end()),
                    sampling_interval_, label_);
}

TimeSeries TimeSeries::head(std::size_t count) const {
  if (count > samples_.size()) throw InvalidInput("head length beyond series end");
  return TimeSeries(std::vector<double>(samples_.begin(), samples_.begin() + static_cast<std::ptrdiff_t>(count)),
                    sampling_interval_, label_);
}

double sample_mean(std::span<const double> x) {
  if (x.empty()) throw InvalidInput("sample mean of an empty series");
  return compensated_sum(x) / static_cast<double>(x.size());
}

double sample_mean(const TimeSeries& x) { return sample_mean(x.samples()); }

double sample_variance(std::span<const double> x) {
  const double mean = sample_mean(x);
  CompensatedSum acc;
  for (double v : x) acc.add((v - mean) * (v - mean));
  return acc.value() / static_cast<double>(x.size());
}

std::vector<double> shifted_sample_means(const TimeSeries& x, std::size_t s) {
  require_block_length(x.size(), s);
  const std::size_t blocks = x.size() / s;
  std::vector<double> means(blocks);
  const auto data = x.samples();
  for (std::size_t b = 0; b < blocks; ++b) {
    means[b] = compensated_sum(data.subspan(b * s, s)) / static_cast<double>(s);
  }
  return means;
}

double mean_squared_shifted_sample_mean(const TimeSeries& x, std::size_t s) {
  const auto means = shifted_sample_means(x, s);
  CompensatedSum acc;
  for (double m : means) acc.add(m * m);
  return acc.value() / static_cast<double>(means.size());
}

MultiscaleProfile multiscale_profile(const TimeSeries& x) {
  const std::size_t n = x.size();
  if (n < 4) throw InvalidInput("multiscale profile needs at least 4 samples");

  // Prefix sums kept as (high, low) pairs so block sums are exact to ~1 ulp of the block.
  std::vector<double> hi(n + 1, 0.0);
  std::vector<double> lo(n + 1, 0.0);
  CompensatedSum running;
  for (std::size_t i = 0; i < n; ++i) {
    running.add(x[i]);
    hi[i + 1] = running.high();
    lo[i + 1] = running.low();
  }

  MultiscaleProfile profile;
  profile.n = n;
  profile.q = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while ((profile.q + 1) * (profile.q + 1) <= n) ++profile.q;
  while (profile.q * profile.q > n) --profile.q;
  profile.msq.resize(profile.q);
  profile.block_counts.resize(profile.q);

  for (std::size_t s = 1; s <= profile.q; ++s) {
    const std::size_t blocks = n / s;
    const double inv_s = 1.0 / static_cast<double>(s);
    CompensatedSum acc;
    for (std::size_t b = 0; b < blocks; ++b) {
      const std::size_t a = b * s;
      const std::size_t e = a + s;
      const double block_sum = (hi[e] - hi[a]) + (lo[e] - lo[a]);
      const double m = block_sum * inv_s;
      acc.add(m * m);
    }
    profile.msq[s - 1] = acc.value() / static_cast<double>(blocks);
    profile.block_counts[s - 1] = blocks;
  }
  return profile;
}

double exact_sq_averaging_error(const ExactStatistics& stats, std::size_t s) {
  if (s == 0) throw InvalidInput("averaging length must be positive");
  if (stats.rho.size() < s) {
    throw InvalidInput("autocorrelation needs lags 0.." + std::to_string(s - 1) + ", have " +
                       std::to_string(stats.rho.size()));
  }
  const double sd = static_cast<double>(s);
  CompensatedSum acc;
  for (std::size_t k = 1; k < s; ++k) {
    acc.add((1.0 - static_cast<double>(k) / sd) * stats.rho[k]);
  }
  return stats.sigma2 / sd * (1.0 + 2.0 * acc.value());
}

ExactStatistics empirical_autocorrelation(const TimeSeries& x, std::size_t k_max) {
  const std::size_t n = x.size();
  if (n < 2) throw InvalidInput("autocorrelation needs at least 2 samples");
  if (k_max >= n) throw InvalidInput("k_max must be smaller than the series length");

  const double mean = sample_mean(x);
  std::vector<double> centred(n);
  for (std::size_t i = 0; i < n; ++i) centred[i] = x[i] - mean;

  const double gamma0 = lagged_product_sum(centred, 0) / static_cast<double>(n);
  if (!(gamma0 > 0.0)) throw DegenerateSeries("series has zero variance");

  ExactStatistics stats;
  stats.mu = mean;
  stats.sigma2 = gamma0;
  stats.rho.resize(k_max + 1);
  stats.rho[0] = 1.0;
  for (std::size_t k = 1; k <= k_max; ++k) {
    const double gamma = lagged_product_sum(centred, k) / static_cast<double>(n);
    stats.rho[k] = std::clamp(gamma / gamma0, -1.0, 1.0);
  }
  return stats;
}

double iid_sq_averaging_error(double sigma2, std::size_t n) {
  if (n == 0) throw InvalidInput("sample count must be positive");
  return sigma2 / static_cast<double>(n);
}

double integral_timescale_error(double sigma, double integral_timescale, double duration) {
  if (!(duration > 0.0)) throw InvalidInput("averaging duration must be positive");
  return sigma * std::sqrt(2.0 * integral_timescale / duration);
}

double suggested_sampling_interval(double integral_timescale, double c) {
  if (!(c > 0.0)) throw InvalidInput("sampling constant must be positive");
  return 2.0 * integral_timescale / c;
}

}  // namespace avgerr

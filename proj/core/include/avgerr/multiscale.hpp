#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "avgerr/errors.hpp"
#include "avgerr/series.hpp"

namespace avgerr {

/// Parameters of the multi-exponential autocorrelation model
///   rho(k) = sum_i amplitudes[i] * rates[i]^k
/// together with the modelled standard deviation and mean magnitude.
///
/// Feasible when 0 <= rates[i] < 1, sum(amplitudes) == 1, sigma_hat >= 0 and
/// mu_hat >= 0. Amplitudes carry no sign constraint.
struct AcfModelParams {
  std::vector<double> amplitudes;
  std::vector<double> rates;
  double sigma_hat = 0.0;
  double mu_hat = 0.0;

  [[nodiscard]] std::size_t modes() const noexcept { return amplitudes.size(); }
};

/// Throws InvalidInput when `p` is outside the feasible domain.
void validate(const AcfModelParams& p);

struct FitConfig {
  std::size_t m = 3;
  std::size_t n_starts = 8;
  /// Equality tolerance is tol_eq * max(1, msq at the largest scale).
  double tol_eq = 1e-8;
  /// Rates are bounded above by 1 - tau_ceiling_delta.
  double tau_ceiling_delta = 1e-6;
  std::size_t max_outer_iters = 50;
  std::size_t max_inner_iters = 500;
  std::uint64_t seed = 1;
};

/// Throws InvalidInput for out-of-range settings (m outside 1..8, zero starts, ...).
void validate(const FitConfig& config);

/// Sum_{k=1}^{s-1} (1 - k/s) tau^k. Closed form for long blocks, direct summation otherwise.
[[nodiscard]] double lag_weighted_power_sum(std::size_t s, double tau);
/// d/dtau of lag_weighted_power_sum: sum_{k=1}^{s-1} k (1 - k/s) tau^(k-1).
[[nodiscard]] double lag_weighted_power_sum_derivative(std::size_t s, double tau);

[[nodiscard]] double model_acf(std::size_t k, const AcfModelParams& p);

/// Modelled squared averaging error at block length s.
[[nodiscard]] double model_sq_error(const AcfModelParams& p, std::size_t s);

/// mu_hat^2 + model_sq_error(p, s) - msq_s.
[[nodiscard]] double residual_g(const AcfModelParams& p, std::size_t s, double msq_s);

/// Limit of s * model_sq_error(p, s) as s grows: sigma^2 [1 + 2 sum_i A_i tau_i / (1 - tau_i)].
[[nodiscard]] double asymptote(const AcfModelParams& p);

/// Gradient ordering: amplitudes (m), rates (m), sigma_hat, mu_hat.
struct ObjectiveGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

/// f = sum_{s=1}^{q} g_s^2 and its analytic gradient.
[[nodiscard]] ObjectiveGradient objective_and_gradient(const AcfModelParams& p, const MultiscaleProfile& profile);

struct FitResult {
  AcfModelParams params;
  double objective_value = 0.0;
  /// |g_q| at the returned parameters.
  double equality_residual = 0.0;
  double equality_tolerance = 0.0;
  std::size_t n_starts_used = 0;
  bool converged = false;
  /// Set when |rho_hat(k)| > 1 for some k <= q.
  bool acf_exceeds_unity = false;
};

/// No multistart run satisfied the equality constraint within the iteration budget.
class FitFailure : public NumericalFailure {
 public:
  FitFailure(const std::string& what, FitResult best) : NumericalFailure(what), best_(std::move(best)) {}
  [[nodiscard]] const FitResult& best_iterate() const noexcept { return best_; }

 private:
  FitResult best_;
};

/// Multistart augmented-Lagrangian fit of the model to a multiscale profile,
/// with g_q = 0 enforced as an equality. Requires profile.q >= m + 2.
[[nodiscard]] FitResult fit(const MultiscaleProfile& profile, const FitConfig& config);

struct UqEstimate {
  std::size_t n = 0;
  double eps2_n = 0.0;
  double q_hat = 0.0;
  AcfModelParams params;
  double objective_value = 0.0;
  double equality_residual = 0.0;
  std::size_t n_starts_used = 0;
  bool converged = false;
  /// Zero-variance input: no fit was attempted.
  bool degenerate = false;
  bool acf_exceeds_unity = false;
};

/// Full estimator: profile, fit, then the modelled error at s = N and its asymptote.
/// Requires N >= 16; propagates FitFailure.
[[nodiscard]] UqEstimate estimate(const TimeSeries& x, const FitConfig& config);

}  // namespace avgerr

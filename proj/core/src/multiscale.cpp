#include "avgerr/multiscale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>

#include "avgerr/rng.hpp"
#include "avgerr/summation.hpp"
#include "projected_bfgs.hpp"

namespace avgerr {

namespace {

constexpr std::size_t kMaxModes = 8;

// Below these the closed forms lose digits to cancellation in s(1 - tau) - (1 - tau^s).
constexpr std::size_t kDirectSumMaxBlock = 64;
constexpr double kDirectSumMaxScaledGap = 0.05;

bool use_direct_sum(std::size_t s, double tau) {
  return s <= kDirectSumMaxBlock || static_cast<double>(s) * (1.0 - tau) < kDirectSumMaxScaledGap;
}

double direct_power_sum(std::size_t s, double tau) {
  const double sd = static_cast<double>(s);
  double power = tau;
  CompensatedSum acc;
  for (std::size_t k = 1; k < s; ++k) {
    acc.add((1.0 - static_cast<double>(k) / sd) * power);
    power *= tau;
  }
  return acc.value();
}

double direct_power_sum_derivative(std::size_t s, double tau) {
  const double sd = static_cast<double>(s);
  double power = 1.0;
  CompensatedSum acc;
  for (std::size_t k = 1; k < s; ++k) {
    const double kd = static_cast<double>(k);
    acc.add(kd * (1.0 - kd / sd) * power);
    power *= tau;
  }
  return acc.value();
}

// 1 - tau^s for tau = 1 - gap, without forming tau^s near 1.
double one_minus_power(std::size_t s, double gap) {
  return -std::expm1(static_cast<double>(s) * std::log1p(-gap));
}

// Unpacked view of the optimisation vector [A_1..A_m, tau_1..tau_m, sigma^2, mu^2].
// The optimiser works in the squares: g_s is linear in them, whereas in (sigma, mu)
// the gradient vanishes identically on the sigma = 0 and mu = 0 bounds.
struct Packed {
  std::span<const double> amplitudes;
  std::span<const double> rates;
  double variance;
  double mean_sq;
};

Packed unpack(std::span<const double> x, std::size_t m) {
  return {x.subspan(0, m), x.subspan(m, m), x[2 * m], x[2 * m + 1]};
}

// Bracketed factor of the modelled error: (1/s) [1 + 2 sum_i A_i S(s, tau_i)].
double error_coefficient(const Packed& p, std::size_t s) {
  double inner = 0.0;
  for (std::size_t i = 0; i < p.amplitudes.size(); ++i) inner += p.amplitudes[i] * lag_weighted_power_sum(s, p.rates[i]);
  return (1.0 + 2.0 * inner) / static_cast<double>(s);
}

// Accumulates P = sum tau^k, R = sum k tau^k and their derivatives for k = 1..K, one k at a time,
// so that sum_{k<s} (1 - k/s) tau^k = P - R/s costs O(1) per block length.
struct RunningPowerSums {
  double tau = 0.0;
  std::size_t k = 0;
  double power = 1.0;  // tau^k
  double p = 0.0;
  double r = 0.0;
  double dp = 0.0;
  double dr = 0.0;

  void advance() {
    const double kd = static_cast<double>(++k);
    const double prev = power;  // tau^(k-1)
    power *= tau;
    p += power;
    r += kd * power;
    dp += kd * prev;
    dr += kd * kd * prev;
  }
  double weighted(double s) const { return p - r / s; }
  double weighted_derivative(double s) const { return dp - dr / s; }
};

struct Evaluation {
  double f = 0.0;
  double h = 0.0;  // g_q
};

// f = sum g_s^2 with gradient, plus g_q and its gradient when requested.
Evaluation evaluate(std::span<const double> x, std::size_t m, std::span<const double> msq, std::vector<double>* grad_f,
                    std::vector<double>* grad_h) {
  const Packed p = unpack(x, m);
  const std::size_t q = msq.size();
  const std::size_t dim = 2 * m + 2;
  if (grad_f) grad_f->assign(dim, 0.0);
  if (grad_h) grad_h->assign(dim, 0.0);

  std::vector<double> sums(m);
  std::vector<double> derivs(m);
  std::vector<double> grad_g(dim);
  const double sigma2 = p.variance;
  const double mu2 = p.mean_sq;

  // Running sums over k < s, per mode: tau^k, k tau^k and their tau-derivatives.
  std::vector<RunningPowerSums> running(m);
  for (std::size_t i = 0; i < m; ++i) running[i].tau = p.rates[i];

  CompensatedSum f;
  Evaluation out;
  for (std::size_t s = 1; s <= q; ++s) {
    const double sd = static_cast<double>(s);
    double inner = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (s > 1) running[i].advance();
      sums[i] = running[i].weighted(sd);
      derivs[i] = running[i].weighted_derivative(sd);
      inner += p.amplitudes[i] * sums[i];
    }
    const double coeff = (1.0 + 2.0 * inner) / sd;
    const double g = mu2 + sigma2 * coeff - msq[s - 1];
    f.add(g * g);

    for (std::size_t i = 0; i < m; ++i) {
      grad_g[i] = sigma2 * 2.0 * sums[i] / sd;
      grad_g[m + i] = sigma2 * 2.0 * p.amplitudes[i] * derivs[i] / sd;
    }
    grad_g[2 * m] = coeff;
    grad_g[2 * m + 1] = 1.0;

    if (grad_f) {
      for (std::size_t j = 0; j < dim; ++j) (*grad_f)[j] += 2.0 * g * grad_g[j];
    }
    if (s == q) {
      out.h = g;
      if (grad_h) *grad_h = grad_g;
    }
  }
  out.f = f.value();
  return out;
}

std::vector<double> pack(const AcfModelParams& p) {
  std::vector<double> x;
  x.reserve(2 * p.modes() + 2);
  x.insert(x.end(), p.amplitudes.begin(), p.amplitudes.end());
  x.insert(x.end(), p.rates.begin(), p.rates.end());
  x.push_back(p.sigma_hat * p.sigma_hat);
  x.push_back(p.mu_hat * p.mu_hat);
  return x;
}

// `scale` converts squared internal units back to data units.
AcfModelParams unpack_params(const std::vector<double>& x, std::size_t m, double scale) {
  AcfModelParams p;
  p.amplitudes.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(m));
  p.rates.assign(x.begin() + static_cast<std::ptrdiff_t>(m), x.begin() + static_cast<std::ptrdiff_t>(2 * m));
  p.sigma_hat = std::sqrt(std::max(0.0, x[2 * m] * scale));
  p.mu_hat = std::sqrt(std::max(0.0, x[2 * m + 1] * scale));
  return p;
}

// Moves (sigma, mu) onto g_q = 0 while leaving the correlation shape untouched.
void restore_equality(std::vector<double>& x, std::size_t m, std::size_t q, double msq_q) {
  const Packed p = unpack(x, m);
  const double coeff = error_coefficient(p, q);
  const double remainder = msq_q - p.variance * coeff;
  if (remainder >= 0.0) {
    x[2 * m + 1] = remainder;
  } else {
    // variance * coeff > msq_q >= 0 implies coeff > 0.
    x[2 * m + 1] = 0.0;
    x[2 * m] = msq_q / coeff;
  }
}

struct StartOutcome {
  std::vector<double> x;
  double f = 0.0;
  double h = 0.0;
  bool feasible = false;
};

StartOutcome run_start(std::vector<double> x0, std::size_t m, std::span<const double> msq,
                       const detail::FeasibleSet& set, const FitConfig& config, double tol) {
  const std::size_t q = msq.size();
  double lambda = 0.0;
  double penalty = 10.0;
  double previous_violation = std::numeric_limits<double>::infinity();

  detail::BfgsOptions options;
  options.max_iterations = config.max_inner_iters;
  options.projected_gradient_tol = 1e-12;

  std::vector<double> grad_h;
  const detail::ValueAndGradient lagrangian = [&](const std::vector<double>& x, std::vector<double>& grad) {
    const Evaluation e = evaluate(x, m, msq, &grad, &grad_h);
    const double multiplier = lambda + penalty * e.h;
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += multiplier * grad_h[j];
    return e.f + lambda * e.h + 0.5 * penalty * e.h * e.h;
  };

  StartOutcome out;
  out.x = std::move(x0);
  for (std::size_t outer = 0; outer < config.max_outer_iters; ++outer) {
    auto inner = detail::minimize_projected_bfgs(lagrangian, out.x, set, options);
    if (inner.status == detail::BfgsStatus::NonFinite) break;
    out.x = std::move(inner.x);
    const double h = evaluate(out.x, m, msq, nullptr, nullptr).h;
    if (std::abs(h) <= tol) {
      out.feasible = true;
      break;
    }
    lambda += penalty * h;
    if (std::abs(h) > 0.25 * previous_violation) penalty = std::min(penalty * 10.0, 1e12);
    previous_violation = std::abs(h);
  }

  restore_equality(out.x, m, q, msq[q - 1]);
  const Evaluation final_eval = evaluate(out.x, m, msq, nullptr, nullptr);
  out.f = final_eval.f;
  out.h = final_eval.h;
  if (!std::isfinite(out.f)) out.feasible = false;
  return out;
}

bool acf_exceeds_unity(const AcfModelParams& p, std::size_t q) {
  for (std::size_t k = 1; k <= q; ++k) {
    double rho = 0.0;
    for (std::size_t i = 0; i < p.modes(); ++i) rho += p.amplitudes[i] * std::pow(p.rates[i], static_cast<double>(k));
    if (std::abs(rho) > 1.0 + 1e-12) return true;
  }
  return false;
}

}  // namespace

void validate(const FitConfig& config) {
  if (config.m < 1 || config.m > kMaxModes) {
    throw InvalidInput("number of modes must be in 1.." + std::to_string(kMaxModes));
  }
  if (config.n_starts < 1) throw InvalidInput("at least one start is required");
  if (!(config.tau_ceiling_delta > 0.0 && config.tau_ceiling_delta < 0.5)) {
    throw InvalidInput("tau_ceiling_delta must be in (0, 0.5)");
  }
  if (!(config.tol_eq > 0.0) || !std::isfinite(config.tol_eq)) throw InvalidInput("tol_eq must be positive");
  if (config.max_outer_iters < 1 || config.max_inner_iters < 1) throw InvalidInput("iteration limits must be positive");
}

namespace {

FitResult fit_impl(const MultiscaleProfile& profile, const FitConfig& config, double sigma0, double mu0) {
  validate(config);
  const std::size_t m = config.m;
  if (profile.q != profile.msq.size() || profile.q < m + 2) {
    throw InvalidInput("profile has " + std::to_string(profile.msq.size()) + " scales; need at least m + 2 = " +
                       std::to_string(m + 2));
  }
  for (double v : profile.msq) {
    if (!std::isfinite(v) || v < 0.0) throw InvalidInput("profile entries must be finite and non-negative");
  }

  const std::size_t q = profile.q;
  const double msq_q = profile.msq[q - 1];
  const double tol = config.tol_eq * std::max(1.0, msq_q);

  // Work in units where the mean square of the data is one.
  const double scale = profile.msq[0] > 0.0 ? profile.msq[0] : 1.0;
  std::vector<double> msq(q);
  for (std::size_t s = 0; s < q; ++s) msq[s] = profile.msq[s] / scale;

  detail::FeasibleSet set;
  const double inf = std::numeric_limits<double>::infinity();
  set.lower.assign(2 * m + 2, -inf);
  set.upper.assign(2 * m + 2, inf);
  for (std::size_t i = 0; i < m; ++i) {
    set.lower[m + i] = 0.0;
    set.upper[m + i] = 1.0 - config.tau_ceiling_delta;
  }
  set.lower[2 * m] = 0.0;
  set.lower[2 * m + 1] = 0.0;
  set.sum_group = detail::FeasibleSet::SumGroup{0, m, 1.0};

  Xoshiro256 rng(config.seed);
  const double log_lo = std::log(0.01);
  const double log_hi = std::log(1.0 - config.tau_ceiling_delta);

  StartOutcome best;
  bool have_best = false;
  bool best_feasible = false;
  for (std::size_t start = 0; start < config.n_starts; ++start) {
    std::vector<double> x0(2 * m + 2);
    std::vector<double> rates(m);
    for (auto& r : rates) r = std::exp(log_lo + (log_hi - log_lo) * rng.uniform());
    std::sort(rates.begin(), rates.end());
    for (std::size_t i = 0; i < m; ++i) {
      x0[i] = 1.0 / static_cast<double>(m);
      x0[m + i] = rates[i];
    }
    x0[2 * m] = sigma0 * sigma0 / scale;
    x0[2 * m + 1] = mu0 * mu0 / scale;

    StartOutcome outcome = run_start(std::move(x0), m, msq, set, config, tol / scale);
    const bool better = !have_best || (outcome.feasible && !best_feasible) ||
                        (outcome.feasible == best_feasible && outcome.f < best.f);
    if (better) {
      best = std::move(outcome);
      best_feasible = best.feasible;
      have_best = true;
    }
  }

  FitResult result;
  result.params = unpack_params(best.x, m, scale);
  result.objective_value = best.f * scale * scale;
  result.equality_residual = std::abs(best.h) * scale;
  result.equality_tolerance = tol;
  result.n_starts_used = config.n_starts;
  result.converged = best_feasible && result.equality_residual <= tol;
  result.acf_exceeds_unity = acf_exceeds_unity(result.params, q);

  if (!result.converged) {
    throw FitFailure("no start satisfied the equality constraint within the iteration budget", result);
  }
  return result;
}

}  // namespace

double lag_weighted_power_sum(std::size_t s, double tau) {
  if (s <= 1 || tau == 0.0) return 0.0;
  if (use_direct_sum(s, tau)) return direct_power_sum(s, tau);
  const double gap = 1.0 - tau;
  const double sd = static_cast<double>(s);
  const double w = one_minus_power(s, gap);
  return tau * (sd * gap - w) / (sd * gap * gap);
}

double lag_weighted_power_sum_derivative(std::size_t s, double tau) {
  if (s <= 1) return 0.0;
  if (use_direct_sum(s, tau)) return direct_power_sum_derivative(s, tau);
  const double gap = 1.0 - tau;
  const double sd = static_cast<double>(s);
  const double w = one_minus_power(s, gap);
  // F = tau (s gap - w), F' = 2 s gap - (s + 1) w, S = F / (s gap^2).
  const double value = tau * (sd * gap - w);
  const double slope = 2.0 * sd * gap - (sd + 1.0) * w;
  return slope / (sd * gap * gap) + 2.0 * value / (sd * gap * gap * gap);
}

void validate(const AcfModelParams& p) {
  const std::size_t m = p.modes();
  if (m == 0) throw InvalidInput("autocorrelation model needs at least one mode");
  if (p.rates.size() != m) throw InvalidInput("amplitude and rate counts differ");
  double total = 0.0;
  double magnitude = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(p.amplitudes[i])) throw InvalidInput("non-finite amplitude");
    if (!(p.rates[i] >= 0.0 && p.rates[i] < 1.0)) {
      throw InvalidInput("rate " + std::to_string(i) + " outside [0, 1)");
    }
    total += p.amplitudes[i];
    magnitude += std::abs(p.amplitudes[i]);
  }
  if (std::abs(total - 1.0) > 1e-9 * std::max(1.0, magnitude)) {
    throw InvalidInput("amplitudes must sum to one");
  }
  if (!(p.sigma_hat >= 0.0) || !std::isfinite(p.sigma_hat)) throw InvalidInput("sigma_hat must be >= 0");
  if (!(p.mu_hat >= 0.0) || !std::isfinite(p.mu_hat)) throw InvalidInput("mu_hat must be >= 0");
}

double model_acf(std::size_t k, const AcfModelParams& p) {
  validate(p);
  double rho = 0.0;
  for (std::size_t i = 0; i < p.modes(); ++i) rho += p.amplitudes[i] * std::pow(p.rates[i], static_cast<double>(k));
  return rho;
}

double model_sq_error(const AcfModelParams& p, std::size_t s) {
  validate(p);
  if (s == 0) throw InvalidInput("block length must be positive");
  const auto x = pack(p);
  return p.sigma_hat * p.sigma_hat * error_coefficient(unpack(x, p.modes()), s);
}

double residual_g(const AcfModelParams& p, std::size_t s, double msq_s) {
  return p.mu_hat * p.mu_hat + model_sq_error(p, s) - msq_s;
}

double asymptote(const AcfModelParams& p) {
  validate(p);
  double inner = 0.0;
  for (std::size_t i = 0; i < p.modes(); ++i) inner += p.amplitudes[i] * p.rates[i] / (1.0 - p.rates[i]);
  return p.sigma_hat * p.sigma_hat * (1.0 + 2.0 * inner);
}

ObjectiveGradient objective_and_gradient(const AcfModelParams& p, const MultiscaleProfile& profile) {
  validate(p);
  if (profile.msq.empty()) throw InvalidInput("empty multiscale profile");
  ObjectiveGradient out;
  const std::size_t m = p.modes();
  const auto x = pack(p);
  out.value = evaluate(x, m, profile.msq, &out.gradient, nullptr).f;
  // Chain rule back to (sigma, mu): d/dsigma = 2 sigma d/dsigma^2.
  out.gradient[2 * m] *= 2.0 * p.sigma_hat;
  out.gradient[2 * m + 1] *= 2.0 * p.mu_hat;
  return out;
}

}  // namespace avgerr

namespace avgerr {

FitResult fit(const MultiscaleProfile& profile, const FitConfig& config) {
  const double sigma0 = profile.msq.empty() ? 1.0 : std::sqrt(std::max(profile.msq.front(), 0.0));
  return fit_impl(profile, config, sigma0, 0.0);
}

UqEstimate estimate(const TimeSeries& x, const FitConfig& config) {
  const std::size_t n = x.size();
  if (n < 16) throw InvalidInput("estimation needs at least 16 samples");

  UqEstimate out;
  out.n = n;
  const double mean = sample_mean(x);
  const double variance = sample_variance(x.samples());
  if (variance == 0.0) {
    out.degenerate = true;
    out.converged = true;
    out.params.amplitudes.assign(std::max<std::size_t>(config.m, 1), 1.0 / static_cast<double>(std::max<std::size_t>(config.m, 1)));
    out.params.rates.assign(out.params.amplitudes.size(), 0.0);
    out.params.mu_hat = std::abs(mean);
    return out;
  }

  const MultiscaleProfile profile = multiscale_profile(x);
  const FitResult result = fit_impl(profile, config, std::sqrt(variance), std::abs(mean));
  out.params = result.params;
  out.objective_value = result.objective_value;
  out.equality_residual = result.equality_residual;
  out.n_starts_used = result.n_starts_used;
  out.converged = result.converged;
  out.acf_exceeds_unity = result.acf_exceeds_unity;
  // Sign-mixed amplitudes can drive the far extrapolation slightly negative.
  out.eps2_n = std::max(0.0, model_sq_error(out.params, n));
  out.q_hat = std::max(0.0, asymptote(out.params));
  return out;
}

}  // namespace avgerr

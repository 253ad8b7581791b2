#include "avgerr/ar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Dense>

#include "avgerr/errors.hpp"
#include "avgerr/rng.hpp"
#include "avgerr/summation.hpp"
#include "projected_bfgs.hpp"

namespace avgerr {

namespace {

// Bound on the tanh-parameterised partial autocorrelations during MLE; |kappa| <= 1 - 2.3e-7,
// far enough from the boundary for the step-down recursion to reproduce them.
constexpr double kPacfParamBound = 8.0;

struct Innovations {
  double weighted_sum_sq = 0.0;  // sum e_t^2 / r_t
  double log_factor_sum = 0.0;   // sum log r_t
};

// Innovations of the exact one-step predictor given the partial autocorrelations.
Innovations innovations(std::span<const double> pacf, std::span<const double> y) {
  const std::size_t p = pacf.size();
  const std::size_t n = y.size();

  // r_t = prod_{j > t} 1 / (1 - kappa_j^2) for t < p; 1 afterwards.
  std::vector<double> log_r(p + 1, 0.0);
  for (std::size_t t = p; t-- > 0;) log_r[t] = log_r[t + 1] - std::log1p(-pacf[t] * pacf[t]);

  Innovations out;
  CompensatedSum ss;
  CompensatedSum logs;
  std::vector<double> phi;
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t order = std::min(t, p);
    if (t <= p && t > 0) {
      // Step up from order t-1 to t.
      const double kappa = pacf[t - 1];
      std::vector<double> next(t);
      for (std::size_t i = 0; i + 1 < t; ++i) next[i] = phi[i] - kappa * phi[t - 2 - i];
      next[t - 1] = kappa;
      phi = std::move(next);
    }
    double prediction = 0.0;
    for (std::size_t i = 0; i < order; ++i) prediction += phi[i] * y[t - 1 - i];
    const double e = y[t] - prediction;
    const double lr = t < p ? log_r[t] : 0.0;
    ss.add(e * e * std::exp(-lr));
    logs.add(lr);
  }
  out.weighted_sum_sq = ss.value();
  out.log_factor_sum = logs.value();
  return out;
}

std::vector<double> centred(std::span<const double> x, double mean) {
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] - mean;
  return y;
}

// Levinson-Durbin on an autocorrelation sequence rho[0..p].
struct Levinson {
  std::vector<double> coeffs;
  std::vector<double> pacf;
  double variance_ratio = 1.0;  // prediction variance / gamma(0)
};

Levinson levinson_durbin(std::span<const double> rho, std::size_t p) {
  Levinson out;
  std::vector<double> phi;
  double v = 1.0;
  for (std::size_t j = 1; j <= p; ++j) {
    double num = rho[j];
    for (std::size_t i = 0; i + 1 < j; ++i) num -= phi[i] * rho[j - 1 - i];
    const double kappa = num / v;
    std::vector<double> next(j);
    for (std::size_t i = 0; i + 1 < j; ++i) next[i] = phi[i] - kappa * phi[j - 2 - i];
    next[j - 1] = kappa;
    phi = std::move(next);
    out.pacf.push_back(kappa);
    v *= (1.0 - kappa * kappa);
  }
  out.coeffs = std::move(phi);
  out.variance_ratio = v;
  return out;
}

}  // namespace

ArModel paper_ar6() {
  ArModel model;
  model.coeffs = {3.1378, -3.9789, 2.6788, -1.0401, 0.2139, -0.0133};
  model.noise_variance = 0.1;
  model.mean = 0.0;
  return model;
}

std::vector<double> partial_autocorrelations(const ArModel& model) {
  std::vector<double> a = model.coeffs;
  const std::size_t p = a.size();
  std::vector<double> pacf(p);
  for (std::size_t j = p; j >= 1; --j) {
    const double kappa = a[j - 1];
    if (!(std::abs(kappa) < 1.0)) {
      throw InvalidInput("partial autocorrelation of order " + std::to_string(j) + " has magnitude >= 1");
    }
    pacf[j - 1] = kappa;
    std::vector<double> lower(j - 1);
    const double denom = 1.0 - kappa * kappa;
    for (std::size_t i = 0; i + 1 < j; ++i) lower[i] = (a[i] + kappa * a[j - 2 - i]) / denom;
    a = std::move(lower);
  }
  return pacf;
}

std::vector<double> coefficients_from_pacf(std::span<const double> pacf) {
  std::vector<double> phi;
  for (std::size_t j = 1; j <= pacf.size(); ++j) {
    const double kappa = pacf[j - 1];
    std::vector<double> next(j);
    for (std::size_t i = 0; i + 1 < j; ++i) next[i] = phi[i] - kappa * phi[j - 2 - i];
    next[j - 1] = kappa;
    phi = std::move(next);
  }
  return phi;
}

bool is_stationary(const ArModel& model) {
  for (double a : model.coeffs) {
    if (!std::isfinite(a)) return false;
  }
  try {
    (void)partial_autocorrelations(model);
    return true;
  } catch (const InvalidInput&) {
    return false;
  }
}

std::vector<std::complex<double>> characteristic_roots(const ArModel& model) {
  const auto p = static_cast<Eigen::Index>(model.order());
  if (p == 0) return {};
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) companion(0, j) = model.coeffs[static_cast<std::size_t>(j)];
  for (Eigen::Index i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  std::vector<std::complex<double>> roots(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) roots[static_cast<std::size_t>(i)] = solver.eigenvalues()[i];
  std::sort(roots.begin(), roots.end(), [](auto a, auto b) { return std::abs(a) > std::abs(b); });
  return roots;
}

TimeSeries simulate_ar(const ArModel& model, std::size_t n, std::span<const double> init, std::uint64_t seed) {
  const std::size_t p = model.order();
  if (init.size() != p) {
    throw InvalidInput("initial history must have " + std::to_string(p) + " values, got " +
                       std::to_string(init.size()));
  }
  if (!(model.noise_variance >= 0.0)) throw InvalidInput("noise variance must be non-negative");
  if (!is_stationary(model)) throw InvalidInput("refusing to simulate a non-stationary AR model");

  const double noise_sd = std::sqrt(model.noise_variance);
  NormalGenerator normal(seed);

  // history holds deviations from the mean, oldest first, followed by the new samples.
  std::vector<double> history(p + n);
  for (std::size_t i = 0; i < p; ++i) history[i] = init[i] - model.mean;
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    double v = 0.0;
    for (std::size_t k = 1; k <= p; ++k) v += model.coeffs[k - 1] * history[p + t - k];
    v += noise_sd * normal();
    history[p + t] = v;
    out[t] = v + model.mean;
  }
  return TimeSeries(std::move(out), 1.0, "ar" + std::to_string(p));
}

std::size_t stationary_burn_in(const ArModel& model) {
  double radius = 0.0;
  for (const auto& root : characteristic_roots(model)) radius = std::max(radius, std::abs(root));
  const std::size_t p = model.order();
  if (radius <= 0.0) return p;
  const double steps = std::ceil(std::log(1e-12) / std::log(radius));
  return p + static_cast<std::size_t>(std::min(steps, 1e7));
}

TimeSeries simulate_ar_stationary(const ArModel& model, std::size_t n, std::uint64_t seed) {
  if (!is_stationary(model)) throw InvalidInput("refusing to simulate a non-stationary AR model");
  const std::size_t burn = stationary_burn_in(model);
  const std::vector<double> init(model.order(), model.mean);
  return simulate_ar(model, burn + n, init, seed).tail(burn);
}

ExactStatistics yule_walker_truth(const ArModel& model, std::size_t k_max) {
  if (!is_stationary(model)) throw InvalidInput("Yule-Walker truth requires a stationary model");
  const std::size_t p = model.order();
  const auto dim = static_cast<Eigen::Index>(p + 1);

  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  rhs[0] = model.noise_variance;
  for (std::size_t h = 0; h <= p; ++h) {
    for (std::size_t j = 1; j <= p; ++j) {
      const std::size_t lag = h >= j ? h - j : j - h;
      system(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(lag)) -= model.coeffs[j - 1];
    }
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
  if (!lu.isInvertible()) throw NumericalFailure("Yule-Walker system is singular");
  const Eigen::VectorXd head = lu.solve(rhs);

  std::vector<double> gamma(std::max(k_max, p) + 1);
  for (std::size_t h = 0; h <= p; ++h) gamma[h] = head[static_cast<Eigen::Index>(h)];
  for (std::size_t h = p + 1; h < gamma.size(); ++h) {
    double v = 0.0;
    for (std::size_t j = 1; j <= p; ++j) v += model.coeffs[j - 1] * gamma[h - j];
    gamma[h] = v;
  }
  if (!(gamma[0] > 0.0) && model.noise_variance > 0.0) throw NumericalFailure("Yule-Walker variance is not positive");

  ExactStatistics stats;
  stats.mu = model.mean;
  stats.sigma2 = gamma[0];
  stats.rho.resize(k_max + 1);
  for (std::size_t k = 0; k <= k_max; ++k) stats.rho[k] = gamma[0] > 0.0 ? gamma[k] / gamma[0] : (k == 0 ? 1.0 : 0.0);
  return stats;
}


namespace {

struct YuleWalkerFit {
  ArModel model;
  std::vector<double> pacf;
};

YuleWalkerFit yule_walker_with_pacf(const TimeSeries& x, std::size_t p) {
  if (p == 0) throw InvalidInput("AR order must be positive");
  if (x.size() <= p) throw InvalidInput("series too short for the requested AR order");
  const ExactStatistics acf = empirical_autocorrelation(x, p);
  const Levinson ld = levinson_durbin(acf.rho, p);
  YuleWalkerFit out;
  out.model.coeffs = ld.coeffs;
  out.model.noise_variance = acf.sigma2 * ld.variance_ratio;
  out.model.mean = acf.mu;
  out.pacf = ld.pacf;
  return out;
}

double log_likelihood_from_pacf(std::span<const double> pacf, double noise_variance, std::span<const double> y) {
  const Innovations inn = innovations(pacf, y);
  const double n = static_cast<double>(y.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi * noise_variance) + inn.log_factor_sum +
                 inn.weighted_sum_sq / noise_variance);
}

}  // namespace

ArModel fit_ar_yule_walker(const TimeSeries& x, std::size_t p) { return yule_walker_with_pacf(x, p).model; }

double ar_log_likelihood(const ArModel& model, std::span<const double> x) {
  if (x.empty()) throw InvalidInput("likelihood of an empty series");
  if (!(model.noise_variance > 0.0)) throw InvalidInput("noise variance must be positive");
  const auto pacf = partial_autocorrelations(model);
  return log_likelihood_from_pacf(pacf, model.noise_variance, centred(x, model.mean));
}

ArMleFit fit_ar_mle(const TimeSeries& x, std::size_t p) {
  if (p == 0) throw InvalidInput("AR order must be positive");
  if (x.size() <= 10 * p) throw InvalidInput("maximum likelihood AR(p) fit needs N > 10 p");

  const YuleWalkerFit yw = yule_walker_with_pacf(x, p);
  const ArModel& initial = yw.model;
  const auto y = centred(x.samples(), initial.mean);
  const double n = static_cast<double>(y.size());

  // Negative log-likelihood with the innovation variance profiled out.
  const auto profiled = [&](std::span<const double> z) {
    std::vector<double> pacf(p);
    for (std::size_t j = 0; j < p; ++j) pacf[j] = std::tanh(z[j]);
    const Innovations inn = innovations(pacf, y);
    if (!(inn.weighted_sum_sq > 0.0)) return std::numeric_limits<double>::infinity();
    return 0.5 * (n * (std::log(2.0 * std::numbers::pi * inn.weighted_sum_sq / n) + 1.0) + inn.log_factor_sum);
  };
  const detail::ValueAndGradient objective = [&](const std::vector<double>& z, std::vector<double>& grad) {
    const double value = profiled(z);
    grad.resize(p);
    std::vector<double> probe = z;
    for (std::size_t j = 0; j < p; ++j) {
      const double step = 1e-6 * std::max(1.0, std::abs(z[j]));
      probe[j] = z[j] + step;
      const double up = profiled(probe);
      probe[j] = z[j] - step;
      const double down = profiled(probe);
      probe[j] = z[j];
      grad[j] = (up - down) / (2.0 * step);
    }
    return value;
  };

  std::vector<double> z0(p);
  for (std::size_t j = 0; j < p; ++j) z0[j] = std::clamp(std::atanh(yw.pacf[j]), -kPacfParamBound, kPacfParamBound);

  detail::FeasibleSet bounds;
  bounds.lower.assign(p, -kPacfParamBound);
  bounds.upper.assign(p, kPacfParamBound);
  detail::BfgsOptions options;
  options.max_iterations = 200;
  options.projected_gradient_tol = 1e-9 * n;
  options.relative_decrease_tol = 1e-14;

  ArMleFit out;
  out.initial_log_likelihood = log_likelihood_from_pacf(yw.pacf, initial.noise_variance, y);
  const auto result = detail::minimize_projected_bfgs(objective, z0, bounds, options);

  if (result.status == detail::BfgsStatus::NonFinite || !std::isfinite(result.value)) {
    out.model = initial;
    out.log_likelihood = out.initial_log_likelihood;
    out.fell_back_to_yule_walker = true;
    return out;
  }

  std::vector<double> pacf(p);
  for (std::size_t j = 0; j < p; ++j) pacf[j] = std::tanh(result.x[j]);
  const Innovations inn = innovations(pacf, y);
  ArModel fitted;
  fitted.coeffs = coefficients_from_pacf(pacf);
  fitted.noise_variance = inn.weighted_sum_sq / n;
  fitted.mean = initial.mean;
  const double ll = log_likelihood_from_pacf(pacf, fitted.noise_variance, y);

  if (ll < out.initial_log_likelihood) {
    out.model = initial;
    out.log_likelihood = out.initial_log_likelihood;
    out.fell_back_to_yule_walker = true;
    return out;
  }
  out.model = std::move(fitted);
  out.log_likelihood = ll;
  out.converged = result.status != detail::BfgsStatus::MaxIterations;
  return out;
}

double ar_error_estimate(const ArModel& model, std::size_t s) {
  if (s == 0) throw InvalidInput("averaging length must be positive");
  return exact_sq_averaging_error(yule_walker_truth(model, s - 1), s);
}

}  // namespace avgerr

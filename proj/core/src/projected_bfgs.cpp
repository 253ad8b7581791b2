#include "projected_bfgs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace avgerr::detail {

void FeasibleSet::project(std::vector<double>& x) const {
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
  if (sum_group) {
    const auto [b, e, target] = *sum_group;
    double total = 0.0;
    for (std::size_t i = b; i < e; ++i) total += x[i];
    const double shift = (total - target) / static_cast<double>(e - b);
    for (std::size_t i = b; i < e; ++i) x[i] -= shift;
  }
}

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

Vec to_eigen(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

// x - P(x - g): zero exactly at first-order stationary points of the constrained problem.
double projected_gradient_norm(const std::vector<double>& x, const std::vector<double>& g, const FeasibleSet& set) {
  std::vector<double> trial(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - g[i];
  set.project(trial);
  double norm = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) norm = std::max(norm, std::abs(x[i] - trial[i]));
  return norm;
}

std::vector<bool> binding_set(const std::vector<double>& x, const std::vector<double>& g, const FeasibleSet& set,
                              double eps) {
  std::vector<bool> binding(x.size(), false);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool at_lower = std::isfinite(set.lower[i]) && x[i] <= set.lower[i] + eps && g[i] > 0.0;
    const bool at_upper = std::isfinite(set.upper[i]) && x[i] >= set.upper[i] - eps && g[i] < 0.0;
    binding[i] = at_lower || at_upper;
  }
  return binding;
}

// Orthogonal projector onto directions that keep binding variables fixed and the group sum constant.
void restrict_to_free(Vec& v, const std::vector<bool>& binding, const FeasibleSet& set) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (binding[static_cast<std::size_t>(i)]) v[i] = 0.0;
  }
  if (set.sum_group) {
    const auto& grp = *set.sum_group;
    const auto len = static_cast<Eigen::Index>(grp.end - grp.begin);
    const auto b = static_cast<Eigen::Index>(grp.begin);
    v.segment(b, len).array() -= v.segment(b, len).mean();
  }
}

}  // namespace

BfgsResult minimize_projected_bfgs(const ValueAndGradient& fun, std::vector<double> x0, const FeasibleSet& set,
                                   const BfgsOptions& options) {
  const std::size_t n = x0.size();
  BfgsResult result;
  set.project(x0);
  std::vector<double> x = std::move(x0);
  std::vector<double> g(n, 0.0);
  double f = fun(x, g);
  if (!std::isfinite(f) || !all_finite(g)) {
    result.x = x;
    result.value = f;
    result.status = BfgsStatus::NonFinite;
    return result;
  }

  const auto dim = static_cast<Eigen::Index>(n);
  Mat h_inv = Mat::Identity(dim, dim);
  bool fresh_metric = true;
  std::vector<bool> previous_binding;
  std::size_t small_decrease_streak = 0;

  std::vector<double> trial(n);
  std::vector<double> g_trial(n);

  result.status = BfgsStatus::MaxIterations;
  std::size_t iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    const double pg_norm = projected_gradient_norm(x, g, set);
    if (pg_norm <= options.projected_gradient_tol) {
      result.status = BfgsStatus::Converged;
      break;
    }

    const double eps = std::min(1e-8, pg_norm);
    const auto binding = binding_set(x, g, set, eps);
    if (binding != previous_binding) {
      h_inv.setIdentity();
      fresh_metric = true;
      previous_binding = binding;
    }

    Vec grad = to_eigen(g);
    restrict_to_free(grad, binding, set);
    Vec dir = -(h_inv * grad);
    restrict_to_free(dir, binding, set);
    double slope = to_eigen(g).dot(dir);
    if (!(slope < 0.0)) {
      h_inv.setIdentity();
      fresh_metric = true;
      dir = -grad;
      slope = to_eigen(g).dot(dir);
      if (!(slope < 0.0)) {
        result.status = BfgsStatus::Converged;
        break;
      }
    }

    double step = 1.0;
    if (fresh_metric) {
      const double dmax = dir.cwiseAbs().maxCoeff();
      step = std::min(1.0, 0.1 / std::max(dmax, 1e-300));
    }

    bool accepted = false;
    double f_trial = f;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + step * dir[static_cast<Eigen::Index>(i)];
      set.project(trial);
      double predicted = 0.0;
      for (std::size_t i = 0; i < n; ++i) predicted += g[i] * (trial[i] - x[i]);
      f_trial = fun(trial, g_trial);
      if (std::isfinite(f_trial) && all_finite(g_trial) && f_trial <= f + 1e-4 * std::min(predicted, 0.0) &&
          predicted < 0.0) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }

    if (!accepted) {
      if (!fresh_metric) {
        h_inv.setIdentity();
        fresh_metric = true;
        continue;
      }
      result.status = BfgsStatus::Stalled;
      break;
    }

    Vec s = to_eigen(trial) - to_eigen(x);
    Vec y = to_eigen(g_trial) - to_eigen(g);
    restrict_to_free(y, binding, set);
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      if (fresh_metric) {
        h_inv *= sy / y.squaredNorm();
        fresh_metric = false;
      }
      const double rho = 1.0 / sy;
      const Vec hy = h_inv * y;
      // H+ = (I - rho s y^T) H (I - rho y s^T) + rho s s^T, expanded.
      h_inv += (rho * rho * y.dot(hy) + rho) * (s * s.transpose()) - rho * (hy * s.transpose() + s * hy.transpose());
    }

    const double decrease = f - f_trial;
    x.swap(trial);
    g.swap(g_trial);
    f = f_trial;

    if (decrease <= options.relative_decrease_tol * std::abs(f) + options.absolute_decrease_tol) {
      if (++small_decrease_streak >= 5) {
        result.status = BfgsStatus::Stalled;
        ++iter;
        break;
      }
    } else {
      small_decrease_streak = 0;
    }
  }

  result.x = std::move(x);
  result.value = f;
  result.iterations = iter;
  return result;
}

}  // namespace avgerr::detail

#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace avgerr::detail {

/// Simple bounds plus at most one "sum group" of unbounded variables whose sum is held fixed.
struct FeasibleSet {
  std::vector<double> lower;
  std::vector<double> upper;
  struct SumGroup {
    std::size_t begin = 0;
    std::size_t end = 0;
    double target = 1.0;
  };
  std::optional<SumGroup> sum_group;

  [[nodiscard]] std::size_t size() const noexcept { return lower.size(); }
  void project(std::vector<double>& x) const;
};

struct BfgsOptions {
  std::size_t max_iterations = 500;
  double projected_gradient_tol = 1e-10;
  double relative_decrease_tol = 1e-15;
  double absolute_decrease_tol = 1e-300;
};

enum class BfgsStatus { Converged, Stalled, MaxIterations, NonFinite };

struct BfgsResult {
  std::vector<double> x;
  double value = 0.0;
  std::size_t iterations = 0;
  BfgsStatus status = BfgsStatus::MaxIterations;
};

/// Fills `grad` and returns the objective value at `x`.
using ValueAndGradient = std::function<double(const std::vector<double>& x, std::vector<double>& grad)>;

/// Projected BFGS over a FeasibleSet: binding bounds are frozen each iteration,
/// the inverse-Hessian direction is restricted to the free subspace (zero-sum on
/// the sum group), and an Armijo backtracking search runs along the projection arc.
/// The inverse Hessian is reset whenever the binding set changes.
[[nodiscard]] BfgsResult minimize_projected_bfgs(const ValueAndGradient& fun, std::vector<double> x0,
                                                 const FeasibleSet& set, const BfgsOptions& options);

}  // namespace avgerr::detail

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include <spdlog/spdlog.h>

#include "avgerr/ar.hpp"
#include "avgerr/multiscale.hpp"
#include "avgerr/transient.hpp"
#include "avgerr_cli/cli.hpp"
#include "avgerr_cli/config_file.hpp"
#include "avgerr_cli/output.hpp"
#include "avgerr_cli/series_io.hpp"
#include "commands.hpp"

namespace avgerr::cli {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

json multiscale_section(const UqEstimate& u) {
  return {{"converged", u.converged},
          {"degenerate", u.degenerate},
          {"params", to_json(u.params)},
          {"eps2_n", finite_or_null(u.eps2_n)},
          {"eps_n", finite_or_null(std::sqrt(u.eps2_n))},
          {"q_hat", finite_or_null(u.q_hat)},
          {"equality_residual", finite_or_null(u.equality_residual)},
          {"objective", finite_or_null(u.objective_value)},
          {"n_starts_used", u.n_starts_used},
          {"acf_exceeds_unity", u.acf_exceeds_unity}};
}

// Report for a fit that never met the equality constraint: the best iterate, flagged.
UqEstimate from_failure(const FitFailure& failure, std::size_t n) {
  const FitResult& best = failure.best_iterate();
  UqEstimate u;
  u.n = n;
  u.params = best.params;
  u.objective_value = best.objective_value;
  u.equality_residual = best.equality_residual;
  u.n_starts_used = best.n_starts_used;
  u.converged = false;
  u.acf_exceeds_unity = best.acf_exceeds_unity;
  u.eps2_n = std::numeric_limits<double>::quiet_NaN();
  u.q_hat = std::numeric_limits<double>::quiet_NaN();
  try {
    u.eps2_n = model_sq_error(best.params, n);
    u.q_hat = asymptote(best.params);
  } catch (const InvalidInput&) {
  }
  return u;
}

}  // namespace

int cmd_estimate(const EstimateOptions& opt, const GlobalOptions& global, std::ostream& out) {
  const auto t_start = Clock::now();
  const std::string format = require_format(global, "json");

  FitConfig fit_cfg;
  if (!opt.config_path.empty()) {
    const json cfg = load_config(opt.config_path);
    require_known_keys(cfg, {"m", "n_starts", "tol_eq", "tau_ceiling_delta", "max_outer_iters", "max_inner_iters", "seed"});
    fit_cfg = fit_config_from_config(cfg, fit_cfg);
  }
  if (opt.m) fit_cfg.m = *opt.m;
  if (opt.n_starts) fit_cfg.n_starts = *opt.n_starts;
  if (global.seed) fit_cfg.seed = *global.seed;
  validate(fit_cfg);
  const std::size_t baseline_order = opt.baseline.empty() ? 0 : parse_baseline(opt.baseline);

  const std::string bytes = read_file(opt.input);
  const TimeSeries x = parse_series(bytes, opt.input);

  json transient_section;
  TimeSeries tail = x;
  const auto t_transient = Clock::now();
  if (opt.skip_transient) {
    transient_section = {{"skipped", true}, {"k_hat", nullptr}};
  } else {
    const TransientResult r = detect_transient(x);
    tail = split_at_transient(x, r);
    transient_section = {{"skipped", false}, {"k_hat", r.k_hat}, {"stationary_start_index", r.stationary_start_index}};
    spdlog::info("transient: discarding {} of {} samples", r.k_hat, x.size());
  }
  const double transient_s = seconds_since(t_transient);

  const auto t_fit = Clock::now();
  UqEstimate u;
  bool fit_failed = false;
  try {
    u = estimate(tail, fit_cfg);
  } catch (const FitFailure& failure) {
    spdlog::warn("fit failed: {}", failure.what());
    u = from_failure(failure, tail.size());
    fit_failed = true;
  }
  const double fit_s = seconds_since(t_fit);

  json baseline = nullptr;
  double baseline_s = 0.0;
  if (baseline_order > 0) {
    const auto t_base = Clock::now();
    const ArMleFit mle = fit_ar_mle(tail, baseline_order);
    const double eps2 = ar_error_estimate(mle.model, tail.size());
    baseline = {{"kind", "ar-mle"},
                {"model", to_json(mle.model)},
                {"log_likelihood", finite_or_null(mle.log_likelihood)},
                {"converged", mle.converged},
                {"fell_back_to_yule_walker", mle.fell_back_to_yule_walker},
                {"eps2_n", finite_or_null(eps2)},
                {"eps_n", finite_or_null(std::sqrt(eps2))}};
    baseline_s = seconds_since(t_base);
  }

  if (format == "csv") {
    std::string csv = "n_total,n_used,k_hat,eps2_n,eps_n,q_hat,converged";
    if (baseline_order > 0) csv += ",baseline_eps2_n";
    csv += "\n" + std::to_string(x.size()) + "," + std::to_string(tail.size()) + "," +
           (opt.skip_transient ? std::string() : std::to_string(transient_section["k_hat"].get<std::size_t>())) + "," +
           format_double(u.eps2_n) + "," + format_double(std::sqrt(u.eps2_n)) + "," + format_double(u.q_hat) + "," +
           (u.converged ? "true" : "false");
    if (baseline_order > 0) csv += "," + format_double(baseline["eps2_n"].is_null() ? std::numeric_limits<double>::quiet_NaN() : baseline["eps2_n"].get<double>());
    emit(global.out, csv + "\n", out);
  } else {
    const json report = {
        {"schema_version", kReportSchemaVersion},
        {"command", "estimate"},
        {"input", {{"path", opt.input}, {"sha256", sha256_hex(bytes)}, {"n", x.size()}, {"sampling_interval", x.sampling_interval()}}},
        {"config", to_json(fit_cfg)},
        {"transient", transient_section},
        {"n_used", tail.size()},
        {"multiscale", multiscale_section(u)},
        {"baseline", baseline},
        {"timings", {{"transient_s", transient_s}, {"fit_s", fit_s}, {"baseline_s", baseline_s}, {"total_s", seconds_since(t_start)}}},
    };
    emit(global.out, report.dump(2) + "\n", out);
  }
  return fit_failed ? kExitNumericalFailure : kExitOk;
}

}  // namespace avgerr::cli

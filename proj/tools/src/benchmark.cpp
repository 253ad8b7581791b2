#include <algorithm>
#include <atomic>
#include <exception>
#include <cmath>
#include <filesystem>
#include <limits>
#include <mutex>
#include <thread>

#include <spdlog/spdlog.h>

#include "avgerr/ar.hpp"
#include "avgerr/errors.hpp"
#include "avgerr/multiscale.hpp"
#include "avgerr/rng.hpp"
#include "avgerr_cli/config_file.hpp"
#include "avgerr_cli/output.hpp"
#include "commands.hpp"

namespace avgerr::cli {

namespace {

using nlohmann::json;

struct MemberResult {
  std::uint64_t seed = 0;
  double ms_eps = std::numeric_limits<double>::quiet_NaN();
  double mle_eps = std::numeric_limits<double>::quiet_NaN();
};

struct Summary {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double var = std::numeric_limits<double>::quiet_NaN();
};

Summary summarize(const std::vector<MemberResult>& members, double MemberResult::*field) {
  std::vector<double> v;
  for (const auto& m : members) {
    if (std::isfinite(m.*field)) v.push_back(m.*field);
  }
  Summary s;
  if (v.empty()) return s;
  double sum = 0.0;
  for (const double a : v) sum += a;
  s.mean = sum / static_cast<double>(v.size());
  double ss = 0.0;
  for (const double a : v) ss += (a - s.mean) * (a - s.mean);
  s.var = v.size() > 1 ? ss / static_cast<double>(v.size() - 1) : 0.0;
  return s;
}

template <class Fn>
void parallel_for(std::size_t count, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (error) std::rethrow_exception(error);
}

std::string csv_value(double v) { return std::isfinite(v) ? format_double(v) : std::string(); }

}  // namespace

int cmd_benchmark(const BenchmarkOptions& opt, const GlobalOptions& global, std::ostream& out) {
  if (opt.kind != "ar" && opt.kind != "white") throw InvalidInput("benchmark kind must be ar or white");
  if (opt.ensemble == 0) throw InvalidInput("--ensemble must be positive");

  const json cfg = opt.config_path.empty() ? json::object() : load_config(opt.config_path);
  require_known_keys(cfg, {"order", "coeffs", "noise_variance", "mean", "m", "n_starts", "tol_eq", "tau_ceiling_delta",
                           "max_outer_iters", "max_inner_iters", "seed"});
  const ArModel model = ar_model_from_config(cfg, ar_preset(opt.kind == "white" ? "white" : opt.preset));
  FitConfig fit_cfg = fit_config_from_config(cfg, FitConfig{});
  if (opt.m) fit_cfg.m = *opt.m;
  validate(fit_cfg);
  const std::uint64_t master = global.seed.value_or(cfg.value("seed", std::uint64_t{1}));
  const std::vector<std::size_t> grid = parse_n_grid(opt.n_grid);
  if (!is_stationary(model)) throw InvalidInput("benchmark model is not stationary");

  namespace fs = std::filesystem;
  const fs::path dir(opt.out_dir);
  std::error_code mkdir_error;
  fs::create_directories(dir, mkdir_error);
  if (mkdir_error) throw InvalidInput("cannot create output directory " + dir.string() + ": " + mkdir_error.message());
  const fs::path table_path = dir / ("benchmark_" + opt.kind + ".csv");
  const fs::path members_path = dir / ("benchmark_" + opt.kind + "_members.csv");

  const json resolved = {{"schema_version", kReportSchemaVersion},
                         {"command", "benchmark"},
                         {"kind", opt.kind},
                         {"preset", opt.kind == "white" ? "white" : opt.preset},
                         {"model", to_json(model)},
                         {"fit", to_json(fit_cfg)},
                         {"n_grid", grid},
                         {"ensemble", opt.ensemble},
                         {"baseline_order", opt.baseline_order},
                         {"seed", master},
                         {"columns_are", "averaging error eps_N (square root of the squared error)"}};
  write_file_atomic(dir / ("benchmark_" + opt.kind + ".config.json"), resolved.dump(2) + "\n");

  std::string table = "N,truth,ms_mean,ms_var,mle_mean,mle_var\n";
  std::string members_csv = "N,member,seed,ms_eps,mle_eps\n";
  for (const std::size_t n : grid) {
    const double truth = std::sqrt(ar_error_estimate(model, n));
    std::vector<MemberResult> members(opt.ensemble);
    const std::uint64_t n_seed = derive_seed(master, n);

    parallel_for(opt.ensemble, global.jobs, [&](std::size_t e) {
      MemberResult& r = members[e];
      r.seed = derive_seed(n_seed, e);
      const TimeSeries x = simulate_ar_stationary(model, n, r.seed);
      try {
        r.ms_eps = std::sqrt(estimate(x, fit_cfg).eps2_n);
      } catch (const NumericalFailure& failure) {
        spdlog::warn("N={} member {}: multiscale fit failed: {}", n, e, failure.what());
      }
      if (opt.baseline_order > 0 && n > 10 * opt.baseline_order) {
        r.mle_eps = std::sqrt(ar_error_estimate(fit_ar_mle(x, opt.baseline_order).model, n));
      }
    });

    const Summary ms = summarize(members, &MemberResult::ms_eps);
    const Summary mle = summarize(members, &MemberResult::mle_eps);
    table += std::to_string(n) + "," + csv_value(truth) + "," + csv_value(ms.mean) + "," + csv_value(ms.var) + "," +
             csv_value(mle.mean) + "," + csv_value(mle.var) + "\n";
    for (std::size_t e = 0; e < members.size(); ++e) {
      members_csv += std::to_string(n) + "," + std::to_string(e) + "," + std::to_string(members[e].seed) + "," +
                     csv_value(members[e].ms_eps) + "," + csv_value(members[e].mle_eps) + "\n";
    }
    // Rewrite both tables after every N so an interrupted run keeps what it finished.
    write_file_atomic(table_path, table);
    write_file_atomic(members_path, members_csv);
    spdlog::info("benchmark N={} done", n);
  }
  out << table;
  out.flush();
  return 0;
}

}  // namespace avgerr::cli

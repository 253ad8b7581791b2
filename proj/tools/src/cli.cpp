#include "avgerr_cli/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "avgerr/errors.hpp"
#include "commands.hpp"

namespace avgerr::cli {

namespace {

void install_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  auto logger = std::make_shared<spdlog::logger>("avgerr", sink);
  logger->set_pattern("avgerr: %l: %v");
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("AVGERR_LOG"); env != nullptr && *env != '\0') {
    level = spdlog::level::from_str(env);
  }
  logger->set_level(level);
  spdlog::set_default_logger(std::move(logger));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  install_logger(err);

  CLI::App app{"Averaging-error estimation for stationary time series", "avgerr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "avgerr 0.1.0");

  GlobalOptions global;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Master RNG seed");
  app.add_option("--jobs", global.jobs, "Worker threads for ensemble runs")->check(CLI::PositiveNumber);
  app.add_option("--out", global.out, "Output path (stdout when omitted)");
  app.add_option("--format", global.format, "Report format")->check(CLI::IsMember({"csv", "json"}));

  GenerateOptions gen;
  auto* generate = app.add_subcommand("generate", "Simulate a synthetic series");
  generate->fallthrough();
  generate->add_option("kind", gen.kind, "ar or ks")->required()->check(CLI::IsMember({"ar", "ks"}));
  generate->add_option("--preset", gen.preset, "AR preset: paper-ar6 or white");
  generate->add_option("--config", gen.config_path, "Config file (JSON or key=value)");
  generate->add_option("--n", gen.n, "AR series length");
  generate->add_option("--init", gen.init, "AR initial history value (stationary start when omitted)");
  generate->add_option("--steps", gen.steps, "KS time steps");
  generate->add_option("--stride", gen.stride, "KS steps per recorded sample");
  generate->add_option("--modes", gen.modes, "KS grid points");
  generate->add_option("--length", gen.length, "KS domain length");
  generate->add_option("--dt", gen.dt, "KS time step");

  DetectTransientOptions det;
  auto* detect = app.add_subcommand("detect-transient", "Locate the end of the initial transient");
  detect->fallthrough();
  detect->add_option("input", det.input, "Series file")->required();
  detect->add_option("--curve-out", det.curve_out, "Write the objective curve as CSV");

  EstimateOptions est;
  auto* estimate = app.add_subcommand("estimate", "Estimate the squared averaging error of a series");
  estimate->fallthrough();
  estimate->add_option("input", est.input, "Series file")->required();
  estimate->add_option("--config", est.config_path, "Fit config file");
  estimate->add_option("--m", est.m, "Number of exponential modes");
  estimate->add_option("--n-starts", est.n_starts, "Multistart count");
  estimate->add_flag("--skip-transient", est.skip_transient, "Use the whole series");
  estimate->add_option("--baseline", est.baseline, "Baseline model, e.g. ar:3");

  BenchmarkOptions bench;
  auto* benchmark = app.add_subcommand("benchmark", "Ensemble study against the exact truth curve");
  benchmark->fallthrough();
  benchmark->add_option("kind", bench.kind, "ar or white")->required()->check(CLI::IsMember({"ar", "white"}));
  benchmark->add_option("--preset", bench.preset, "AR preset");
  benchmark->add_option("--config", bench.config_path, "Model and fit config file");
  benchmark->add_option("--n-grid", bench.n_grid, "a..b (doubling) or a comma list");
  benchmark->add_option("--ensemble", bench.ensemble, "Members per N");
  benchmark->add_option("--out-dir", bench.out_dir, "Directory for the CSV tables");
  benchmark->add_option("--m", bench.m, "Number of exponential modes");
  benchmark->add_option("--baseline-order", bench.baseline_order, "MLE-AR baseline order, 0 to disable");

  TruthOptions tru;
  auto* truth = app.add_subcommand("truth", "Exact or long-run averaging error curve");
  truth->fallthrough();
  truth->add_option("kind", tru.kind, "ar, white or ks")->required()->check(CLI::IsMember({"ar", "white", "ks"}));
  truth->add_option("--preset", tru.preset, "AR preset");
  truth->add_option("--config", tru.config_path, "Model config file");
  truth->add_option("--n-grid", tru.n_grid, "a..b (doubling) or a comma list");
  truth->add_option("--multiplier", tru.multiplier, "KS run length as a multiple of the largest s");
  truth->add_option("--transient-window", tru.transient_window, "KS samples scanned for the transient");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalidInput;
  }
  if (*seed_opt) global.seed = seed;

  try {
    if (*generate) return cmd_generate(gen, global, out);
    if (*detect) return cmd_detect_transient(det, global, out);
    if (*estimate) return cmd_estimate(est, global, out);
    if (*benchmark) return cmd_benchmark(bench, global, out);
    if (*truth) return cmd_truth(tru, global, out);
  } catch (const InvalidInput& e) {
    spdlog::error("{}", e.what());
    return kExitInvalidInput;
  } catch (const nlohmann::json::exception& e) {
    spdlog::error("bad config: {}", e.what());
    return kExitInvalidInput;
  } catch (const NumericalFailure& e) {
    spdlog::error("{}", e.what());
    return kExitNumericalFailure;
  } catch (const std::exception& e) {
    spdlog::critical("{}", e.what());
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace avgerr::cli

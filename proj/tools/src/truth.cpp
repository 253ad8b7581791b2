#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "avgerr/ar.hpp"
#include "avgerr/errors.hpp"
#include "avgerr/ks.hpp"
#include "avgerr/transient.hpp"
#include "avgerr_cli/config_file.hpp"
#include "avgerr_cli/output.hpp"
#include "commands.hpp"

namespace avgerr::cli {

namespace {

using nlohmann::json;

struct TruthCurve {
  ExactStatistics stats;
  json header;
};

TruthCurve ar_truth(const TruthOptions& opt, const json& cfg, const std::string& preset, std::size_t s_max) {
  require_known_keys(cfg, {"order", "coeffs", "noise_variance", "mean"});
  const ArModel model = ar_model_from_config(cfg, ar_preset(preset));
  TruthCurve t;
  t.stats = yule_walker_truth(model, std::max<std::size_t>(s_max, 1));
  t.header = {{"kind", opt.kind}, {"preset", preset}, {"model", to_json(model)}};
  return t;
}

// Truth from one long run: the detected transient is removed and the empirical
// autocorrelation of the remainder stands in for the exact one.
TruthCurve ks_truth(const TruthOptions& opt, const GlobalOptions& global, const json& cfg, std::size_t s_max) {
  require_known_keys(cfg, {"domain_length", "n_modes", "dt", "seed", "sample_stride", "noise_amplitude"});
  if (opt.multiplier == 0) throw InvalidInput("--multiplier must be positive");
  KsConfig ks = ks_config_from_config(cfg, KsConfig{});
  if (global.seed) ks.seed = *global.seed;
  ks.n_steps = (opt.transient_window + opt.multiplier * s_max) * ks.sample_stride;
  spdlog::info("KS truth run: {} steps", ks.n_steps);
  const TimeSeries e = ks_run(ks);

  const TransientResult r = detect_transient(e.head(std::min(e.size(), opt.transient_window + 1)));
  const TimeSeries tail = e.tail(r.k_hat);
  TruthCurve t;
  t.stats = empirical_autocorrelation(tail, std::max<std::size_t>(s_max, 2) - 1);
  t.header = {{"kind", "ks"},
              {"config", to_json(ks)},
              {"multiplier", opt.multiplier},
              {"transient_k_hat", r.k_hat},
              {"samples_used", tail.size()}};
  return t;
}

}  // namespace

int cmd_truth(const TruthOptions& opt, const GlobalOptions& global, std::ostream& out) {
  const std::string format = require_format(global, "csv");
  const json cfg = opt.config_path.empty() ? json::object() : load_config(opt.config_path);
  const std::vector<std::size_t> grid =
      parse_n_grid(opt.n_grid.empty() ? (opt.kind == "ks" ? "1..8192" : "1..16384") : opt.n_grid);
  const std::size_t s_max = *std::max_element(grid.begin(), grid.end());

  TruthCurve t;
  if (opt.kind == "ar") {
    t = ar_truth(opt, cfg, opt.preset, s_max);
  } else if (opt.kind == "white") {
    t = ar_truth(opt, cfg, "white", s_max);
  } else if (opt.kind == "ks") {
    t = ks_truth(opt, global, cfg, s_max);
  } else {
    throw InvalidInput("truth kind must be ar, white or ks");
  }
  t.header["sigma"] = std::sqrt(t.stats.sigma2);
  t.header["mu"] = t.stats.mu;

  std::vector<double> eps2(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) eps2[i] = exact_sq_averaging_error(t.stats, grid[i]);

  if (format == "json") {
    json rows = json::array();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      rows.push_back({{"s", grid[i]}, {"eps2", finite_or_null(eps2[i])}, {"eps", finite_or_null(std::sqrt(eps2[i]))}});
    }
    json doc = {{"schema_version", kReportSchemaVersion}, {"command", "truth"}, {"header", t.header}, {"rows", rows}};
    emit(global.out, doc.dump(2) + "\n", out);
    return 0;
  }

  std::string csv;
  for (const auto& [key, value] : t.header.items()) {
    csv += "# " + key + "=" + (value.is_string() ? value.get<std::string>() : value.dump()) + "\n";
  }
  csv += "s,eps2,eps\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    csv += std::to_string(grid[i]) + "," + format_double(eps2[i]) + "," + format_double(std::sqrt(eps2[i])) + "\n";
  }
  emit(global.out, csv, out);
  return 0;
}

}  // namespace avgerr::cli

#include <string>

#include "avgerr/transient.hpp"
#include "avgerr_cli/output.hpp"
#include "avgerr_cli/series_io.hpp"
#include "commands.hpp"

namespace avgerr::cli {

int cmd_detect_transient(const DetectTransientOptions& opt, const GlobalOptions& global, std::ostream& out) {
  const std::string format = require_format(global, "json");
  const std::string bytes = read_file(opt.input);
  const TimeSeries x = parse_series(bytes, opt.input);
  const TransientResult r = detect_transient(x);

  if (!opt.curve_out.empty()) {
    std::string csv = "k,objective\n";
    for (std::size_t k = 1; k <= r.objective_curve.size(); ++k) {
      csv += std::to_string(k) + "," + format_double(r.objective_curve[k - 1]) + "\n";
    }
    write_file_atomic(opt.curve_out, csv);
  }

  if (format == "csv") {
    emit(global.out,
         "k_hat,stationary_start_index,n,n_remaining\n" + std::to_string(r.k_hat) + "," +
             std::to_string(r.stationary_start_index) + "," + std::to_string(x.size()) + "," +
             std::to_string(x.size() - r.k_hat) + "\n",
         out);
    return 0;
  }
  const nlohmann::json report = {
      {"schema_version", kReportSchemaVersion},
      {"command", "detect-transient"},
      {"input", {{"path", opt.input}, {"sha256", sha256_hex(bytes)}, {"n", x.size()}}},
      {"k_hat", r.k_hat},
      {"stationary_start_index", r.stationary_start_index},
      {"n_remaining", x.size() - r.k_hat},
      {"degenerate_tail", r.degenerate_tail},
  };
  emit(global.out, report.dump(2) + "\n", out);
  return 0;
}

}  // namespace avgerr::cli

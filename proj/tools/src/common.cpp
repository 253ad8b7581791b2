#include <charconv>
#include <cmath>
#include <limits>

#include "avgerr/errors.hpp"
#include "avgerr_cli/output.hpp"
#include "commands.hpp"

namespace avgerr::cli {

namespace {

std::size_t parse_size(std::string_view text, const std::string& what) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size() || v == 0) {
    throw InvalidInput(what + ": expected a positive integer, got '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

std::vector<std::size_t> parse_n_grid(const std::string& text) {
  std::vector<std::size_t> grid;
  if (const auto dots = text.find(".."); dots != std::string::npos) {
    const std::size_t lo = parse_size(std::string_view(text).substr(0, dots), "n-grid");
    const std::size_t hi = parse_size(std::string_view(text).substr(dots + 2), "n-grid");
    if (lo > hi) throw InvalidInput("n-grid: lower end exceeds upper end");
    for (std::size_t n = lo; n <= hi; n *= 2) {
      grid.push_back(n);
      if (n > std::numeric_limits<std::size_t>::max() / 2) break;
    }
    return grid;
  }
  std::string_view rest = text;
  while (true) {
    const auto comma = rest.find(',');
    grid.push_back(parse_size(rest.substr(0, comma), "n-grid"));
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return grid;
}

ArModel ar_preset(const std::string& name) {
  if (name == "paper-ar6") return paper_ar6();
  if (name == "white") {
    ArModel white;
    white.noise_variance = 1.0;
    return white;
  }
  throw InvalidInput("unknown AR preset '" + name + "' (expected paper-ar6 or white)");
}

std::size_t parse_baseline(const std::string& spec) {
  if (spec.rfind("ar:", 0) != 0) throw InvalidInput("baseline must look like ar:<order>, got '" + spec + "'");
  return parse_size(std::string_view(spec).substr(3), "baseline order");
}

nlohmann::json finite_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) {
    out << content;
    out.flush();
  } else {
    write_file_atomic(path, content);
  }
}

std::string require_format(const GlobalOptions& global, const std::string& fallback) {
  const std::string f = global.format.empty() ? fallback : global.format;
  if (f != "json" && f != "csv") throw InvalidInput("--format must be csv or json");
  return f;
}

}  // namespace avgerr::cli

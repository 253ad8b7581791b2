#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "avgerr/ar.hpp"
#include "avgerr/series.hpp"

namespace avgerr::cli {

inline constexpr int kReportSchemaVersion = 1;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string out;
  std::string format;  // empty means the command's default
};

struct GenerateOptions {
  std::string kind;
  std::string preset = "paper-ar6";
  std::string config_path;
  std::optional<std::size_t> n;
  std::optional<double> init;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> stride;
  std::optional<std::size_t> modes;
  std::optional<double> length;
  std::optional<double> dt;
};

struct DetectTransientOptions {
  std::string input;
  std::string curve_out;
};

struct EstimateOptions {
  std::string input;
  std::string config_path;
  std::optional<std::size_t> m;
  std::optional<std::size_t> n_starts;
  bool skip_transient = false;
  std::string baseline;
};

struct BenchmarkOptions {
  std::string kind;
  std::string preset = "paper-ar6";
  std::string config_path;
  std::string n_grid = "128..16384";
  std::size_t ensemble = 30;
  std::string out_dir = ".";
  std::optional<std::size_t> m;
  std::size_t baseline_order = 3;
};

struct TruthOptions {
  std::string kind;
  std::string preset = "paper-ar6";
  std::string config_path;
  std::string n_grid;
  std::size_t multiplier = 100;
  std::size_t transient_window = 20000;
};

int cmd_generate(const GenerateOptions& opt, const GlobalOptions& global, std::ostream& out);
int cmd_detect_transient(const DetectTransientOptions& opt, const GlobalOptions& global, std::ostream& out);
int cmd_estimate(const EstimateOptions& opt, const GlobalOptions& global, std::ostream& out);
int cmd_benchmark(const BenchmarkOptions& opt, const GlobalOptions& global, std::ostream& out);
int cmd_truth(const TruthOptions& opt, const GlobalOptions& global, std::ostream& out);

// Shared helpers.

/// "a..b" doubles from a to b; otherwise a comma-separated list. Values must be positive.
[[nodiscard]] std::vector<std::size_t> parse_n_grid(const std::string& text);

/// Preset AR models: "paper-ar6" and "white" (unit-variance i.i.d.).
[[nodiscard]] ArModel ar_preset(const std::string& name);

/// Parses "ar:<p>".
[[nodiscard]] std::size_t parse_baseline(const std::string& spec);

/// Finite doubles as numbers, anything else as null.
[[nodiscard]] nlohmann::json finite_or_null(double v);

/// Writes `content` atomically to `path`, or to `out` when `path` is empty.
void emit(const std::string& path, const std::string& content, std::ostream& out);

[[nodiscard]] std::string require_format(const GlobalOptions& global, const std::string& fallback);

}  // namespace avgerr::cli

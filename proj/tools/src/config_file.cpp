#include "avgerr_cli/config_file.hpp"

#include <charconv>
#include <cstdint>
#include <limits>
#include <string>

#include "avgerr/errors.hpp"
#include "avgerr_cli/output.hpp"

namespace avgerr::cli {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

json scalar_value(std::string_view text) {
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  std::int64_t i = 0;
  if (auto [p, ec] = std::from_chars(begin, end, i); ec == std::errc{} && p == end) return i;
  std::uint64_t u = 0;
  if (auto [p, ec] = std::from_chars(begin, end, u); ec == std::errc{} && p == end) return u;
  double d = 0.0;
  if (auto [p, ec] = std::from_chars(begin, end, d); ec == std::errc{} && p == end) return d;
  if (text == "true") return true;
  if (text == "false") return false;
  return std::string(text);
}

json key_value_document(std::string_view text) {
  json doc = json::object();
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidInput("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key(trim(line.substr(0, eq)));
    std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw InvalidInput("config line " + std::to_string(line_no) + ": empty key");
    if (value.find(',') != std::string_view::npos) {
      json arr = json::array();
      while (true) {
        const auto comma = value.find(',');
        arr.push_back(scalar_value(trim(value.substr(0, comma))));
        if (comma == std::string_view::npos) break;
        value = value.substr(comma + 1);
      }
      doc[key] = std::move(arr);
    } else {
      doc[key] = scalar_value(value);
    }
  }
  return doc;
}

double get_double(const json& cfg, const char* key, double fallback) {
  if (!cfg.contains(key)) return fallback;
  const json& v = cfg.at(key);
  if (!v.is_number()) throw InvalidInput(std::string("config key '") + key + "' must be a number");
  return v.get<double>();
}

std::uint64_t get_unsigned(const json& cfg, const char* key, std::uint64_t fallback) {
  if (!cfg.contains(key)) return fallback;
  const json& v = cfg.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw InvalidInput(std::string("config key '") + key + "' must be a non-negative integer");
}

std::size_t get_size(const json& cfg, const char* key, std::size_t fallback) {
  const std::uint64_t v = get_unsigned(cfg, key, fallback);
  if (v > std::numeric_limits<std::size_t>::max()) throw InvalidInput(std::string("config key '") + key + "' too large");
  return static_cast<std::size_t>(v);
}

}  // namespace

json parse_config(std::string_view text) {
  const std::string_view body = trim(text);
  if (!body.empty() && body.front() == '{') {
    try {
      json doc = json::parse(body);
      if (!doc.is_object()) throw InvalidInput("config document must be a JSON object");
      return doc;
    } catch (const json::exception& e) {
      throw InvalidInput(std::string("malformed JSON config: ") + e.what());
    }
  }
  return key_value_document(text);
}

json load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

void require_known_keys(const json& cfg, std::initializer_list<std::string_view> known) {
  for (const auto& [key, value] : cfg.items()) {
    bool found = false;
    for (const auto k : known) found = found || key == k;
    if (!found) throw InvalidInput("unknown config key '" + key + "'");
  }
}

ArModel ar_model_from_config(const json& cfg, ArModel base) {
  if (cfg.contains("coeffs")) {
    const json& c = cfg.at("coeffs");
    base.coeffs.clear();
    if (c.is_number()) {
      base.coeffs.push_back(c.get<double>());
    } else if (c.is_array()) {
      for (const auto& v : c) {
        if (!v.is_number()) throw InvalidInput("AR coefficients must be numbers");
        base.coeffs.push_back(v.get<double>());
      }
    } else {
      throw InvalidInput("AR coefficients must be a number or a list of numbers");
    }
  }
  if (cfg.contains("order") && get_size(cfg, "order", 0) != base.coeffs.size()) {
    throw InvalidInput("AR order " + std::to_string(get_size(cfg, "order", 0)) + " does not match " +
                       std::to_string(base.coeffs.size()) + " coefficients");
  }
  base.noise_variance = get_double(cfg, "noise_variance", base.noise_variance);
  base.mean = get_double(cfg, "mean", base.mean);
  if (!(base.noise_variance > 0.0)) throw InvalidInput("noise_variance must be positive");
  return base;
}

KsConfig ks_config_from_config(const json& cfg, KsConfig base) {
  base.domain_length = get_double(cfg, "domain_length", base.domain_length);
  base.n_modes = get_size(cfg, "n_modes", base.n_modes);
  base.dt = get_double(cfg, "dt", base.dt);
  base.n_steps = get_size(cfg, "n_steps", base.n_steps);
  base.seed = get_unsigned(cfg, "seed", base.seed);
  base.sample_stride = get_size(cfg, "sample_stride", base.sample_stride);
  base.noise_amplitude = get_double(cfg, "noise_amplitude", base.noise_amplitude);
  validate(base);
  return base;
}

FitConfig fit_config_from_config(const json& cfg, FitConfig base) {
  base.m = get_size(cfg, "m", base.m);
  base.n_starts = get_size(cfg, "n_starts", base.n_starts);
  base.tol_eq = get_double(cfg, "tol_eq", base.tol_eq);
  base.tau_ceiling_delta = get_double(cfg, "tau_ceiling_delta", base.tau_ceiling_delta);
  base.max_outer_iters = get_size(cfg, "max_outer_iters", base.max_outer_iters);
  base.max_inner_iters = get_size(cfg, "max_inner_iters", base.max_inner_iters);
  base.seed = get_unsigned(cfg, "seed", base.seed);
  validate(base);
  return base;
}

json to_json(const ArModel& model) {
  return {{"order", model.order()},
          {"coeffs", model.coeffs},
          {"noise_variance", model.noise_variance},
          {"mean", model.mean}};
}

json to_json(const KsConfig& cfg) {
  return {{"domain_length", cfg.domain_length}, {"n_modes", cfg.n_modes},
          {"dt", cfg.dt},                       {"n_steps", cfg.n_steps},
          {"seed", cfg.seed},                   {"sample_stride", cfg.sample_stride},
          {"noise_amplitude", cfg.noise_amplitude}};
}

json to_json(const FitConfig& cfg) {
  return {{"m", cfg.m},
          {"n_starts", cfg.n_starts},
          {"tol_eq", cfg.tol_eq},
          {"tau_ceiling_delta", cfg.tau_ceiling_delta},
          {"max_outer_iters", cfg.max_outer_iters},
          {"max_inner_iters", cfg.max_inner_iters},
          {"seed", cfg.seed}};
}

json to_json(const AcfModelParams& p) {
  return {{"m", p.modes()}, {"amplitudes", p.amplitudes}, {"rates", p.rates}, {"sigma_hat", p.sigma_hat}, {"mu_hat", p.mu_hat}};
}

}  // namespace avgerr::cli

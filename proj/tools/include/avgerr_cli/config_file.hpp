#pragma once

#include <filesystem>
#include <initializer_list>
#include <string_view>

#include <json.hpp>

#include "avgerr/ar.hpp"
#include "avgerr/ks.hpp"
#include "avgerr/multiscale.hpp"

namespace avgerr::cli {

/// A JSON object, or `key = value` lines with `#` comments. In the key-value form,
/// values that parse as numbers become numbers, and comma-separated values become
/// arrays.
[[nodiscard]] nlohmann::json parse_config(std::string_view text);
[[nodiscard]] nlohmann::json load_config(const std::filesystem::path& path);

/// Throws InvalidInput naming the first key of `cfg` not in `known`, so that typos do
/// not silently fall back to defaults.
void require_known_keys(const nlohmann::json& cfg, std::initializer_list<std::string_view> known);

/// Each applies the keys it recognises on top of `base` and ignores the rest.
[[nodiscard]] ArModel ar_model_from_config(const nlohmann::json& cfg, ArModel base);
[[nodiscard]] KsConfig ks_config_from_config(const nlohmann::json& cfg, KsConfig base);
[[nodiscard]] FitConfig fit_config_from_config(const nlohmann::json& cfg, FitConfig base);

[[nodiscard]] nlohmann::json to_json(const ArModel& model);
[[nodiscard]] nlohmann::json to_json(const KsConfig& cfg);
[[nodiscard]] nlohmann::json to_json(const FitConfig& cfg);
[[nodiscard]] nlohmann::json to_json(const AcfModelParams& p);

}  // namespace avgerr::cli

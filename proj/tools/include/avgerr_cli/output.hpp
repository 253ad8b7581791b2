#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace avgerr::cli {

/// Writes to a sibling temporary file and renames it over `path`, so readers never
/// observe a partial file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

[[nodiscard]] std::string read_file(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
[[nodiscard]] std::string format_double(double v);

/// Lowercase hex SHA-256.
[[nodiscard]] std::string sha256_hex(std::string_view bytes);

}  // namespace avgerr::cli

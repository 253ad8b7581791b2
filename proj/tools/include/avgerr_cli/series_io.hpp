#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "avgerr/series.hpp"

namespace avgerr::cli {

enum class SeriesFormat { Csv, Binary };

/// Binary files start with these 8 bytes, then the sampling interval and the
/// samples, all little-endian float64.
inline constexpr std::string_view kBinaryMagic{"AVGERR\x01\x00", 8};

/// `.bin` selects the binary layout; anything else is CSV.
[[nodiscard]] SeriesFormat format_for_path(const std::filesystem::path& path);

/// CSV: optional `# dt=<value>` and `# label=<text>` lines, then one sample per line.
/// Values are written in shortest round-trip form, so reading back is exact.
[[nodiscard]] std::string format_series_csv(const TimeSeries& x);
[[nodiscard]] std::string format_series_binary(const TimeSeries& x);

[[nodiscard]] TimeSeries parse_series(std::string_view content, const std::string& source_name);

/// Reads either layout, sniffing the magic bytes. Throws InvalidInput on malformed
/// or non-finite data.
[[nodiscard]] TimeSeries read_series(const std::filesystem::path& path);

void write_series(const std::filesystem::path& path, const TimeSeries& x);

}  // namespace avgerr::cli

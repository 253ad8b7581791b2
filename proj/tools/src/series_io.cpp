#include "avgerr_cli/series_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>

#include "avgerr/errors.hpp"
#include "avgerr_cli/output.hpp"

namespace avgerr::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view text, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw InvalidInput(where + ": not a number: '" + std::string(text) + "'");
  }
  if (!std::isfinite(v)) throw InvalidInput(where + ": non-finite value");
  return v;
}

std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xFFu) << (8 * (7 - i));
    return r;
  }
  return v;
}

void append_le_double(std::string& out, double v) {
  const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
  char bytes[8];
  std::memcpy(bytes, &bits, 8);
  out.append(bytes, 8);
}

double read_le_double(const char* p) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, p, 8);
  return std::bit_cast<double>(to_little_endian(bits));
}

TimeSeries parse_binary(std::string_view content, const std::string& source) {
  constexpr std::size_t header = 16;
  if (content.size() < header || (content.size() - header) % 8 != 0) {
    throw InvalidInput(source + ": truncated binary series");
  }
  const double dt = read_le_double(content.data() + kBinaryMagic.size());
  std::vector<double> samples((content.size() - header) / 8);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i] = read_le_double(content.data() + header + 8 * i);
    if (!std::isfinite(samples[i])) throw InvalidInput(source + ": non-finite sample at index " + std::to_string(i));
  }
  return TimeSeries(std::move(samples), dt);
}

TimeSeries parse_csv(std::string_view content, const std::string& source) {
  double dt = 1.0;
  std::string label;
  std::vector<double> samples;
  std::size_t line_no = 0;
  while (!content.empty()) {
    const auto eol = content.find('\n');
    const std::string_view raw = content.substr(0, eol);
    content = eol == std::string_view::npos ? std::string_view{} : content.substr(eol + 1);
    ++line_no;

    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (line.front() == '#') {
      const std::string_view body = trim(line.substr(1));
      if (body.rfind("dt=", 0) == 0) {
        dt = parse_double(trim(body.substr(3)), where);
      } else if (body.rfind("label=", 0) == 0) {
        label = std::string(body.substr(6));
      }
      continue;
    }
    samples.push_back(parse_double(line, where));
  }
  return TimeSeries(std::move(samples), dt, std::move(label));
}

}  // namespace

SeriesFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".bin" ? SeriesFormat::Binary : SeriesFormat::Csv;
}

std::string format_series_csv(const TimeSeries& x) {
  std::string label = x.label();
  for (char& c : label) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::string out = "# dt=" + format_double(x.sampling_interval()) + "\n# label=" + label + "\n";
  out.reserve(out.size() + 24 * x.size());
  for (const double v : x.samples()) {
    out += format_double(v);
    out.push_back('\n');
  }
  return out;
}

std::string format_series_binary(const TimeSeries& x) {
  std::string out(kBinaryMagic);
  out.reserve(16 + 8 * x.size());
  append_le_double(out, x.sampling_interval());
  for (const double v : x.samples()) append_le_double(out, v);
  return out;
}

TimeSeries parse_series(std::string_view content, const std::string& source_name) {
  TimeSeries x = content.substr(0, kBinaryMagic.size()) == kBinaryMagic ? parse_binary(content, source_name)
                                                                         : parse_csv(content, source_name);
  if (x.empty()) throw InvalidInput(source_name + ": series has no samples");
  return x;
}

TimeSeries read_series(const std::filesystem::path& path) { return parse_series(read_file(path), path.string()); }

void write_series(const std::filesystem::path& path, const TimeSeries& x) {
  write_file_atomic(path, format_for_path(path) == SeriesFormat::Binary ? format_series_binary(x) : format_series_csv(x));
}

}  // namespace avgerr::cli

#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "avgerr_cli/cli.hpp"

using nlohmann::json;

namespace {

double eps_at_8192(int multiplier) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = avgerr::cli::run(
      {"--format", "json", "truth", "ks", "--n-grid", "8192", "--multiplier", std::to_string(multiplier)}, out, err);
  REQUIRE(code == 0);
  return json::parse(out.str())["rows"][0]["eps"].get<double>();
}

}  // namespace

TEST_CASE("KS truth from a long run is stable under doubling its length") {
  const double base = eps_at_8192(100);
  const double doubled = eps_at_8192(200);
  MESSAGE("eps_8192: 100x run " << base << ", 200x run " << doubled);
  CHECK(std::abs(doubled / base - 1.0) < 0.10);
}

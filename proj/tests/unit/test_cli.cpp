#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "avgerr/ar.hpp"
#include "avgerr/errors.hpp"
#include "avgerr_cli/cli.hpp"
#include "avgerr_cli/config_file.hpp"
#include "avgerr_cli/output.hpp"
#include "avgerr_cli/series_io.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace avgerr;
using nlohmann::json;
using testing_support::TempDir;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome run_cli(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  Outcome o;
  o.code = cli::run(args, out, err);
  o.out = out.str();
  o.err = err.str();
  return o;
}

void write_values(const std::string& path, const std::vector<double>& v) {
  cli::write_series(path, TimeSeries(v));
}

}  // namespace

TEST_CASE("series files round-trip exactly") {
  TempDir dir;
  std::vector<double> v = oracle::random_series(500, 3, 1e3);
  v.push_back(std::numeric_limits<double>::denorm_min());
  v.push_back(std::numeric_limits<double>::max());
  v.push_back(-std::numeric_limits<double>::min());
  v.push_back(-0.0);
  v.push_back(0.1);
  v.push_back(1.0 / 3.0);
  const TimeSeries x(v, 0.37, "round\ntrip");
  for (const std::string name : {"a.csv", "a.bin", "a.txt"}) {
    cli::write_series(dir.file(name), x);
    const TimeSeries y = cli::read_series(dir.file(name));
    REQUIRE(y.size() == x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      REQUIRE(std::bit_cast<std::uint64_t>(y[i]) == std::bit_cast<std::uint64_t>(x[i]));
    }
    CHECK(y.sampling_interval() == 0.37);
  }
  CHECK(cli::format_for_path("x.bin") == cli::SeriesFormat::Binary);
  CHECK(cli::format_for_path("x.csv") == cli::SeriesFormat::Csv);
  const std::string bin = cli::format_series_binary(x);
  CHECK(bin.size() == 16 + 8 * x.size());
  CHECK(bin.substr(0, 8) == cli::kBinaryMagic);
}

TEST_CASE("malformed series are rejected") {
  CHECK_THROWS_AS((void)cli::parse_series("1\nabc\n", "t"), InvalidInput);
  CHECK_THROWS_AS((void)cli::parse_series("1\nnan\n", "t"), InvalidInput);
  CHECK_THROWS_AS((void)cli::parse_series("1\ninf\n", "t"), InvalidInput);
  CHECK_THROWS_AS((void)cli::parse_series("# dt=1\n", "t"), InvalidInput);
  CHECK_THROWS_AS((void)cli::parse_series(std::string(cli::kBinaryMagic) + "abc", "t"), InvalidInput);
  const auto x = cli::parse_series("# dt=0.5\n# label=hello\n1\n2.5\n\n-3e2\n", "t");
  CHECK(x.size() == 3);
  CHECK(x.sampling_interval() == 0.5);
  CHECK(x.label() == "hello");
  CHECK(x[2] == -300.0);
}

TEST_CASE("config documents") {
  const json kv = cli::parse_config("# comment\norder = 2\ncoeffs = 0.5, -0.2\nnoise_variance=0.3\nlabel = abc\nflag = true\n");
  CHECK(kv["order"] == 2);
  CHECK(kv["coeffs"].is_array());
  CHECK(kv["coeffs"][1].get<double>() == -0.2);
  CHECK(kv["noise_variance"].get<double>() == 0.3);
  CHECK(kv["label"] == "abc");
  CHECK(kv["flag"] == true);
  const ArModel m = cli::ar_model_from_config(kv, paper_ar6());
  CHECK(m.coeffs == std::vector<double>{0.5, -0.2});
  CHECK(m.noise_variance == 0.3);

  const json js = cli::parse_config(R"({"m": 2, "n_starts": 4, "tol_eq": 1e-9})");
  const FitConfig f = cli::fit_config_from_config(js, FitConfig{});
  CHECK(f.m == 2);
  CHECK(f.n_starts == 4);
  CHECK(f.tol_eq == 1e-9);

  CHECK_THROWS_AS(cli::require_known_keys(js, {"m", "n_starts"}), InvalidInput);
  CHECK_NOTHROW(cli::require_known_keys(js, {"m", "n_starts", "tol_eq"}));
  CHECK_THROWS_AS((void)cli::parse_config("{not json"), InvalidInput);
  CHECK_THROWS_AS((void)cli::parse_config("novalue\n"), InvalidInput);
  CHECK_THROWS_AS((void)cli::ar_model_from_config(cli::parse_config("order = 3\ncoeffs = 0.1\n"), ArModel{}), InvalidInput);

  const KsConfig ks = cli::ks_config_from_config(cli::parse_config("n_modes = 256\ndt = 0.1\n"), KsConfig{});
  CHECK(ks.n_modes == 256);
  CHECK(ks.dt == 0.1);
  CHECK(cli::ks_config_from_config(cli::to_json(ks), KsConfig{}).n_modes == 256);
}

TEST_CASE("digests and number formatting") {
  CHECK(cli::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(cli::format_double(0.1) == "0.1");
  CHECK(std::stod(cli::format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("exit codes") {
  TempDir dir;
  CHECK(run_cli({"--help"}).code == 0);
  CHECK(run_cli({}).code == cli::kExitInvalidInput);
  CHECK(run_cli({"frobnicate"}).code == cli::kExitInvalidInput);
  CHECK(run_cli({"generate", "arma"}).code == cli::kExitInvalidInput);
  CHECK(run_cli({"estimate", dir.file("missing.csv")}).code == cli::kExitInvalidInput);
  write_values(dir.file("short.csv"), {1.0, 2.0, 3.0});
  CHECK(run_cli({"detect-transient", dir.file("short.csv")}).code == cli::kExitInvalidInput);
  CHECK(run_cli({"--format", "xml", "detect-transient", dir.file("short.csv")}).code == cli::kExitInvalidInput);

  // A non-stationary model is refused.
  write_values(dir.file("dummy.csv"), {1.0, 2.0});
  {
    std::ofstream cfg(dir.file("unstable.cfg"));
    cfg << "coeffs = 1.1\n";
  }
  CHECK(run_cli({"generate", "ar", "--config", dir.file("unstable.cfg"), "--n", "10"}).code == cli::kExitInvalidInput);
  {
    std::ofstream cfg(dir.file("typo.cfg"));
    cfg << "coefs = 0.5\n";
  }
  const auto typo = run_cli({"generate", "ar", "--config", dir.file("typo.cfg")});
  CHECK(typo.code == cli::kExitInvalidInput);
  CHECK(typo.err.find("coefs") != std::string::npos);
}

TEST_CASE("fit failure exits 3 but still reports") {
  TempDir dir;
  cli::write_series(dir.file("x.csv"), simulate_ar_stationary(paper_ar6(), 1024, 3));
  {
    std::ofstream cfg(dir.file("fit.cfg"));
    cfg << "tol_eq = 1e-300\nmax_outer_iters = 1\nmax_inner_iters = 1\nn_starts = 1\n";
  }
  const auto o = run_cli({"--out", dir.file("r.json"), "estimate", dir.file("x.csv"), "--config", dir.file("fit.cfg")});
  CHECK(o.code == cli::kExitNumericalFailure);
  const json r = json::parse(cli::read_file(dir.file("r.json")));
  CHECK(r["multiscale"]["converged"] == false);
}

TEST_CASE("generate") {
  TempDir dir;
  const auto a = run_cli({"--seed", "1", "--out", dir.file("a.csv"), "generate", "ar", "--preset", "paper-ar6", "--n", "16384"});
  REQUIRE(a.code == 0);
  const auto b = run_cli({"generate", "ar", "--n", "16384", "--seed", "1", "--out", dir.file("b.csv")});
  REQUIRE(b.code == 0);
  CHECK(cli::read_series(dir.file("a.csv")).size() == 16384);
  CHECK(cli::read_file(dir.file("a.csv")) == cli::read_file(dir.file("b.csv")));
  const json resolved = json::parse(cli::read_file(dir.file("a.csv.config.json")));
  CHECK(resolved["model"]["order"] == 6);
  CHECK(resolved["seed"] == 1);

  const auto c = run_cli({"--seed", "2", "generate", "ar", "--n", "100"});
  CHECK(c.code == 0);
  CHECK(cli::parse_series(c.out, "stdout").size() == 100);

  const auto ks = run_cli({"generate", "ks", "--steps", "0"});
  REQUIRE(ks.code == 0);
  CHECK(cli::parse_series(ks.out, "stdout").size() == 1);

  const auto init = run_cli({"generate", "ar", "--n", "50", "--init", "100"});
  CHECK(cli::parse_series(init.out, "stdout")[0] > 80.0);
}

TEST_CASE("detect-transient") {
  TempDir dir;
  write_values(dir.file("c.csv"), std::vector<double>(64, 3.0));
  const auto o = run_cli({"detect-transient", dir.file("c.csv"), "--curve-out", dir.file("curve.csv")});
  REQUIRE(o.code == 0);
  const json r = json::parse(o.out);
  CHECK(r["k_hat"] == 1);
  CHECK(r["stationary_start_index"] == 2);
  CHECK(r["n_remaining"] == 63);
  CHECK(r["input"]["sha256"] == cli::sha256_hex(cli::read_file(dir.file("c.csv"))));
  const std::string curve = cli::read_file(dir.file("curve.csv"));
  CHECK(curve.rfind("k,objective\n", 0) == 0);
  CHECK(std::count(curve.begin(), curve.end(), '\n') == 33);

  const auto csv = run_cli({"--format", "csv", "detect-transient", dir.file("c.csv")});
  CHECK(csv.out == "k_hat,stationary_start_index,n,n_remaining\n1,2,64,63\n");
}

TEST_CASE("estimate with baseline and the skip-transient pipeline") {
  TempDir dir;
  auto v = oracle::random_series(2048, 17);
  v[0] = 60.0;
  write_values(dir.file("x.csv"), v);

  const auto full = run_cli({"estimate", dir.file("x.csv"), "--m", "3", "--baseline", "ar:3"});
  REQUIRE(full.code == 0);
  const json a = json::parse(full.out);
  // The spike must go; the detector may also drop a few noisy samples after it.
  const auto k = a["transient"]["k_hat"].get<std::size_t>();
  CHECK(k >= 1);
  CHECK(k == oracle::transient_argmin(v));
  CHECK(a["n_used"] == 2048 - k);
  write_values(dir.file("trimmed.csv"), std::vector<double>(v.end() - static_cast<std::ptrdiff_t>(2048 - k), v.end()));
  CHECK(a["baseline"]["kind"] == "ar-mle");
  CHECK(a["baseline"]["model"]["order"] == 3);
  CHECK(a["schema_version"] == 1);
  CHECK(a["config"]["m"] == 3);
  CHECK(a["input"]["sha256"].get<std::string>().size() == 64);

  const auto skip = run_cli({"estimate", dir.file("trimmed.csv"), "--m", "3", "--skip-transient"});
  REQUIRE(skip.code == 0);
  const json b = json::parse(skip.out);
  CHECK(b["n_used"] == 2048 - k);
  CHECK(b["multiscale"]["eps2_n"] == a["multiscale"]["eps2_n"]);
  CHECK(b["multiscale"]["params"] == a["multiscale"]["params"]);

  CHECK(run_cli({"estimate", dir.file("x.csv"), "--baseline", "ma:2"}).code == cli::kExitInvalidInput);
  CHECK(run_cli({"estimate", dir.file("x.csv"), "--m", "0"}).code == cli::kExitInvalidInput);
}

// A single white-noise fit can collapse to eps = 0, so only the report is checked
// here. The ensemble behaviour is covered by the acceptance run.
TEST_CASE("white-noise estimate is reported") {
  TempDir dir;
  ArModel white;
  const auto x = simulate_ar_stationary(white, 4096, 1);
  cli::write_series(dir.file("w.csv"), x);
  const auto o = run_cli({"estimate", dir.file("w.csv"), "--skip-transient"});
  REQUIRE(o.code == 0);
  const double eps = json::parse(o.out)["multiscale"]["eps_n"].get<double>();
  MESSAGE("single white-noise run: eps_N = " << eps << ", sigma/64 = " << 1.0 / 64.0);
  CHECK(eps >= 0.0);
  CHECK(eps < 3.0 / 64.0);
}

TEST_CASE("benchmark tables") {
  TempDir dir;
  const auto o = run_cli({"--seed", "4", "benchmark", "ar", "--n-grid", "256,16384", "--ensemble", "1", "--out-dir", dir.path().string()});
  REQUIRE(o.code == 0);
  const std::string table = cli::read_file(dir.file("benchmark_ar.csv"));
  CHECK(table == o.out);
  std::istringstream lines(table);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "N,truth,ms_mean,ms_var,mle_mean,mle_var");
  std::string row;
  int rows = 0;
  while (std::getline(lines, row)) {
    ++rows;
    std::vector<std::string> cols;
    std::stringstream ss(row);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    REQUIRE(cols.size() == 6);
    CHECK(std::stod(cols[3]) == 0.0);
    CHECK(std::stod(cols[5]) == 0.0);
    if (cols[0] == "16384") {
      const auto stats = yule_walker_truth(paper_ar6(), 16384);
      CHECK(std::stod(cols[1]) == doctest::Approx(std::sqrt(exact_sq_averaging_error(stats, 16384))).epsilon(1e-12));
    }
  }
  CHECK(rows == 2);
  CHECK(std::filesystem::exists(dir.file("benchmark_ar_members.csv")));
  CHECK(json::parse(cli::read_file(dir.file("benchmark_ar.config.json")))["ensemble"] == 1);
}

TEST_CASE("truth curves") {
  const auto w = run_cli({"truth", "white", "--n-grid", "1,4,9,100"});
  REQUIRE(w.code == 0);
  CHECK(w.out.find("s,eps2,eps\n1,1,1\n4,0.25,0.5\n9,") != std::string::npos);
  CHECK(w.out.find("\n100,0.01,0.1\n") != std::string::npos);

  const auto ar = run_cli({"--format", "json", "truth", "ar", "--preset", "paper-ar6", "--n-grid", "1..8"});
  REQUIRE(ar.code == 0);
  const json r = json::parse(ar.out);
  const double sigma = r["header"]["sigma"].get<double>();
  MESSAGE("paper AR(6) sigma from Yule-Walker: " << sigma);
  CHECK(sigma == doctest::Approx(std::sqrt(yule_walker_truth(paper_ar6(), 1).sigma2)));
  CHECK(r["rows"].size() == 4);
  CHECK(r["rows"][0]["eps"].get<double>() == doctest::Approx(sigma));
}

TEST_CASE("jobs do not change results") {
  TempDir dir;
  const auto one = run_cli({"--seed", "3", "--jobs", "1", "benchmark", "white", "--n-grid", "256..512", "--ensemble", "4",
                            "--out-dir", dir.file("one")});
  const auto four = run_cli({"--seed", "3", "--jobs", "4", "benchmark", "white", "--n-grid", "256..512", "--ensemble", "4",
                             "--out-dir", dir.file("four")});
  REQUIRE(one.code == 0);
  REQUIRE(four.code == 0);
  CHECK(one.out == four.out);
  CHECK(cli::read_file(dir.file("one/benchmark_white_members.csv")) == cli::read_file(dir.file("four/benchmark_white_members.csv")));
}

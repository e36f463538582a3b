#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

const std::string kCli = SENSORMESH_CLI_PATH;
const std::string kFixture =
    std::string(SENSORMESH_FIXTURES_DIR) + "/temperature_anomaly.csv";
const std::string kPresetsDir = SENSORMESH_PRESETS_DIR;

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const auto dir = std::filesystem::temp_directory_path() / "sensormesh_cli_test";
  std::filesystem::create_directories(dir);
  const auto out = dir / ("out" + std::to_string(counter));
  const auto err = dir / ("err" + std::to_string(counter));
  ++counter;
  const std::string command =
      kCli + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(command.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out);
  result.err = slurp(err);
  return result;
}

std::size_t count_lines(const std::string& text) {
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n';
  return lines;
}

}  // namespace

TEST_CASE("budget prints the 2.6x multi-hop benefit") {
  const CliResult r = run_cli("budget --sf 7 --n-hops 2 --compare-sf 10 --csv");
  REQUIRE(r.exit_code == 0);
  // csv row: sf,n_hops,range,packet,airtime,energy,bits,compare_sf,benefit
  const auto last_comma = r.out.rfind(',');
  REQUIRE(last_comma != std::string::npos);
  const double benefit = std::stod(r.out.substr(last_comma + 1));
  CHECK(benefit == doctest::Approx(2.6).epsilon(0.05 / 2.6));
}

TEST_CASE("budget defaults give the 1.25 km range") {
  const CliResult r = run_cli("budget --sf 7 --csv");
  REQUIRE(r.exit_code == 0);
  std::stringstream rows(r.out);
  std::string header, row;
  std::getline(rows, header);
  std::getline(rows, row);
  std::stringstream cells(row);
  std::string cell;
  std::getline(cells, cell, ',');  // sf
  std::getline(cells, cell, ',');  // n_hops
  std::getline(cells, cell, ',');  // range_m
  CHECK(std::stod(cell) == doctest::Approx(1250.0).epsilon(0.10));
  std::getline(cells, cell, ',');  // packet_bytes
  CHECK(std::stod(cell) == 354.25);
}

TEST_CASE("budget rejects an out-of-range spreading factor") {
  const CliResult r = run_cli("budget --sf 6");
  CHECK(r.exit_code != 0);
  CHECK(r.err.find("--sf") != std::string::npos);
}

TEST_CASE("compress emits kept samples and metrics") {
  const CliResult r = run_cli("compress " + kFixture + " --y 0.02 --metrics");
  REQUIRE(r.exit_code == 0);
  CHECK(count_lines(r.out) == 13);  // header + 12 kept rows
  CHECK(r.err.find("ratio=8.33") != std::string::npos);
  CHECK(r.err.find("correlation=0.9") != std::string::npos);
}

TEST_CASE("compress reports anomalies when asked") {
  const CliResult r =
      run_cli("compress " + kFixture + " --y 0.02 --x 0.10 --metrics");
  REQUIRE(r.exit_code == 0);
  CHECK(r.err.find("anomalies=2") != std::string::npos);
}

TEST_CASE("compress sweep emits the trade-off table") {
  const CliResult r =
      run_cli("compress " + kFixture + " --y-sweep 0.005:0.05:0.005");
  REQUIRE(r.exit_code == 0);
  CHECK(count_lines(r.out) == 11);  // header + 10 thresholds
  CHECK(r.out.find("threshold_y,kept,compression_ratio,correlation") == 0);
}

TEST_CASE("compress fails cleanly on a missing file") {
  const CliResult r = run_cli("compress /does/not/exist.csv --y 0.02");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("error") != std::string::npos);
}

TEST_CASE("constant traces get the constant-signal marker") {
  const auto dir = std::filesystem::temp_directory_path() / "sensormesh_cli_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "constant.csv";
  {
    std::ofstream out(path);
    out << "timestamp_s,channel,value\n";
    for (int i = 0; i < 25; ++i) out << i << ",humidity,40\n";
  }
  const CliResult r = run_cli("compress " + path.string() + " --y 0.02 --metrics");
  REQUIRE(r.exit_code == 0);
  CHECK(r.err.find("ratio=25") != std::string::npos);
  CHECK(r.err.find("correlation=constant_signal") != std::string::npos);
}

TEST_CASE("sweep emits figure tables and rejects unknown keys") {
  CliResult r = run_cli("sweep ci_savings --n 1:20");
  REQUIRE(r.exit_code == 0);
  CHECK(count_lines(r.out) == 21);
  CHECK(r.out == run_cli("sweep ci_savings --args n=1:20").out);

  r = run_cli("sweep lifetime_vs_n --n 1:20");
  REQUIRE(r.exit_code == 0);
  CHECK(count_lines(r.out) == 21);

  r = run_cli("sweep duty_cycle --N 1:100");
  REQUIRE(r.exit_code == 0);
  CHECK(count_lines(r.out) == 101);

  r = run_cli("sweep sf_range_bits");
  REQUIRE(r.exit_code == 0);
  CHECK(count_lines(r.out) == 13);  // six SFs, two hop counts

  r = run_cli("sweep compression_tradeoff --trace " + kFixture);
  REQUIRE(r.exit_code == 0);
  CHECK(count_lines(r.out) == 11);

  r = run_cli("sweep not_a_figure");
  CHECK(r.exit_code != 0);
  CHECK(r.err.find("lifetime_ladder") != std::string::npos);
}

TEST_CASE("simulate runs presets and writes output files") {
  const auto dir = std::filesystem::temp_directory_path() /
                   "sensormesh_cli_test" / "simout";
  std::filesystem::create_directories(dir);
  const CliResult r = run_cli(
      "simulate --preset isa_ci_cas --set duration_s=20000 "
      "--set record_events=true --out " + dir.string());
  REQUIRE(r.exit_code == 0);
  CHECK(std::filesystem::exists(dir / "summary.csv"));
  CHECK(std::filesystem::exists(dir / "events.csv"));
  CHECK(slurp(dir / "summary.csv").find("node,") == 0);
  CHECK(r.err.find("network lifetime") != std::string::npos);
}

TEST_CASE("simulate is reproducible for a fixed seed") {
  const std::string args =
      "simulate --preset isa_ci_cas --seed 5 --set duration_s=20000 "
      "--set noise=0.08 --set record_events=true";
  const CliResult a = run_cli(args);
  const CliResult b = run_cli(args);
  REQUIRE(a.exit_code == 0);
  CHECK(a.out == b.out);

  const CliResult c = run_cli(
      "simulate --preset isa_ci_cas --seed 6 --set duration_s=20000 "
      "--set noise=0.08 --set record_events=true");
  CHECK(a.out != c.out);
}

TEST_CASE("simulate accepts a scenario file and flag overrides") {
  const CliResult r = run_cli("simulate " + kPresetsDir +
                              "/isa.cfg --set duration_s=5000 --nodes 1 "
                              "--mode isa_ci_cas");
  REQUIRE(r.exit_code == 0);
  CHECK(count_lines(r.out) == 2);  // header + the singleton node
}

TEST_CASE("simulate rejects bad scenario keys by name") {
  const CliResult r =
      run_cli("simulate --preset isa --set anomaly_cadence=900");
  CHECK(r.exit_code != 0);
  CHECK(r.err.find("anomaly_cadence") != std::string::npos);
}

TEST_CASE("the lifetime ladder lists all five rungs in order") {
  const CliResult r = run_cli("simulate --ladder");
  REQUIRE(r.exit_code == 0);
  CHECK(count_lines(r.out) == 6);
  const std::size_t baseline = r.out.find("lora_every_second");
  const std::size_t duty = r.out.find("duty_cycled_lora");
  const std::size_t isa = r.out.find("isa,");
  const std::size_t ci = r.out.find("isa_ci,");
  const std::size_t cas = r.out.find("isa_ci_cas,");
  CHECK(baseline != std::string::npos);
  CHECK(baseline < duty);
  CHECK(duty < isa);
  CHECK(isa < ci);
  CHECK(ci < cas);
}

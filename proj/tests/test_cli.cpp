#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "freqctl/monotone.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kBinary = FREQCTL_CLI;
const std::string kScenarios = FREQCTL_SCENARIO_DIR;
const std::string kGolden = FREQCTL_GOLDEN_DIR;

struct Run {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

// Fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("freqctl_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  fs::path operator/(const std::string& f) const { return dir / f; }

  Run run(const std::string& args) const {
    const std::string cmd = "cd '" + dir.string() + "' && '" + kBinary + "' " + args + " > stdout.txt 2> stderr.txt";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(dir / "stdout.txt");
    r.err = slurp(dir / "stderr.txt");
    return r;
  }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir / name) << text;
    return dir / name;
  }
};

std::string scenario(const std::string& name) { return "'" + kScenarios + "/" + name + "'"; }

}  // namespace

TEST_CASE("simulate writes the documented CSV schemas") {
  Scratch s("schemas");
  const Run r = s.run("simulate " + scenario("toy3.json") + " -o out --horizon 5");
  REQUIRE(r.code == 0);
  CHECK(first_line(s / "out/trajectory.csv") == first_line(kGolden + "/trajectory_header_3bus.csv"));
  CHECK(first_line(s / "out/metrics.csv") == first_line(kGolden + "/metrics_header.csv"));
  CHECK(read_csv(s / "out/trajectory.csv").size() == 502);
  CHECK(r.out.find("final |omega|_inf") != std::string::npos);
}

TEST_CASE("missing network file is a configuration error") {
  Scratch s("missing_net");
  s.write("sc.json", R"({"network": "no_such_network.json"})");
  const Run r = s.run("simulate sc.json");
  CHECK(r.code == 2);
  CHECK(r.err.find("network file not found") != std::string::npos);
}

TEST_CASE("zero disturbance leaves frequency at zero") {
  Scratch s("zero_p");
  s.write("sc.json", R"({"network": "toy3", "disturbance": {"p": 0}, "horizon": 2})");
  REQUIRE(s.run("simulate sc.json").code == 0);
  const auto rows = read_csv(s / "trajectory.csv");
  REQUIRE(rows.size() == 202);
  for (std::size_t i = 1; i < rows.size(); ++i)
    for (std::size_t c = 1; c <= 3; ++c) CHECK(std::stod(rows[i][c]) == 0.0);
}

TEST_CASE("bundled learned controller restores frequency on IEEE-39") {
  Scratch s("ieee_learned");
  REQUIRE(s.run("simulate " + scenario("ieee39_learned.json")).code == 0);
  const auto rows = read_csv(s / "trajectory.csv");
  double worst = 0.0;
  for (std::size_t c = 1; c <= 39; ++c) worst = std::max(worst, std::abs(std::stod(rows.back()[c])));
  CHECK(worst <= 1e-3);
}

TEST_CASE("train reduces the loss and is reproducible") {
  Scratch s("train");
  const Run a = s.run("train " + scenario("toy3.json") + " --checkpoint-out a.json --loss-csv a.csv");
  REQUIRE(a.code == 0);
  const Run b = s.run("train " + scenario("toy3.json") + " --serial --checkpoint-out b.json --loss-csv b.csv");
  REQUIRE(b.code == 0);
  const auto rows = read_csv(s / "a.csv");
  REQUIRE(rows.size() == 21);
  CHECK(first_line(s / "a.csv") == first_line(kGolden + "/loss_header.csv"));
  CHECK(std::stod(rows.back()[1]) <= 0.5 * std::stod(rows[1][1]));
  CHECK(slurp(s / "a.csv") == slurp(s / "b.csv"));
  CHECK(slurp(s / "a.json") == slurp(s / "b.json"));
}

TEST_CASE("large training runs warn before starting") {
  Scratch s("dry_run");
  const Run r = s.run("train " + scenario("ieee39_step.json") + " --dry-run");
  CHECK(r.code == 0);
  CHECK(r.err.find("warning: large training run") != std::string::npos);
  const Run small = s.run("train " + scenario("toy3.json") + " --dry-run");
  CHECK(small.code == 0);
  CHECK(small.err.empty());
}

TEST_CASE("compare: identity net tracks the linear baseline") {
  Scratch s("compare_identity");
  freqctl::MonotoneConfig cfg;
  freqctl::save_checkpoint(freqctl::MonotoneNet::identity_init(3, cfg, 0), s / "id.json");
  const Run r = s.run("compare " + scenario("toy3.json") + " --checkpoint id.json --horizon 30");
  REQUIRE(r.code == 0);
  const auto rows = read_csv(s / "compare.csv");
  REQUIRE(rows.size() == 3);
  CHECK(first_line(s / "compare.csv") == first_line(kGolden + "/compare_header.csv"));
  CHECK(rows[1][1] == "learned");
  CHECK(rows[2][1] == "linear");
  for (std::size_t c : {3u, 4u}) CHECK(std::stod(rows[1][c]) == doctest::Approx(std::stod(rows[2][c])).epsilon(0.05));
}

TEST_CASE("compare: trained toy controller lowers the nadir on held-out draws") {
  Scratch s("compare_trained");
  const Run r = s.run("compare " + scenario("toy3.json") + " --checkpoint '" + kScenarios +
                      "/checkpoints/toy3_trained.json' --held-out 10");
  REQUIRE(r.code == 0);
  const auto rows = read_csv(s / "compare.csv");
  REQUIRE(rows.size() == 21);
  int wins = 0;
  for (std::size_t i = 1; i < rows.size(); i += 2) wins += std::stod(rows[i][3]) < std::stod(rows[i + 1][3]);
  CHECK(wins >= 8);
}

TEST_CASE("compare rejects a checkpoint for another network") {
  Scratch s("compare_mismatch");
  const Run r = s.run("compare " + scenario("toy3.json") + " --checkpoint '" + kScenarios +
                      "/checkpoints/ieee39_desk.json'");
  CHECK(r.code == 2);
  CHECK(r.err.find("buses") != std::string::npos);
}

TEST_CASE("oracle prints the balanced optimum") {
  Scratch s("oracle");
  const Run r = s.run("oracle " + scenario("toy3.json") + " --restarts 5");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j.at("sum_u").get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(j.at("u").size() == 3);
  CHECK(j.at("uniqueness").at("failed").get<int>() == 0);
  CHECK(j.at("uniqueness").at("u_dispersion").get<double>() <= 1e-5);
}

TEST_CASE("check-gradients passes by default and fails an impossible tolerance") {
  Scratch s("gradients");
  const Run ok = s.run("check-gradients");
  CHECK(ok.code == 0);
  CHECK(ok.out.find("max_rel_error") != std::string::npos);
  CHECK(s.run("check-gradients --tol 1e-14").code == 1);
}

TEST_CASE("numerical blowup exits with 1") {
  Scratch s("blowup");
  s.write("sc.json", R"({"network": "toy3", "disturbance": {"p": [1, -1, 0]}, "horizon": 300, "dt": 3.0})");
  const Run r = s.run("simulate sc.json");
  CHECK(r.code == 1);
  CHECK(r.err.find("blowup") != std::string::npos);
}

TEST_CASE("configuration errors exit with 2") {
  Scratch s("config");
  CHECK(s.run("simulate " + scenario("toy3.json") + " --no-such-flag").code == 2);
  CHECK(s.run("simulate " + scenario("toy3.json") + " --integrator midpoint").code == 2);
  CHECK(s.run("").code == 2);
  CHECK(s.run("train --network toy3 --decay 2 --dry-run").code == 2);
  s.write("bad.json", "{ not json");
  CHECK(s.run("simulate bad.json").code == 2);
  CHECK(s.run("--help").code == 0);
}

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "d2d/cli.hpp"
#include "d2d/config.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("d2dcache_test_" + std::to_string(counter()++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

long data_rows(const std::string& contents) {
  long rows = 0;
  std::stringstream ss(contents);
  std::string line;
  bool header_seen = false;
  while (std::getline(ss, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      continue;
    }
    ++rows;
  }
  return rows;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("config parsing round trip") {
  TempDir dir;
  auto cfg_path = dir.path / "run.ini";
  {
    std::ofstream out(cfg_path);
    out << "# comment\n[cell]\nn = 42\nm = 77\ngamma_r = 0.9\n\n[run]\nseed = 5\n";
  }
  d2d::Config cfg;
  cfg.load_file(cfg_path.string());
  CHECK(cfg.get_long("cell.n", 0) == 42);
  CHECK(cfg.get_long("cell.m", 0) == 77);
  CHECK(cfg.get_double("cell.gamma_r", 0.0) == doctest::Approx(0.9));
  CHECK(cfg.get_u64("run.seed", 0) == 5);
  cfg.set_pair("cell.n=50");
  CHECK(cfg.get_long("cell.n", 0) == 50);
  CHECK_THROWS_AS(cfg.get_long("cell.gamma_r", 0), d2d::ConfigError);
  CHECK_THROWS_AS((void)d2d::Config{}.require_double("delay.omega_bs"), d2d::ConfigError);
}

TEST_CASE("config file values drive a run") {
  TempDir dir;
  auto cfg_path = dir.path / "run.ini";
  {
    std::ofstream out(cfg_path);
    out << "[cell]\nn = 25\nm = 40\n\n[grid]\nr_points = 7\n";
  }
  int rc = d2d::cli::run({"--config", cfg_path.string(), "--out", dir.str(), "analytic-det"});
  CHECK(rc == 0);
  auto contents = slurp(dir.path / "analytic_det.csv");
  CHECK(data_rows(contents) == 7);
  CHECK(contents.find("# n = 25") != std::string::npos);
  // overrides beat the file
  rc = d2d::cli::run({"--config", cfg_path.string(), "--out", dir.str(), "--set",
                      "grid.r_points=4", "analytic-det"});
  CHECK(rc == 0);
  CHECK(data_rows(slurp(dir.path / "analytic_det.csv")) == 4);
}

TEST_CASE("analytic-det writes one row per grid point") {
  TempDir dir;
  int rc = d2d::cli::run({"--out", dir.str(), "--set", "cell.n=50", "--set", "cell.m=100",
                          "--set", "grid.r_points=12", "analytic-det"});
  CHECK(rc == 0);
  auto contents = slurp(dir.path / "analytic_det.csv");
  CHECK(data_rows(contents) == 12);
  CHECK(contents.find("# tool = d2dcache") != std::string::npos);
  CHECK(contents.find("# geometry = square cell side sqrt(2)") != std::string::npos);
}

TEST_CASE("invalid grid exits with code 2 and names the field") {
  int rc = d2d::cli::run({"--set", "grid.r_points=0", "analytic-det"});
  CHECK(rc == 2);
  rc = d2d::cli::run({"--set", "cell.n=0", "analytic-det"});
  CHECK(rc == 2);
  rc = d2d::cli::run({"--set", "cell.gamma_r=-1", "analytic-det"});
  CHECK(rc == 2);
}

TEST_CASE("stochastic scenarios demand a seed") {
  TempDir dir;
  int rc = d2d::cli::run({"--out", dir.str(), "--set", "cell.n=10", "--set", "cell.m=20",
                          "--set", "geo.trials=10", "geo-sim"});
  CHECK(rc == 2);  // run.seed missing
  rc = d2d::cli::run({"--out", dir.str(), "--seed", "7", "--set", "cell.n=10", "--set",
                      "cell.m=20", "--set", "geo.trials=10", "--set", "grid.r_points=4",
                      "geo-sim"});
  CHECK(rc == 0);
}

TEST_CASE("exact enumeration failure exits with code 3") {
  TempDir dir;
  int rc = d2d::cli::run({"--out", dir.str(), "--set", "cell.n=500", "--set", "cell.m=1000",
                          "--set", "grid.r_points=4", "analytic-rand", "--method", "exact"});
  CHECK(rc == 3);
}

TEST_CASE("missing required keys exit with code 2") {
  TempDir dir;
  // phy-sim without reference SNR
  int rc = d2d::cli::run({"--out", dir.str(), "--seed", "1", "--set", "cell.n=20", "--set",
                          "cell.m=30", "--set", "phy.trials=3", "--set", "grid.r_points=4",
                          "phy-sim"});
  CHECK(rc == 2);
  // min-delay without download times
  rc = d2d::cli::run({"--out", dir.str(), "--set", "cell.n=20", "--set", "cell.m=30",
                      "optimize", "--objective", "min-delay"});
  CHECK(rc == 2);
}

TEST_CASE("reruns with the same config and seed are byte-identical") {
  TempDir a, b;
  std::vector<std::string> common = {"--seed", "31", "--set", "cell.n=30", "--set",
                                     "cell.m=50", "--set", "grid.r_points=5", "--set",
                                     "rand.mc_samples=500"};
  auto run_in = [&](const std::string& out) {
    auto args = common;
    args.insert(args.begin(), {"--out", out});
    args.push_back("analytic-rand");
    return d2d::cli::run(args);
  };
  CHECK(run_in(a.str()) == 0);
  CHECK(run_in(b.str()) == 0);
  CHECK(slurp(a.path / "analytic_rand.csv") == slurp(b.path / "analytic_rand.csv"));
  CHECK(!slurp(a.path / "analytic_rand.csv").empty());
}

TEST_CASE("figure 3 emits the configured curves") {
  TempDir dir;
  int rc = d2d::cli::run({"--out", dir.str(), "--set", "cell.n=60", "--set", "cell.m=120",
                          "--set", "grid.r_points=8", "figure", "3"});
  CHECK(rc == 0);
  auto contents = slurp(dir.path / "figure3.csv");
  CHECK(data_rows(contents) == 8);
  CHECK(contents.find("ea_gamma_r_1.4") != std::string::npos);
}

TEST_CASE("figure numbers outside 3..14 are rejected") {
  CHECK(d2d::cli::run({"figure", "2"}) == 2);
  CHECK(d2d::cli::run({"figure", "15"}) == 2);
}

TEST_CASE("every figure preset runs end to end on a reduced set-up") {
  TempDir dir;
  auto run_fig = [&](int number, std::vector<std::string> extra) {
    std::vector<std::string> args = {"--out", dir.str(), "--seed", "6", "--set",
                                     "cell.n=16",  "--set", "cell.m=24", "--set",
                                     "grid.r_points=5", "--set", "rand.mc_samples=200",
                                     "--set", "phy.trials=4", "--set",
                                     "phy.reference_snr_db=30"};
    for (auto& e : extra) args.push_back(e);
    args.push_back("figure");
    args.push_back(std::to_string(number));
    return d2d::cli::run(args);
  };
  CHECK(run_fig(4, {}) == 0);
  CHECK(run_fig(5, {}) == 0);
  CHECK(run_fig(6, {"--set", "delay.omega_bs=10", "--set", "delay.omega_d2d=1"}) == 0);
  CHECK(run_fig(7, {"--set", "figure.m_list=20,40,60,80"}) == 0);
  CHECK(run_fig(8, {"--set", "asymptotics.n_list=40,80,160,400", "--set",
                    "asymptotics.m_coefficient=6"}) == 0);
  CHECK(run_fig(9, {"--set", "asymptotics.n_list=40,80,160,400", "--set",
                    "asymptotics.m_coefficient=6"}) == 0);
  CHECK(run_fig(10, {"--set", "grid.gamma_c_points=4"}) == 0);
  CHECK(run_fig(11, {}) == 0);
  CHECK(run_fig(12, {"--set", "figure.gamma_r_list=0.4,0.8", "--set",
                     "grid.gamma_c_min=0", "--set", "grid.gamma_c_max=3", "--set",
                     "grid.gamma_c_points=5"}) == 0);
  CHECK(run_fig(13, {}) == 0);
  CHECK(run_fig(14, {}) == 0);
  for (int number : {4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14})
    CHECK(fs::exists(dir.path / ("figure" + std::to_string(number) + ".csv")));
  // figure 6 without download times must fail validation
  CHECK(run_fig(6, {}) == 2);
}

TEST_CASE("compare emits the caching columns") {
  TempDir dir;
  int rc = d2d::cli::run({"--out", dir.str(), "--seed", "8", "--set", "cell.n=30", "--set",
                          "cell.m=40", "--set", "grid.r_points=5", "--set",
                          "rand.mc_samples=400", "compare"});
  CHECK(rc == 0);
  auto contents = slurp(dir.path / "compare.csv");
  CHECK(data_rows(contents) == 5);
  CHECK(contents.find("nself_mostpop") != std::string::npos);
}

TEST_CASE("optimize smoke run under both caching modes") {
  TempDir dir;
  int rc = d2d::cli::run({"--out", dir.str(), "--set", "cell.n=40", "--set", "cell.m=60",
                          "--set", "grid.r_points=10", "optimize"});
  CHECK(rc == 0);
  auto det_contents = slurp(dir.path / "optimize.csv");
  CHECK(data_rows(det_contents) == 10);  // refined optimum stays in metadata
  rc = d2d::cli::run({"--out", dir.str(), "--seed", "4", "--set", "cell.n=10", "--set",
                      "cell.m=12", "--set", "grid.r_points=5", "--set",
                      "grid.gamma_c_points=4", "--set", "rand.mc_samples=300", "--set",
                      "grid.refine_levels=1", "optimize", "--caching", "rand"});
  CHECK(rc == 0);
  auto contents = slurp(dir.path / "optimize.csv");
  CHECK(data_rows(contents) == 5 * 4);
  CHECK(contents.find("# r_opt =") != std::string::npos);
  CHECK(contents.find("# gamma_c_opt =") != std::string::npos);
}

}  // TEST_SUITE

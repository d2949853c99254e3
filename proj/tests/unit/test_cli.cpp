#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "doctest.h"
#include "traffic/cli.hpp"
#include "traffic/velocity.hpp"

namespace fs = std::filesystem;
using traffic::cli::run;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("traffic_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "traffic");
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream s(text);
  for (std::string line; std::getline(s, line);) out.push_back(line);
  return out;
}

std::vector<double> split(const std::string& line) {
  std::vector<double> out;
  std::istringstream s(line);
  for (std::string item; std::getline(s, item, ',');) out.push_back(std::stod(item));
  return out;
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(invoke({}).code == 1);
  CHECK(invoke({"bogus"}).code == 1);
  const auto r = invoke({"verify-invariance", "--no-such-flag"});
  CHECK(r.code == 1);
  CHECK(r.err.find("no-such-flag") != std::string::npos);
  CHECK(invoke({"measure", "histogram"}).code == 1);
  CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("verify-invariance") {
  TempDir dir;
  auto r = invoke({"--out", dir.str(), "verify-invariance", "--rho", "0.5", "--p", "0.5", "--max-len", "6", "--tol",
                   "1e-10"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("stationary", 0) == 0);
  const auto text = lines(slurp(dir.path / "invariance.csv"));
  REQUIRE(text.size() == 3 + 126 + 1);
  CHECK(text[0].rfind("# traffic-maps ", 0) == 0);
  CHECK(text[1].find("command=verify-invariance") != std::string::npos);
  CHECK(text[1].find("seed=") != std::string::npos);
  CHECK(text[1].find("rho=0.5") != std::string::npos);
  CHECK(text[2] == "cylinder,mu,mu_pushed,abs_err");
  CHECK(text.back().find("verdict=stationary") != std::string::npos);

  r = invoke({"--out", dir.str(), "verify-invariance", "--matrix", "0.5,0.5,0.5,0.5", "--p", "0.5"});
  CHECK(r.code == 3);
  CHECK(r.out.rfind("non-stationary", 0) == 0);
  CHECK(slurp(dir.path / "invariance.csv").find("\n11,0.25,0.234375,0.015625\n") != std::string::npos);

  r = invoke({"--out", dir.str(), "verify-invariance", "--max-len", "13"});
  CHECK(r.code == 2);
  r = invoke({"--out", dir.str(), "verify-invariance", "--rho", "1.5"});
  CHECK(r.code == 2);
}

TEST_CASE("fundamental-diagram") {
  TempDir dir;
  auto r = invoke({"--out", dir.str(), "fundamental-diagram", "--rho", "0.05:0.95:0.05", "--p", "1", "--v", "1", "--r",
                   "0.5", "--particles", "200", "--steps", "200", "--seed", "3"});
  REQUIRE(r.code == 0);
  const auto text = lines(slurp(dir.path / "fd.csv"));
  REQUIRE(text.size() == 3 + 19);
  CHECK(text[1].find("seed=3") != std::string::npos);
  CHECK(text[2] == "rho,p,v,r,V_theory,V_hat,stderr,flux");
  for (std::size_t k = 3; k < text.size(); ++k) {
    const auto row = split(text[k]);
    const double rho = row[0];
    CHECK(row[4] == doctest::Approx(std::min(1.0, (1.0 - rho) / rho)).epsilon(1e-12));
  }

  r = invoke({"--out", dir.str(), "fundamental-diagram", "--rho", "0.5:1.2:0.1", "--r", "0.5"});
  CHECK(r.code == 2);
  CHECK(r.err.find("2 r rho >= 1") != std::string::npos);
  r = invoke({"--out", dir.str(), "fundamental-diagram", "--rho", "0.9:0.1:0.1"});
  CHECK(r.code == 2);
  r = invoke({"--out", dir.str(), "fundamental-diagram", "--replicas", "0"});
  CHECK(r.code == 1);
}

TEST_CASE("simulate writes trajectory and velocity and is reproducible") {
  TempDir a, b;
  const std::vector<std::string> flags{"simulate", "--ring", "1000", "--particles", "500", "--p", "0.5", "--v", "1",
                                       "--r", "0.5", "--steps", "5000", "--seed", "7"};
  auto args_a = flags, args_b = flags;
  args_a.insert(args_a.begin(), {"--out", a.str()});
  args_b.insert(args_b.begin(), {"--out", b.str()});
  REQUIRE(invoke(args_a).code == 0);
  REQUIRE(invoke(args_b).code == 0);
  for (const char* name : {"trajectory.csv", "velocity.csv"}) {
    const auto first = slurp(a.path / name);
    CHECK(!first.empty());
    CHECK(first == slurp(b.path / name));
    CHECK(first.find("seed=7") != std::string::npos);
  }
  const auto vel = lines(slurp(a.path / "velocity.csv"));
  REQUIRE(vel.size() == 4);
  const auto row = split(vel[3]);
  CHECK(row[0] == 0.5);
  CHECK(std::abs(row[2] - row[1]) < 0.02);

  CHECK(invoke({"--out", a.str(), "simulate", "--ring", "10", "--particles", "11", "--r", "0.5"}).code == 2);
  CHECK(invoke({"--out", a.str(), "simulate", "--ring", "10.5", "--particles", "3", "--space", "lattice", "--init",
                "even"})
            .code == 2);
  CHECK(invoke({"--out", a.str(), "simulate", "--ring", "10", "--particles", "3", "--init", "odd"}).code == 2);
  CHECK(invoke({"--out", a.str(), "simulate", "--particles", "3"}).code == 1);
}

TEST_CASE("output directory defaults to the environment") {
  TempDir dir;
  ::setenv("TRAFFIC_OUT_DIR", dir.str().c_str(), 1);
  const auto r = invoke({"periodic-points", "--n", "4"});
  ::unsetenv("TRAFFIC_OUT_DIR");
  CHECK(r.code == 0);
  CHECK(r.out == "count=7 trace=7\n");
  const auto text = lines(slurp(dir.path / "periodic.csv"));
  REQUIRE(text.size() == 4 + 7);
  CHECK(text[3] == "word");
}

TEST_CASE("measure, stability-sweep, obstacles and couple-check") {
  TempDir dir;
  auto r = invoke({"--out", dir.str(), "measure", "sample", "--rho", "0.3", "--p", "0.5", "--sites", "40", "--seed",
                   "2"});
  CHECK(r.code == 0);
  CHECK(r.out.size() == 41);
  CHECK(invoke({"--out", dir.str(), "measure", "sample", "--rho", "0.3", "--sites", "40", "--particles", "12"}).code ==
        0);
  r = invoke({"--out", dir.str(), "measure", "cylinder", "--max-len", "3"});
  CHECK(r.code == 0);
  CHECK(lines(slurp(dir.path / "cylinders.csv")).size() == 3 + 14);
  r = invoke({"--out", dir.str(), "measure", "matrix", "--rho", "0.25", "--p", "1"});
  CHECK(r.code == 0);
  const auto entries = split(r.out);
  REQUIRE(entries.size() == 4);
  CHECK(entries[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(entries[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(entries[2] == 1.0);
  CHECK(entries[3] == 0.0);

  r = invoke({"--out", dir.str(), "stability-sweep", "--particles", "200", "--steps", "200"});
  CHECK(r.code == 0);
  CHECK(lines(slurp(dir.path / "sweep.csv")).size() == 3 + 4);

  r = invoke({"--out", dir.str(), "obstacles", "--ring", "500", "--steps", "500"});
  CHECK(r.code == 0);
  CHECK(lines(slurp(dir.path / "obstacles.csv"))[2] == "rho_x,rho_z_ext,V_theory,V_hat,stderr");
  CHECK(invoke({"--out", dir.str(), "obstacles", "--ring", "501"}).code == 2);

  r = invoke({"--out", dir.str(), "couple-check", "--particles", "200", "--steps", "200", "--seed", "4"});
  CHECK(r.code == 0);
  CHECK(r.out == "radius_conjugate exact, heterogeneous exact\n");
}

TEST_CASE("grid parsing") {
  const auto g = traffic::cli::parse_grid("0.05:0.95:0.05");
  REQUIRE(g.size() == 19);
  CHECK(g.front() == 0.05);
  CHECK(g[1] == 0.1);
  CHECK(g.back() == 0.95);
  CHECK(traffic::cli::parse_grid("1,2.5,3") == std::vector<double>{1.0, 2.5, 3.0});
  CHECK_THROWS_AS(traffic::cli::parse_grid(""), traffic::DomainError);
  CHECK_THROWS_AS(traffic::cli::parse_grid("1:2"), traffic::DomainError);
  CHECK_THROWS_AS(traffic::cli::parse_grid("1:2:0"), traffic::DomainError);
}

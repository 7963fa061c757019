#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "plap/errors.hpp"
#include "plap/scenario.hpp"

using namespace plap;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("plap_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void put(const fs::path& p, const std::string& body) { std::ofstream(p, std::ios::binary) << body; }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PLAP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

template <class F>
ParseError parse_error(F&& f) {
  try {
    f();
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("expected ParseError");
  return ParseError("", 0, 0);
}

const char* kTwoBlock =
    "p = 2\n"
    "weight = 1.5 + 0.5*cos(20*pi/3*(x - 0.35))\n"
    "blocks = (0.23, 0.47), (0.53, 0.77)\n"
    "epsilon = 0.05\n";

}  // namespace

TEST_CASE("config parsing: keys, lists and support sections") {
  const ScenarioConfig c = parse_config(
      "# comment line\n"
      "p = 3   # trailing comment\n"
      "potential = pendulum\n"
      "weight = 1 + x\n"
      "epsilons = 0.1, 0.05,0.025\n"
      "counts = 2\n"
      "h0 = 0.01\n"
      "cells_per_eps = 128\n"
      "tol.neumann = 1e-6\n"
      "support_exact = true\n"
      "[support]\n"
      "s = 0\n"
      "t = 1\n"
      "type = right_end\n"
      "[support]\n"
      "t = 0.5\n"
      "type = left_end\n");
  CHECK(c.p == 3.0);
  CHECK(c.potential == "pendulum");
  CHECK(c.epsilons == std::vector<double>{0.1, 0.05, 0.025});
  CHECK(c.counts == std::vector<int>{2});
  CHECK(c.h0 == 0.01);
  CHECK(c.cells_per_eps == 128.0);
  CHECK(c.tol_neumann == 1e-6);
  CHECK(c.support_exact);
  REQUIRE(c.support.size() == 2);
  CHECK(c.support[0].type == SupportType::kRightEnd);
  CHECK(c.support[1].type == SupportType::kLeftEnd);
  CHECK(c.support[1].s == 0.0);
  CHECK(c.support[1].t == 0.5);

  const ScenarioConfig b = parse_config(kTwoBlock);
  REQUIRE(b.support.size() == 2);
  CHECK(b.support[1].s == 0.53);
  CHECK(b.support[1].type == SupportType::kInterior);
  CHECK(parse_config("counts = auto\n").counts.empty());
}

TEST_CASE("config parse errors carry line and column") {
  ParseError e = parse_error([] { parse_config("p = 2\n  bogus = 1\n"); });
  CHECK(e.line() == 2);
  CHECK(e.column() == 3);
  e = parse_error([] { parse_config("p = 2\np = 3\n"); });
  CHECK(e.line() == 2);
  e = parse_error([] { parse_config("p = two\n"); });
  CHECK(e.line() == 1);
  CHECK(e.column() == 5);
  e = parse_error([] { parse_config("epsilons = 0.1, x\n"); });
  CHECK(e.column() == 17);
  e = parse_error([] { parse_config("\nweight = 1 + * x\n"); });
  CHECK(e.line() == 2);
  CHECK(e.column() == 14);
  e = parse_error([] { parse_config("blocks = (0.1, 0.2), (0.3)\n"); });
  CHECK(e.line() == 1);
  CHECK_THROWS_AS(parse_config("[blocks]\n"), ParseError);
  CHECK_THROWS_AS(parse_config("p\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[support]\ns = 0.1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[support]\nfoo = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("blocks = (0.1, 0.2)\n[support]\ns = 0.1\nt = 0.2\n"), ParseError);
  CHECK_THROWS_AS(parse_config("potential = quartic\n"), ParseError);
  CHECK_THROWS_AS(parse_config("epsilon = 0.1\nepsilons = 0.2\n"), ParseError);
}

TEST_CASE("scenario validation names the invariant") {
  auto invariant = [](const std::string& text) {
    try {
      Scenario sc(parse_config(text));
    } catch (const ValidationError& e) {
      return e.invariant();
    }
    return std::string("none");
  };
  CHECK(invariant("p = 0.5\nweight = 1 + x\n") == "p > 1");
  CHECK(invariant("p = 20\nweight = 1 + x\n") == "p in [1.1, 10]");
  CHECK(invariant("p = 2\n") == "exactly one of weight, weight_samples");
  CHECK(invariant("weight = 1 + x\nepsilons = 0.1, -0.1\n") == "eps > 0");
  CHECK(invariant("weight = 1 + x\ncells_per_eps = 2\n") == "cells_per_eps >= 8");
  CHECK(invariant(std::string(kTwoBlock) + "counts = 1, 2, 3\n") == "one count per interior support component");
  CHECK(invariant("weight = x - 0.5\n") != "none");
  CHECK(invariant("weight = 1 + x\n") == "none");
}

TEST_CASE("weights from a sample file next to the config") {
  const fs::path dir = scratch("samples");
  std::string rows = "x,a\n";
  for (int i = 0; i <= 100; ++i) {
    const double x = i / 100.0;
    rows += std::to_string(x) + "," + std::to_string(1.0 + x * x) + "\n";
  }
  put(dir / "a.csv", rows);
  put(dir / "s.cfg", "weight_samples = a.csv\n");
  const Scenario sc(load_config((dir / "s.cfg").string()));
  CHECK(sc.a(0.5) == doctest::Approx(1.25).epsilon(1e-5));
  CHECK(sc.a.a_prime(0.5) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("exit codes per error class") {
  auto code = [](auto thrower) {
    std::ostringstream err;
    try {
      thrower();
    } catch (...) {
      return exit_code_for_current_exception(err);
    }
    return 0;
  };
  CHECK(code([] { throw ParseError("x", 1, 1); }) == 2);
  CHECK(code([] { throw ValidationError("p > 1", "x"); }) == 3);
  CHECK(code([] { throw DomainError("x"); }) == 3);
  CHECK(code([] { throw NumericalError("x"); }) == 4);
  CHECK(code([] { throw OptimizationError("x", 1.0); }) == 4);
  CHECK(code([] { throw ConstructionError("x", 2); }) == 4);
}

TEST_CASE("timemap output approaches 2 pi at the top and is byte-reproducible") {
  const fs::path dir = scratch("timemap");
  const Scenario sc(parse_config("p = 2\nweight = 1\ntimemap_nodes = 50\n"));
  std::ostringstream log;
  run("timemap", sc, {(dir / "a").string(), 1, 0}, log);
  run("timemap", sc, {(dir / "b").string(), 2, 0}, log);
  const std::string A = slurp(dir / "a" / "timemap.csv"), B = slurp(dir / "b" / "timemap.csv");
  CHECK(A == B);
  CHECK(first_line(A) == "xi,T,K,G");
  std::istringstream in(A);
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  double xi = 0, T = 0;
  CHECK(std::sscanf(last.c_str(), "%lf,%lf", &xi, &T) == 2);
  CHECK(xi == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(std::abs(T - 2 * M_PI) < 1e-6);
  CHECK(fs::exists(dir / "a" / "manifest.json"));
}

TEST_CASE("profile output header") {
  const fs::path dir = scratch("profile");
  const Scenario sc(parse_config(std::string(kTwoBlock) + "profile_nodes = 501\n"));
  std::ostringstream log;
  run("profile", sc, {dir.string(), 1, 0}, log);
  CHECK(first_line(slurp(dir / "profile.csv")) == "x,E,residual");
}

TEST_CASE("command line: solve then verify, and exit statuses") {
  const fs::path dir = scratch("cli");
  put(dir / "ok.cfg", std::string(kTwoBlock) + "tol.energy_error = 0.2\n");
  put(dir / "bad_p.cfg", "p = 0.5\nweight = 1 + x\n");
  put(dir / "bad_key.cfg", "p = 2\nwieght = 1 + x\n");
  const std::string out = (dir / "out").string();
  CHECK(run_cli("solve --config " + (dir / "ok.cfg").string() + " --out " + out) == 0);
  CHECK(first_line(slurp(dir / "out" / "solution_eps0.05.csv")) == "x,u,uprime,E_eps");
  CHECK(first_line(slurp(dir / "out" / "junctions_eps0.05.csv")) ==
        "j,tau_j,left_derivative,right_derivative,m_j");
  CHECK(run_cli("verify --config " + (dir / "ok.cfg").string() + " --out " + out + " --seed 9") == 0);
  const std::string v = slurp(dir / "out" / "verify.csv");
  CHECK(first_line(v) == "check,target,value,tol,pass");
  CHECK(v.find(",false\n") == std::string::npos);
  CHECK(v.find("zero_count_block2[eps=0.05],1,1,0,true") != std::string::npos);
  CHECK(run_cli("verify --config " + (dir / "bad_p.cfg").string() + " --out " + out) == 3);
  CHECK(run_cli("timemap --config " + (dir / "bad_key.cfg").string()) == 2);
  CHECK(run_cli("frobnicate --config " + (dir / "ok.cfg").string()) == 2);
  CHECK(run_cli("timemap") == 2);
  // verify without stored solutions for the configured epsilons
  put(dir / "other.cfg", std::string(kTwoBlock) + "epsilons = 0.07\n");
  CHECK(run_cli("verify --config " + (dir / "other.cfg").string() + " --out " + out) == 2);
}

TEST_CASE("shipped configurations parse and validate") {
  for (const auto& e : fs::directory_iterator(PLAP_CONFIG_DIR)) {
    if (e.path().extension() != ".cfg") continue;
    CAPTURE(e.path().string());
    CHECK_NOTHROW(Scenario(load_config(e.path().string())));
  }
}

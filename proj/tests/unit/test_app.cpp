#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unistd.h>

#include "mixp/app.hpp"

using namespace mixp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("mixp_unit_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return (path / name).string();
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

int run_quiet(std::string_view sub, const RunOptions& opt, std::string* log = nullptr) {
  std::ostringstream os;
  const int code = run(sub, opt, os);
  if (log) *log = os.str();
  return code;
}

}  // namespace

TEST_CASE("exit codes per failure class") {
  CHECK(exit_code(ErrorKind::config) == 1);
  CHECK(exit_code(ErrorKind::invalid_input) == 1);
  CHECK(exit_code(ErrorKind::non_convergence) == 2);
  CHECK(exit_code(ErrorKind::divergence) == 2);
  CHECK(exit_code(ErrorKind::invariant_violation) == 3);
  CHECK(exit_code(ErrorKind::verification) == 3);
  CHECK(exit_code(ErrorKind::io) == 4);
}

TEST_CASE("interpolation error of exact nodal values") {
  // the linear interpolant of x(1-x)/2 misses by h^2/8 at every midpoint
  const auto target = Expression::parse("x*(1 - x)/2");
  for (int m : {7, 15, 31}) {
    const auto g = make_grid(1, {1, 1}, {m, m}, 0.1);
    const GridFunction u(g, target.evaluate_on(*g));
    const double h = g->h(0);
    CHECK(interpolation_error(u, target) == doctest::Approx(h * h / 8).epsilon(1e-12));
  }
  const auto g2 = make_grid(2, {1, 1}, {5, 5}, 0.1);
  CHECK(interpolation_error(GridFunction(g2), Expression::parse("0")) == 0.0);
  CHECK(interpolation_error(GridFunction(g2), Expression::parse("x")) == doctest::Approx(1.0));
}

TEST_CASE("initial fields") {
  const auto g = make_grid(1, {1, 1}, {9, 9}, 0.1);
  CHECK(initial_field(g, 0).sup_abs() == 0.0);
  const auto a = initial_field(g, 5), b = initial_field(g, 5), c = initial_field(g, 6);
  CHECK((a - b).sup_abs() == 0.0);
  CHECK((a - c).sup_abs() > 0.0);
  CHECK(a.inf() >= 0.0);
  CHECK(a.sup() < 1.0);
}

TEST_CASE("run: zero source, solve and failures") {
  TempDir dir;
  RunOptions opt;
  opt.config_path = dir.write("zero.json", R"({"domain": {"M": 15}, "gamma": "0.5", "f": "0"})");
  opt.out = (dir.path / "zero").string();
  REQUIRE(run_quiet("sequence", opt) == 0);
  const std::string csv = slurp(dir.path / "zero" / "solution.csv");
  const auto hash = load_config(*opt.config_path).hash();
  CHECK(csv.rfind("# config_hash=" + hash + "\n# seed=0\nx,u\n", 0) == 0);
  CHECK(csv.find(",0\n") != std::string::npos);
  const auto j = nlohmann::json::parse(slurp(dir.path / "zero" / "sequence.json"));
  CHECK(j["config_hash"] == hash);
  CHECK(j["violations"].empty());
  for (const auto& e : fs::directory_iterator(dir.path / "zero")) CHECK(e.path().extension() != ".tmp");

  opt.config_path = dir.write("one.json", R"({"domain": {"M": 15}, "gamma": "0.5", "f": "1", "n": 4})");
  opt.out = (dir.path / "solve").string();
  opt.seed = 3;
  REQUIRE(run_quiet("solve", opt) == 0);
  const auto s = nlohmann::json::parse(slurp(dir.path / "solve" / "solve.json"));
  CHECK(s["seed"] == 3);
  CHECK(s["n"] == 4.0);
  CHECK(s["solver"]["residual"].get<double>() < 1e-8);

  std::string log;
  CHECK(run_quiet("frobnicate", opt, &log) == 1);
  CHECK(log.find("unknown subcommand") != std::string::npos);
  opt.config_path = (dir.path / "missing.json").string();
  CHECK(run_quiet("sequence", opt) == 4);
  opt.config_path = dir.write("bad.json", R"({"domain": {"M": 15}, "gamma": "-1", "f": "1"})");
  CHECK(run_quiet("sequence", opt, &log) == 1);
  CHECK(log.find("gamma must be positive") != std::string::npos);
  opt.config_path = dir.write("one.json", R"({"domain": {"M": 15}, "gamma": "0.5", "f": "1"})");
  opt.out = "/proc/mixp_cannot_write_here";
  CHECK(run_quiet("solve", opt) == 4);
  RunOptions none;
  CHECK(run_quiet("sequence", none) == 1);
}

TEST_CASE("run: unsettled sequence is an invariant failure") {
  // a schedule far too short for the source scale: the norm plateau check fails
  TempDir dir;
  RunOptions opt;
  opt.config_path = dir.write("short.json", R"j({"domain": {"dim": 2, "M": 15, "delta": 0.2},
    "exponents": {"a": 0.05, "b": 0.05}, "gamma": "0.5", "f": "100*(1 + x*y)", "schedule_k": 6})j");
  opt.out = dir.path.string();
  std::string log;
  CHECK(run_quiet("sequence", opt, &log) == 3);
  CHECK(log.find("violation (norm-plateau)") != std::string::npos);
  CHECK(fs::exists(dir.path / "sequence.json"));
}

TEST_CASE("overrides") {
  TempDir dir;
  RunOptions opt;
  opt.config_path = dir.write("c.json", R"({"domain": {"M": 15}, "gamma": "0.5", "f": "1", "seed": 2})");
  const auto base = load_config(*opt.config_path, opt);
  opt.seed = 9;
  opt.schedule_k = 4;
  const auto over = load_config(*opt.config_path, opt);
  CHECK(base.seed == 2);
  CHECK(over.seed == 9);
  CHECK(over.schedule_k == 4);
  CHECK(over.hash() != base.hash());
  opt.schedule_k = 99;
  CHECK_THROWS_AS(load_config(*opt.config_path, opt), ConfigError);
}

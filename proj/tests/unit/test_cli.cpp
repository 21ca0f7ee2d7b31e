#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "json.hpp"

#include "magflow/cli.hpp"
#include "magflow/errors.hpp"
#include "magflow/numerics.hpp"

using namespace magflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "magflow-cli-test" / name;
  fs::remove_all(p);
  return p;
}

RunConfig with_output(const std::string& text, const fs::path& out) {
  RunConfig cfg = parse_config(text);
  cfg.run.output = out;
  return cfg;
}

nlohmann::json run(const RunConfig& cfg, const std::string& command, int& code) {
  std::ostringstream line;
  code = execute(cfg, command, line);
  return nlohmann::json::parse(line.str());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

int line_of_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line;
  }
  return -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig cfg = parse_config("[surface]\nkind=sphere\n[run]\ns=2\n");
  CHECK(cfg.surface.kind == "sphere");
  REQUIRE(cfg.run.k);
  CHECK(*cfg.run.k == doctest::Approx(0.125));
  CHECK(*cfg.run.s == 2);

  const RunConfig bump = parse_config(
      "[surface]\nkind=torus\n[field]\nkind=bump\namp=-2\n[run]\nk=0.5\nseed_circles=0.5 0.5 0.1 cw, 0.2 0.3 0.05\n");
  CHECK(bump.surface.kind == "flat_torus");
  CHECK(*bump.run.s == doctest::Approx(1));
  REQUIRE(bump.run.seed_circles.size() == 2);
  CHECK_FALSE(bump.run.seed_circles[0].counter_clockwise);
  CHECK(bump.run.seed_circles[1].counter_clockwise);
  CHECK(bump.run.seed_circles[1].radius == doctest::Approx(0.05));

  CHECK(parse_config("[field]\nconstant=-3\n").field.value == -3);
}

TEST_CASE("config errors carry line numbers") {
  CHECK_THROWS_AS(parse_config("[run]\nk=1\ns=1\n"), ConfigError);
  CHECK(line_of_error("[surface]\nkind=sphere\nfoo=1\n") == 3);
  CHECK(line_of_error("[surface]\nkind=sphere\n[bogus]\nx=1\n") == 3);
  CHECK(line_of_error("[run]\ns=-1\n") == 2);
  CHECK(line_of_error("[solver]\nk_lo=2\nk_hi=1\n") > 0);
  CHECK_THROWS_AS(parse_config("[surface]\nkind=hyperbolic\ngenus=1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[surface]\nkind=klein\n"), ConfigError);
}

TEST_CASE("genus two surface builds") {
  const RunConfig cfg = parse_config("[surface]\nkind=hyperbolic\ngenus=2\n[run]\ns=2\n");
  const MagneticSystem sys = build_system(cfg);
  CHECK(sys.surface().euler_characteristic() == -2);
}

TEST_CASE("oracle summary") {
  const fs::path out = scratch("oracle");
  int code = -1;
  const auto j = run(with_output("[surface]\nkind=sphere\n[run]\ns=1\n", out), "oracle", code);
  CHECK(code == 0);
  CHECK(j["exists_contractible"] == true);
  CHECK(j["radius"].get<double>() == doctest::Approx(0.7853981633974483));
  CHECK(j["period"].get<double>() == doctest::Approx(4.442882938158366));
  CHECK(fs::exists(out / "summary.json"));
  CHECK(fs::exists(out / "trajectory.csv"));
}

TEST_CASE("descent from a tiny loop collapses") {
  const fs::path out = scratch("collapse");
  int code = -1;
  const auto j =
      run(with_output("[surface]\nkind=sphere\n[run]\ns=1\nseed_radius=0.001\n", out), "orbit-descend", code);
  CHECK(code == 1);
  CHECK(j["outcome"] == "collapse");
}

TEST_CASE("critical values on genus two") {
  const fs::path out = scratch("critical");
  int code = -1;
  const auto j = run(with_output("[surface]\nkind=hyperbolic\ngenus=2\n[run]\ns=2\n", out), "critical", code);
  CHECK(code == 0);
  CHECK(j["c_h"].get<double>() == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(j["homogeneous_c"].get<double>() == doctest::Approx(0.5));
}

TEST_CASE("orbit shooting is deterministic and writes plots") {
  const std::string text = "[surface]\nkind=sphere\n[run]\ns=1\n";
  const fs::path a = scratch("det-a"), b = scratch("det-b");
  int ca = -1, cb = -1;
  run(with_output(text, a), "orbit-shoot", ca);
  run(with_output(text, b), "orbit-shoot", cb);
  CHECK(ca == 0);
  CHECK(cb == 0);
  for (const char* name : {"summary.json", "orbit.json", "trajectory.csv"}) {
    INFO(name);
    CHECK(slurp(a / name) == slurp(b / name));
  }
  bool has_plot = false;
  for (const auto& e : fs::directory_iterator(a)) has_plot |= e.path().extension() == ".gp";
  CHECK(has_plot);
}

TEST_CASE("sweep runs every value") {
  const fs::path out = scratch("sweep");
  int code = -1;
  const auto j = run(with_output("[surface]\nkind=torus\n[run]\ns=1\nsweep=0.5 1 2\n", out), "sweep", code);
  CHECK(code == 0);
  REQUIRE(j["runs"].size() == 3);
  CHECK(fs::exists(out / "sweep.csv"));
  CHECK(fs::exists(out / "run_2" / "summary.json"));
}

TEST_CASE("thread count override") {
  ::setenv("MAGFLOW_THREADS", "3", 1);
  CHECK(thread_count() == 3);
  ::unsetenv("MAGFLOW_THREADS");
  CHECK(thread_count() >= 1);
}

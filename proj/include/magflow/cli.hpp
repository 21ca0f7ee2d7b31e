#pragma once
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "magflow/magnetic.hpp"

namespace magflow {

struct SurfaceSpec {
  std::string kind = "flat_torus";  // sphere | flat_torus | hyperbolic | conformal_torus
  int genus = 0;
  double lx = 1, ly = 1;
  // conformal factor u = amp cos(2 pi (nx x / lx + ny y / ly)), or a grid CSV
  double conformal_amp = 0;
  int conformal_nx = 1, conformal_ny = 0;
  std::string conformal_csv;
};

struct FieldSpec {
  std::string kind = "constant";  // constant | cosine | bump | sphere_height | csv
  double value = 1;
  double amp = 1, offset = 0;
  int nx = 1, ny = 0;
  double base = 0, width = 0.15, cx = 0.5, cy = 0.5;
  bool zero_mean = false;
  double c0 = 0, c1 = 1;
  std::string csv, csv_column = "f";
};

struct SolverSpec {
  double dt = 1e-3;
  double tol = 1e-10;
  int max_iter = 50;
  double fd_step = 1e-7;
  double max_time = 1000;
  bool lattice_section = false;
  double t_end = 100;
  int loop_vertices = 256;
  std::optional<double> loop_period;
  double descent_tol = 1e-8;
  int descent_max_iter = 5000;
  double period_min = 1e-4;
  double taimanov_tol = 1e-3;
  double l_min = 1e-3;
  double cfl = 0.25;
  int taimanov_max_iter = 400000;
  bool saddle = false;
  int snapshot_every = 0;
  int segments = 16;
  std::optional<double> k_lo, k_hi;
  int bisection_iterations = 20;
  int c0_grid = 64;
  int c0_budget = 1800;
  int sm_grid = 128;
  int fiber_grid = 64;
  double structural_h = 1e-2;
};

struct CircleSeed {
  int chart = 0;
  double u = 0, v = 0, radius = 0;
  bool counter_clockwise = true;
};

struct RunSpec {
  std::optional<double> k, s;  // after parsing both are set when either was given
  std::filesystem::path output = "magflow-out";
  int seed_chart = 0;
  std::optional<double> seed_u, seed_v;
  double seed_heading = 0;
  double seed_radius = 0.25;
  std::vector<CircleSeed> seed_circles;
  std::vector<double> sweep;  // values in the unit of whichever of k / s was given
  bool sweep_in_s = true;
  std::string sweep_command = "orbit-shoot";
  std::string candidate = "auto";  // auto | plus | minus | exact | nonexact | closed
  unsigned rng_seed = 7;
};

struct RunConfig {
  SurfaceSpec surface;
  FieldSpec field;
  SolverSpec solver;
  RunSpec run;
  std::filesystem::path base_dir;  // relative CSV paths resolve against this
};

// INI text with sections [surface], [field], [solver], [run]. Throws
// ConfigError (with the line number where one applies).
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir = {});
RunConfig parse_config_file(const std::filesystem::path& path);

MagneticSystem build_system(const RunConfig& cfg);

const std::vector<std::string>& subcommands();

// Runs one subcommand, writes artifacts into cfg.run.output and one JSON line
// to `out`. Returns 0 on success, 1 on solver non-convergence, 2 on
// configuration or domain errors.
int execute(const RunConfig& cfg, const std::string& subcommand, std::ostream& out);

}  // namespace magflow

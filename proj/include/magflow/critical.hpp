#pragma once
#include <optional>
#include <string>
#include <vector>

#include "magflow/magnetic.hpp"

namespace magflow {

// -[sigma]^2 / (4 pi chi [mu]); genus >= 2 only.
double c_h_value(const MagneticSystem& sys);

// Mane critical value of the constant-field hyperbolic surface, c^2 / 2.
double homogeneous_mane_value(const MagneticSystem& sys);

struct C0Params {
  int grid = 64;
  std::vector<double> betas{10.0, 100.0, 1000.0};
  int stage_iterations = 600;
  // total gradient steps; beyond the schedule the last temperature is kept,
  // so a larger budget only extends the same iterate sequence
  int budget = 1800;
};

struct C0Bound {
  double value = 0;     // max of |theta| over the evaluation grid
  PrimitivePtr witness;
  double c1 = 0, c2 = 0;  // harmonic part of the witness
  int iterations = 0;
  std::vector<double> history;  // best-so-far after each step
};

// Upper bound for inf over primitives of sup |theta| on an exact torus field,
// by smoothed-max descent over theta* + d phi + c1 dx + c2 dy.
C0Bound c0_upper_bound(const MagneticSystem& sys, const C0Params& params = {});

// Max over the n x n node grid of |theta|_g.
double grid_sup_norm(const SurfaceModel& s, const Primitive& theta, int n);

struct CriticalReport {
  std::optional<double> c_h, c0_upper, tau, homogeneous_c;
};

// Columns x,y,theta_u,theta_v,norm on the n x n node grid of the torus cell.
void write_primitive_grid_csv(const std::string& path, const SurfaceModel& s, const Primitive& theta, int n);

}  // namespace magflow

#pragma once
#include <string>
#include <vector>

#include "magflow/magnetic.hpp"

namespace magflow {

struct TangentState {
  ChartPoint q;
  Vec2 v = Vec2::Zero();
};

struct StateDerivative {
  Vec2 dq, dv;
};

struct Sample {
  double t;
  TangentState state;
};

struct Trajectory {
  std::vector<Sample> samples;
  double dt = 0;
  bool truncated = false;
  std::string truncation_reason;
  double max_energy_drift = 0;  // max relative |E(t) - E(0)| / E(0)
};

// Poincare section {coordinate `coord` of chart `chart` equals `value`},
// crossed with the sign of `direction` (+1 increasing, -1 decreasing). On the
// torus, `lattice` makes every lattice translate of the line count as well.
struct Section {
  int chart = 0;
  int coord = 0;
  double value = 0;
  int direction = 1;
  bool lattice = false;
};

struct ReturnResult {
  TangentState state;
  double time;
  double residual;  // section residual at the refined crossing
};

StateDerivative vector_field_eval(const MagneticSystem& sys, const TangentState& x);
double energy_of(const MagneticSystem& sys, const TangentState& x);
// Rescale the velocity so that the energy equals k.
TangentState with_energy(const MagneticSystem& sys, const TangentState& x, double k);

TangentState rk4_step(const MagneticSystem& sys, const TangentState& x, double h);
Trajectory integrate(const MagneticSystem& sys, const TangentState& x0, double t_end, double dt);

double section_residual(const MagneticSystem& sys, const Section& sec, const TangentState& x);
ReturnResult poincare_return(const MagneticSystem& sys, const Section& sec, const TangentState& x0,
                             double max_time, double dt = 1e-3);

// Geodesic curvature at each sample from 4th-order central differences of the
// sampled velocities; NaN where the stencil does not fit (ends, uneven steps).
std::vector<double> extract_curvature(const MagneticSystem& sys, const Trajectory& tr);

// Max |kappa - s f| over samples with a valid curvature estimate.
double curvature_residual(const MagneticSystem& sys, const Trajectory& tr, double s);

void write_trajectory_csv(const std::string& path, const MagneticSystem& sys, const Trajectory& tr);

}  // namespace magflow

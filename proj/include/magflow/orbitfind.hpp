#pragma once
#include <optional>
#include <string>
#include <vector>

#include "magflow/dynamics.hpp"

namespace magflow {

enum class OracleKind { Sphere, Torus, Hyperbolic };

struct OracleResult {
  bool exists_contractible = false;
  std::optional<double> radius, period;
};

// Closed-form magnetic circles of the homogeneous systems (|K| = 1 or flat, f = 1).
OracleResult homogeneous_oracle(OracleKind kind, double s);

struct Homotopy {
  bool contractible = true;
  int m = 0, n = 0;  // torus winding of the lift
};

struct Orbit {
  Trajectory trajectory;
  double period = 0;
  double energy = 0;
  double s = 0;
  Homotopy homotopy;
  double curvature_residual = 0;
  double closure_gap = 0;
  int newton_iterations = 0;
};

struct ShootParams {
  double tol = 1e-10;
  int max_iter = 50;
  double fd_step = 1e-7;
  double dt = 1e-3;
  double max_time = 1000;
  bool lattice_section = false;  // torus: count lattice translates of the section
};

// Section through a state, transverse to its velocity; `lattice` selects
// lattice-periodic sections on the torus (needed for non-contractible orbits).
Section section_through(const MagneticSystem& sys, const TangentState& x, bool lattice = false);

Orbit shoot_periodic(const MagneticSystem& sys, double k, const TangentState& seed, const Section& section,
                     const ShootParams& params = {});
Orbit shoot_periodic(const MagneticSystem& sys, double k, const TangentState& seed, const ShootParams& params = {});

// Multiple shooting through nodes sampled along a guessed cycle of the given
// period; for orbits too unstable for a single return map. closure_gap is the
// largest node-matching defect.
Orbit shoot_multiple(const MagneticSystem& sys, double k, const std::vector<TangentState>& nodes, double period,
                     const ShootParams& params = {});

// Geodesic radius of the circle best fitting the samples (sphere: plane fit in
// R^3, torus: algebraic circle fit, hyperbolic: circle fit in the half-plane).
double measure_geodesic_radius(const MagneticSystem& sys, const Trajectory& tr);

struct EuclideanCircle {
  Vec2 centre;
  double radius;
};
EuclideanCircle fit_circle(const std::vector<Vec2>& pts);

// ---- free-period action on polygons ----

struct DiscreteLoop {
  std::vector<ChartPoint> vertices;  // one chart; torus vertices are lifts
  double T = 1;
  int m = 0, n = 0;                  // torus winding: x_N = x_0 + (m lx, n ly)
  int size() const { return static_cast<int>(vertices.size()); }
  bool contractible() const { return m == 0 && n == 0; }
};

// Oracle-style circle loop of chart radius rho around a chart point.
DiscreteLoop circle_loop(int chart, const Vec2& centre, double rho, int N, double T);

// Primitive used for the flux term: a chart-local line integral for
// contractible loops, the periodic primitive (with harmonic part) otherwise.
PrimitivePtr loop_primitive(const MagneticSystem& sys, const DiscreteLoop& loop, double c1 = 0, double c2 = 0);

struct LoopMeasures {
  double length;       // sum of metric segment lengths
  double energy;       // e = N sum |dx|_g^2 (unit-interval parametrisation)
  double mean_energy;  // time average of the kinetic energy
};
LoopMeasures loop_measures(const MagneticSystem& sys, const DiscreteLoop& loop);

// Same polygon resampled at equal metric spacing (linear within segments).
DiscreteLoop reparametrize_uniform(const MagneticSystem& sys, const DiscreteLoop& loop);

double discrete_action(const DiscreteLoop& loop, const MagneticSystem& sys, double k, const Primitive& theta);
double discrete_action(const DiscreteLoop& loop, const MagneticSystem& sys, double k);

struct ActionGradient {
  std::vector<Vec2> vertex;
  double dT = 0;
};
ActionGradient discrete_action_gradient(const DiscreteLoop& loop, const MagneticSystem& sys, double k,
                                        const Primitive& theta);
ActionGradient discrete_action_gradient(const DiscreteLoop& loop, const MagneticSystem& sys, double k);

// Norm of the gradient in the dual of the discrete W^{1,2} x R metric.
double gradient_dual_norm(const DiscreteLoop& loop, const MagneticSystem& sys, const ActionGradient& g);

struct DescentParams {
  double tol = 1e-8;
  double T_min = 1e-4;
  int max_iter = 5000;
  double newton_switch = 5e-2;  // dual gradient norm below which Newton steps are tried
  double c1 = 0, c2 = 0;        // harmonic part for non-contractible torus loops
};

enum class DescentOutcome { Converged, Collapsed, MaxIterations };

struct DescentResult {
  DiscreteLoop loop;
  DescentOutcome outcome = DescentOutcome::MaxIterations;
  int iterations = 0;
  int newton_steps = 0;
  double grad_norm = 0;
  double action = 0;
  double mean_energy = 0;
};

DescentResult descend_to_critical(const DiscreteLoop& loop0, const MagneticSystem& sys, double k,
                                  const DescentParams& params = {});

const char* outcome_name(DescentOutcome o);

// Shooting seeded from vertex 0 of a loop with the polygon's velocity.
Orbit loop_to_orbit(const MagneticSystem& sys, double k, const DiscreteLoop& loop, const ShootParams& params = {});

Homotopy homotopy_of(const MagneticSystem& sys, const Trajectory& tr);

void write_orbit_json(const std::string& path, const Orbit& orbit);
void write_loop_csv(const std::string& path, const DiscreteLoop& loop);

}  // namespace magflow

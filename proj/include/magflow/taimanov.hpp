#pragma once
#include <optional>
#include <string>
#include <vector>

#include "magflow/orbitfind.hpp"

namespace magflow {

// Closed polygon in one chart (torus: lifted coordinates). The bounded region
// lies on the left, so clockwise curves carry the reversed orientation.
struct RegionCurve {
  int chart = 0;
  std::vector<Vec2> points;
  double h = 0;  // target metric spacing for resampling; 0 picks length / 96
  int size() const { return static_cast<int>(points.size()); }
};

RegionCurve circle_curve(int chart, const Vec2& centre, double rho, int n, bool counter_clockwise = true);

double curve_length(const SurfaceModel& s, const RegionCurve& c);
// Signed flux of sigma through the disc bounded by c (fan triangulation).
double enclosed_flux(const MagneticSystem& sys, const RegionCurve& c);

// Throws InvalidRegion on self-intersection or intersection between curves.
void check_simple(const std::vector<RegionCurve>& curves);

// sqrt(2k) * length - flux. With `complement`, the region is the rest of the
// (compact) surface with the opposite orientation.
double taimanov_value(const std::vector<RegionCurve>& curves, const MagneticSystem& sys, double k,
                     bool complement = false);

// Per-vertex signed geodesic curvature and max |kappa - s f|.
std::vector<double> curve_curvature(const SurfaceModel& s, const RegionCurve& c);
double stationarity_residual(const std::vector<RegionCurve>& curves, const MagneticSystem& sys, double k);

struct TaimanovParams {
  double tol = 1e-3;      // on max |kappa - s f|
  double l_min = 1e-3;    // curves shorter than this vanish
  double cfl = 0.25;      // sqrt(2k) dt / h^2
  int max_iter = 400000;
  int check_every = 50;   // self-intersection check period
  bool saddle = false;    // ascend in the mean normal mode (finds the unstable f = const circles)
  std::optional<double> stop_below;  // stop as soon as the value drops below this
  int snapshot_every = 0;
};

enum class TaimanovOutcome { Stationary, Vanished, SelfIntersected, MaxIterations, BelowThreshold };
const char* outcome_name(TaimanovOutcome o);

struct TaimanovSnapshot {
  int iteration;
  std::vector<RegionCurve> curves;
};

struct TaimanovResult {
  double value = 0;
  std::vector<RegionCurve> curves;
  double residual = 0;
  TaimanovOutcome outcome = TaimanovOutcome::MaxIterations;
  int iterations = 0;
  std::vector<TaimanovSnapshot> snapshots;
};

TaimanovResult evolve_minimize(const std::vector<RegionCurve>& seeds, const MagneticSystem& sys, double k,
                               const TaimanovParams& params = {});

// Closes a stationary curve into a periodic orbit by multiple shooting from
// `segments` vertices (period guess: metric length / speed).
Orbit refine_to_orbit(const MagneticSystem& sys, double k, const RegionCurve& curve, int segments = 16,
                      const ShootParams& params = {});

struct TauEstimate {
  double tau;
  double k_lo, k_hi;  // final bracket
  int evolutions;
};

// Bisection on k for the sign change of the best minimised value over the
// seeds (each seed evolved separately, concurrently).
TauEstimate tau_estimate(const MagneticSystem& sys, const std::vector<RegionCurve>& seeds, double k_lo, double k_hi,
                         int iterations = 20, const TaimanovParams& params = {});

// Smallest value over seeds, evolved concurrently; vanished seeds count as 0.
double best_minimised_value(const MagneticSystem& sys, const std::vector<RegionCurve>& seeds, double k,
                            const TaimanovParams& params, int* evolutions = nullptr);

// Columns iter,vertex,u,v (curve index appended when several curves).
void write_snapshots_csv(const std::string& path, const std::vector<TaimanovSnapshot>& snaps);

}  // namespace magflow

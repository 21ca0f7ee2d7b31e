#include <doctest.h>

#include <cmath>
#include <numbers>

#include "magflow/dynamics.hpp"
#include "magflow/errors.hpp"

using namespace magflow;

namespace {
constexpr double kPi = std::numbers::pi;
const MagneticSystem& sphere() {
  static const MagneticSystem s(SurfaceModel::sphere(), MagneticField::constant(1));
  return s;
}
}  // namespace

TEST_CASE("vector field examples") {
  const MagneticSystem flat0(SurfaceModel::flat_torus(), MagneticField::constant(0));
  const StateDerivative d = vector_field_eval(flat0, {{0, 0.2, 0.3}, Vec2(0.4, -1)});
  CHECK(d.dv.norm() == 0);
  CHECK(d.dq.isApprox(Vec2(0.4, -1)));

  // unit speed at the chart origin of the sphere, where exp(lam) = 2
  const TangentState x{{0, 0, 0}, Vec2(0.5, 0)};
  const StateDerivative f = vector_field_eval(sphere(), x);
  const ChartPoint& p = x.q;
  CHECK(norm(sphere().surface(), p, f.dv) == doctest::Approx(1));
  CHECK(std::abs(inner(sphere().surface(), p, f.dv, x.v)) < 1e-14);

  const StateDerivative z = vector_field_eval(sphere(), {{0, 0.3, 0.1}, Vec2::Zero()});
  CHECK(z.dq.norm() == 0);
  CHECK(z.dv.norm() == 0);
}

TEST_CASE("energy examples") {
  CHECK(energy_of(sphere(), {{0, 0.1, 0.2}, Vec2::Zero()}) == 0);
  const MagneticSystem flat(SurfaceModel::flat_torus(), MagneticField::constant(1));
  CHECK(energy_of(flat, {{0, 0, 0}, Vec2(1, 0)}) == doctest::Approx(0.5));
  const MagneticSystem hyp(SurfaceModel::hyperbolic(), MagneticField::constant(1));
  CHECK(energy_of(hyp, {{0, 0, 2}, Vec2(2, 0)}) == doctest::Approx(0.5));
}

TEST_CASE("one sphere period returns to the start") {
  // s = 1: radius pi/4 circle about the chart origin, period pi sqrt 2
  const TangentState x{{0, std::tan(kPi / 8), 0}, Vec2(0, 1)};
  const TangentState x0 = with_energy(sphere(), x, 0.5);
  const Trajectory tr = integrate(sphere(), x0, kPi * std::sqrt(2.0), 1e-3);
  const TangentState& end = tr.samples.back().state;
  CHECK(end.q.chart == x0.q.chart);
  CHECK((end.q.xy() - x0.q.xy()).norm() < 1e-8);
  CHECK((end.v - x0.v).norm() < 1e-8);
  CHECK(tr.max_energy_drift < 1e-9);
  CHECK(curvature_residual(sphere(), tr, 1.0) < 1e-6);
}

TEST_CASE("straight lines on the flat torus") {
  const MagneticSystem flat0(SurfaceModel::flat_torus(), MagneticField::constant(0));
  const Trajectory tr = integrate(flat0, {{0, 0.25, 0.5}, Vec2(1, 0)}, 1.0, 1e-3);
  CHECK(tr.samples.back().t == doctest::Approx(1));
  CHECK((tr.samples.back().state.q.xy() - Vec2(1.25, 0.5)).norm() < 1e-12);
}

TEST_CASE("speed is constant and curvature is prescribed") {
  const MagneticSystem sys(SurfaceModel::conformal_torus(PlanarFunction::cosine(0.2, 1, 1, 1, 1)),
                           MagneticField(PlanarFunction::bump(1, -2, 0.2, 0.5, 0.5, 1, 1, false)));
  const double k = 0.3;
  const TangentState x = with_energy(sys, {{0, 0.2, 0.3}, Vec2(1, 0.5)}, k);
  const Trajectory tr = integrate(sys, x, 20, 1e-3);
  double worst = 0;
  for (const Sample& s : tr.samples)
    worst = std::max(worst, std::abs(norm(sys.surface(), s.state.q, s.state.v) - std::sqrt(2 * k)));
  CHECK(worst < 1e-9);
  CHECK(curvature_residual(sys, tr, s_of_energy(k)) < 1e-6);
}

TEST_CASE("energy drift converges at fourth order") {
  const MagneticSystem sys(SurfaceModel::flat_torus(),
                           MagneticField(PlanarFunction::cosine(3, 1, 1, 1, 1, 0.5)));
  const TangentState x = with_energy(sys, {{0, 0.2, 0.3}, Vec2(1, 0.3)}, 0.5);
  double prev = 0;
  for (double dt : {4e-2, 2e-2, 1e-2}) {
    const double d = integrate(sys, x, 10, dt).max_energy_drift;
    if (prev > 0) CHECK(std::log2(prev / d) > 3.3);
    prev = d;
  }
}

TEST_CASE("rescaling lemma") {
  // (g, sigma) at energy k, time s t, equals (g, s sigma) at energy 1/2, time t
  const double k = 0.08, s = s_of_energy(k);
  const MagneticSystem a(SurfaceModel::flat_torus(), MagneticField(PlanarFunction::cosine(1, 1, 1, 1, 1, 0.4)));
  const MagneticSystem b(SurfaceModel::flat_torus(), MagneticField(PlanarFunction::cosine(s, 1, 1, 1, 1, 0.4 * s)));
  const TangentState xa = with_energy(a, {{0, 0.1, 0.2}, Vec2(1, 1)}, k);
  const TangentState xb{xa.q, xa.v * s};
  const double t = 3;
  const TangentState ea = integrate(a, xa, s * t, 1e-3 * s).samples.back().state;
  const TangentState eb = integrate(b, xb, t, 1e-3).samples.back().state;
  CHECK((ea.q.xy() - eb.q.xy()).norm() < 1e-10);
  CHECK((ea.v * s - eb.v).norm() < 1e-10);
}

TEST_CASE("Poincare returns") {
  const TangentState x = with_energy(sphere(), {{0, std::tan(kPi / 8), 0}, Vec2(0, 1)}, 0.5);
  const ReturnResult r = poincare_return(sphere(), {0, 1, 0.0, 1}, x, 100);
  CHECK(std::abs(r.time - kPi * std::sqrt(2.0)) < 1e-6);

  const MagneticSystem flat(SurfaceModel::flat_torus(), MagneticField::constant(1));
  for (double s : {0.5, 3.0}) {
    const TangentState y = with_energy(flat, {{0, 0.5, 0.5}, Vec2(0, 1)}, energy_of_s(s));
    CHECK(std::abs(poincare_return(flat, {0, 1, 0.5, 1}, y, 100).time - 2 * kPi) < 1e-6);
  }

  // straight line crossing one lattice cell
  const MagneticSystem flat0(SurfaceModel::flat_torus(), MagneticField::constant(0));
  Section lattice{0, 0, 0.3, 1, true};
  CHECK(poincare_return(flat0, lattice, {{0, 0.3, 0.1}, Vec2(0.5, 0.2)}, 100).time == doctest::Approx(2));
  CHECK_THROWS_AS(poincare_return(flat0, {0, 0, 0.3, 1, false}, {{0, 0.3, 0.1}, Vec2(0.5, 0.2)}, 10), NoReturn);
}

TEST_CASE("hyperbolic trajectories stop at the boundary") {
  const MagneticSystem hyp(SurfaceModel::hyperbolic(), MagneticField::constant(0));
  const Trajectory tr = integrate(hyp, {{0, 0, 1}, Vec2(0, -1)}, 100, 1e-2);
  CHECK(tr.truncated);
  CHECK(!tr.truncation_reason.empty());
}

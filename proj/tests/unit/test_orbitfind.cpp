#include <doctest.h>

#include <cmath>
#include <numbers>

#include "magflow/errors.hpp"
#include "magflow/orbitfind.hpp"

using namespace magflow;

namespace {
constexpr double kPi = std::numbers::pi;
const MagneticSystem& sphere() {
  static const MagneticSystem s(SurfaceModel::sphere(), MagneticField::constant(1));
  return s;
}
DiscreteLoop sphere_oracle_loop(int N) {
  const double r = std::atan(1.0);
  return circle_loop(0, {0, 0}, std::tan(r / 2), N, kPi * std::sqrt(2.0));
}
}  // namespace

TEST_CASE("oracle examples") {
  const OracleResult a = homogeneous_oracle(OracleKind::Sphere, 1);
  CHECK(*a.radius == doctest::Approx(kPi / 4));
  CHECK(*a.period == doctest::Approx(kPi * std::sqrt(2.0)));
  const OracleResult b = homogeneous_oracle(OracleKind::Torus, 2);
  CHECK(*b.radius == doctest::Approx(0.5));
  CHECK(*b.period == doctest::Approx(2 * kPi));
  const OracleResult c = homogeneous_oracle(OracleKind::Hyperbolic, 0.8);
  CHECK_FALSE(c.exists_contractible);
  CHECK_FALSE(c.radius.has_value());
}

TEST_CASE("shooting examples") {
  {
    const Orbit o = shoot_periodic(sphere(), 0.125, {{0, std::tan(std::atan(0.5) / 2), 0}, Vec2(0, 1)});
    CHECK(o.period == doctest::Approx(4 * kPi / std::sqrt(5.0)).epsilon(1e-9));
    CHECK(measure_geodesic_radius(sphere(), o.trajectory) == doctest::Approx(std::atan(0.5)).epsilon(1e-9));
    CHECK(o.curvature_residual < 1e-6);
  }
  {
    const MagneticSystem flat(SurfaceModel::flat_torus(), MagneticField::constant(1));
    const Orbit o = shoot_periodic(flat, 0.5, {{0, 0.2, 0.7}, Vec2(1, 0)});
    CHECK(o.period == doctest::Approx(2 * kPi).epsilon(1e-10));
    CHECK(o.homotopy.contractible);
    CHECK(o.homotopy.m == 0);
    CHECK(o.homotopy.n == 0);
  }
  {
    const MagneticSystem hyp(SurfaceModel::hyperbolic(), MagneticField::constant(1));
    const double r = std::atanh(0.5);
    const Orbit o = shoot_periodic(hyp, 0.125, {{0, std::sinh(r), std::cosh(r)}, Vec2(0, 1)});
    CHECK(o.period == doctest::Approx(4 * kPi / std::sqrt(3.0)).epsilon(1e-9));
  }
}

TEST_CASE("non-contractible geodesic by lattice section") {
  const MagneticSystem flat0(SurfaceModel::flat_torus(), MagneticField::constant(0));
  ShootParams p;
  p.lattice_section = true;
  const Orbit o = shoot_periodic(flat0, 0.5, {{0, 0.2, 0.3}, Vec2(1, 0)}, p);
  CHECK(o.period == doctest::Approx(1));
  CHECK(o.homotopy.m == 1);
  CHECK(o.homotopy.n == 0);
}

TEST_CASE("action examples") {
  const MagneticSystem flat0(SurfaceModel::flat_torus(), MagneticField::constant(0));
  DiscreteLoop point;
  point.T = 2.5;
  for (int i = 0; i < 16; ++i) point.vertices.push_back({0, 0.3, 0.4});
  CHECK(discrete_action(point, sphere(), 0.7) == doctest::Approx(2.5 * 0.7));
  const ActionGradient g = discrete_action_gradient(point, sphere(), 0.7);
  CHECK(g.dT == doctest::Approx(0.7));
  for (const Vec2& v : g.vertex) CHECK(v.norm() < 1e-12);

  const DiscreteLoop c = circle_loop(0, {0.5, 0.5}, 0.2, 64, 1.7);
  const LoopMeasures m = loop_measures(flat0, c);
  CHECK(discrete_action(c, flat0, 0.3) == doctest::Approx(m.energy / (2 * 1.7) + 0.3 * 1.7));
  CHECK(m.length * m.length <= m.energy * (1 + 1e-14));
}

TEST_CASE("period derivative vanishes at mean energy k") {
  DiscreteLoop c = circle_loop(0, {0.5, 0.5}, 0.2, 64, 1.0);
  const MagneticSystem flat(SurfaceModel::flat_torus(), MagneticField::constant(0.4));
  const double k = 0.3;
  c.T = std::sqrt(loop_measures(flat, c).energy / (2 * k));
  CHECK(loop_measures(flat, c).mean_energy == doctest::Approx(k));
  CHECK(std::abs(discrete_action_gradient(c, flat, k).dT) < 1e-12);
}

TEST_CASE("oracle circle is nearly stationary") {
  const DiscreteLoop c = sphere_oracle_loop(512);
  const ActionGradient g = discrete_action_gradient(c, sphere(), 0.5);
  CHECK(gradient_dual_norm(c, sphere(), g) < 1e-4);
}

TEST_CASE("descent examples") {
  SUBCASE("perturbed sphere circle") {
    DiscreteLoop p = sphere_oracle_loop(2048);
    for (int i = 0; i < p.size(); ++i) {
      const double a = 2 * kPi * i / p.size();
      p.vertices[i].u *= 1 + 0.01 * std::cos(2 * a);
      p.vertices[i].v *= 1 + 0.01 * std::cos(2 * a);
    }
    p.T *= 1.01;
    const DescentResult d = descend_to_critical(p, sphere(), 0.5);
    CHECK(d.outcome == DescentOutcome::Converged);
    CHECK(std::abs(d.loop.T - kPi * std::sqrt(2.0)) < 1e-5);
    CHECK(std::abs(d.mean_energy - 0.5) < 1e-6);
    const Orbit o = loop_to_orbit(sphere(), 0.5, d.loop);
    CHECK(o.curvature_residual < 1e-6);
    CHECK(std::abs(o.period - d.loop.T) < 1e-5);
  }
  SUBCASE("tiny loop collapses") {
    const MagneticSystem weak(SurfaceModel::flat_torus(), MagneticField::constant(0.01));
    const DescentResult d = descend_to_critical(circle_loop(0, {0.5, 0.5}, 1e-3, 64, 1.0), weak, 0.5);
    CHECK(d.outcome == DescentOutcome::Collapsed);
    CHECK(d.loop.T < 1e-3);
  }
  SUBCASE("closed geodesic of winding (1, 0)") {
    const MagneticSystem flat0(SurfaceModel::flat_torus(), MagneticField::constant(0));
    DiscreteLoop g;
    g.m = 1;
    g.T = 2.0;
    for (int i = 0; i < 64; ++i) g.vertices.push_back({0, i / 64.0, 0.3 + 0.05 * std::sin(2 * kPi * i / 64)});
    const double k = 0.5;
    const DescentResult d = descend_to_critical(g, flat0, k);
    CHECK(d.outcome == DescentOutcome::Converged);
    CHECK(d.loop.T == doctest::Approx(1 / std::sqrt(2 * k)).epsilon(1e-8));
    CHECK(loop_measures(flat0, d.loop).length == doctest::Approx(1).epsilon(1e-8));
  }
}

TEST_CASE("refining the loop barely moves the period") {
  // polygon error is O(1/N^2): about 3e-4 at N = 256
  double prev = 0;
  for (int N : {256, 512}) {
    const DescentResult d = descend_to_critical(sphere_oracle_loop(N), sphere(), 0.5);
    REQUIRE(d.outcome == DescentOutcome::Converged);
    if (prev > 0) CHECK(std::abs(d.loop.T - prev) < 5e-4);
    prev = d.loop.T;
  }
}

TEST_CASE("uniform reparametrisation") {
  const MagneticSystem hyp(SurfaceModel::hyperbolic(), MagneticField::constant(1));
  const DiscreteLoop c = reparametrize_uniform(hyp, circle_loop(0, {0, 1.5}, 0.8, 128, 1.0));
  std::vector<double> seg;
  for (int i = 0; i < c.size(); ++i) {
    const ChartPoint& a = c.vertices[i];
    const ChartPoint& b = c.vertices[(i + 1) % c.size()];
    seg.push_back((b.xy() - a.xy()).norm() / (0.5 * (a.v + b.v)));
  }
  const auto [lo, hi] = std::minmax_element(seg.begin(), seg.end());
  CHECK(*hi / *lo < 1.01);
}

TEST_CASE("multiple shooting closes an unstable circle") {
  const MagneticSystem flat(SurfaceModel::flat_torus(), MagneticField::constant(1));
  const double s = 2, k = energy_of_s(s);
  std::vector<TangentState> nodes;
  for (int i = 0; i < 8; ++i) {
    const double a = 2 * kPi * i / 8;
    nodes.push_back(with_energy(flat, {{0, 0.5 + 0.52 * std::cos(a), 0.5 + 0.52 * std::sin(a)}, Vec2(-std::sin(a), std::cos(a))}, k));
  }
  const Orbit o = shoot_multiple(flat, k, nodes, 6.0);
  CHECK(o.period == doctest::Approx(2 * kPi).epsilon(1e-9));
  CHECK(o.closure_gap < 1e-9);
}

TEST_CASE("loop validation") {
  DiscreteLoop bad = circle_loop(0, {0.5, 0.5}, 0.1, 8, 1.0);
  bad.T = -1;
  CHECK_THROWS_AS(discrete_action(bad, sphere(), 0.5), DomainError);
  CHECK_THROWS_AS(circle_loop(0, {0, 0}, 0.1, 2, 1.0), DomainError);
}

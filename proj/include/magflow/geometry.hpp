#pragma once
#include <Eigen/Dense>
#include <vector>

#include "magflow/planar_function.hpp"

namespace magflow {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

struct ChartPoint {
  int chart = 0;
  double u = 0, v = 0;
  Vec2 xy() const { return {u, v}; }
  static ChartPoint at(int chart, const Vec2& p) { return {chart, p.x(), p.y()}; }
};

struct MetricData {
  Eigen::Matrix2d g;
  double christoffel[2][2][2];  // [k][i][j] = Gamma^k_ij
  double K = 0;
  double mu_density = 0;
};

// log of the conformal factor, g = exp(2 lam) (du^2 + dv^2), with derivatives
struct ConformalJet {
  double lam = 0, lu = 0, lv = 0, luu = 0, luv = 0, lvv = 0;
};

enum class SurfaceKind { RoundSphere, FlatTorus, HyperbolicPlane, ConformalTorus };

// A chart-Euclidean quadrature node; integrate F over the surface as
// sum weight * F(p) * mu_density(p).
struct QuadNode {
  ChartPoint p;
  double weight;
};

// Every supported surface is conformally flat in its charts.
class SurfaceModel {
 public:
  static SurfaceModel sphere();
  static SurfaceModel flat_torus(double lx = 1.0, double ly = 1.0);
  static SurfaceModel hyperbolic(int genus = 0);  // genus 0: bare upper half-plane
  static SurfaceModel conformal_torus(PlanarFunction u, double lx = 1.0, double ly = 1.0);

  SurfaceKind kind() const { return kind_; }
  bool is_torus() const { return kind_ == SurfaceKind::FlatTorus || kind_ == SurfaceKind::ConformalTorus; }
  bool compact() const { return kind_ != SurfaceKind::HyperbolicPlane || genus_ >= 2; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  int genus() const { return genus_; }
  int euler_characteristic() const;  // throws UnsupportedError on the bare half-plane
  const char* name() const;

  void check_domain(const ChartPoint& p) const;
  ConformalJet log_factor(const ChartPoint& p) const;  // checks the domain

  // Sphere: move to the other stereographic chart when |z| > 2, carrying the
  // velocity along. Identity for other surfaces.
  ChartPoint canonical(const ChartPoint& p, Vec2* velocity = nullptr) const;
  ChartPoint to_chart(const ChartPoint& p, int chart, Vec2* velocity = nullptr) const;

  // Unit sphere embedding (sphere only).
  Vec3 embed(const ChartPoint& p) const;
  ChartPoint from_embedding(const Vec3& x) const;

  // Quadrature over a fundamental domain; resolution is the nominal points per
  // direction (torus: n x n midpoint grid).
  std::vector<QuadNode> fundamental_domain_rule(int resolution) const;

  double hyperbolic_floor() const { return 1e-12; }

 private:
  SurfaceKind kind_ = SurfaceKind::FlatTorus;
  double lx_ = 1, ly_ = 1;
  int genus_ = 0;
  PlanarFunction conformal_;
};

MetricData metric_at(const SurfaceModel& s, const ChartPoint& p);
double gaussian_curvature(const SurfaceModel& s, const ChartPoint& p);
double mu_density(const SurfaceModel& s, const ChartPoint& p);
double inner(const SurfaceModel& s, const ChartPoint& p, const Vec2& a, const Vec2& b);
double norm(const SurfaceModel& s, const ChartPoint& p, const Vec2& a);
Vec2 rotate90(const SurfaceModel& s, const ChartPoint& p, const Vec2& w);
// Gamma(a, b)^k = Gamma^k_ij a^i b^j
Vec2 christoffel_contract(const ConformalJet& j, const Vec2& a, const Vec2& b);

double geodesic_curvature_of(const SurfaceModel& s, const ChartPoint& q, const Vec2& qdot, const Vec2& qddot);

// Curvature of a polygon at vertex b with neighbours a, c (same chart):
// circumcircle curvature corrected by the conformal factor.
double discrete_geodesic_curvature(const SurfaceModel& s, const Vec2& a, const Vec2& b, const Vec2& c, int chart);

struct SurfaceInvariants {
  double area;
  int euler_characteristic;
  double gauss_bonnet;  // quadrature of K mu
};
SurfaceInvariants surface_invariants(const SurfaceModel& s, int resolution = 256);

}  // namespace magflow

#pragma once
#include <memory>

#include "magflow/geometry.hpp"
#include "magflow/trig_series.hpp"

namespace magflow {

// Scalar field f; the magnetic form is sigma = f mu.
class MagneticField {
 public:
  enum class Kind { Planar, SphereHeight };

  MagneticField() : MagneticField(PlanarFunction::constant(0.0)) {}
  explicit MagneticField(PlanarFunction f) : kind_(Kind::Planar), planar_(std::move(f)) {}
  static MagneticField constant(double c) { return MagneticField(PlanarFunction::constant(c)); }
  // c0 + c1 Z on the unit sphere
  static MagneticField sphere_height(double c0, double c1);

  Kind kind() const { return kind_; }
  // chart derivatives of f
  Jet2 jet(const SurfaceModel& s, const ChartPoint& p) const;
  double value(const SurfaceModel& s, const ChartPoint& p) const;
  bool is_constant() const;
  double constant_value() const;  // valid when is_constant()
  double height_c0() const { return c0_; }
  double height_c1() const { return c1_; }
  const PlanarFunction& planar() const { return planar_; }

 private:
  Kind kind_;
  PlanarFunction planar_;
  double c0_ = 0, c1_ = 0;
};

class MagneticSystem {
 public:
  MagneticSystem(SurfaceModel surface, MagneticField field);

  const SurfaceModel& surface() const { return surface_; }
  const MagneticField& field() const { return field_; }
  double f(const ChartPoint& p) const { return field_.value(surface_, p); }
  // f times mu_density, with chart derivatives
  Jet2 density_jet(const ChartPoint& p) const;

 private:
  SurfaceModel surface_;
  MagneticField field_;
};

// Integral of f mu over a fundamental domain (default 512 points per direction).
double flux_total(const MagneticSystem& sys, int resolution = 512);

// 1-form theta = theta_u du + theta_v dv with d theta = sigma on its region.
class Primitive {
 public:
  virtual ~Primitive() = default;
  virtual Vec2 value(const ChartPoint& p) const = 0;
  // J(a, b) = d theta_a / d x_b
  virtual Eigen::Matrix2d jacobian(const ChartPoint& p) const = 0;
  // defined on the whole surface (all charts / torus lift) rather than one chart
  virtual bool global() const { return false; }
};
using PrimitivePtr = std::shared_ptr<const Primitive>;

PrimitivePtr zero_primitive();
// theta = -(int_{y0}^{v} f~(u, t) dt) du on one chart; f~ = f mu_density
PrimitivePtr local_primitive(const MagneticSystem& sys, int chart, double y0);
// Doubly periodic primitive of an exact torus field: spectral Coulomb-gauge part
// plus the harmonic part c1 dx + c2 dy.
PrimitivePtr exact_torus_primitive(const MagneticSystem& sys, double c1 = 0, double c2 = 0, int grid = 256);
// Global primitive of (f - c0) mu for f = c0 + c1 Z on the sphere.
PrimitivePtr sphere_height_primitive(double c1);
// A 1-form given by two trig series (used for optimised gauges).
PrimitivePtr series_primitive(TrigSeries2D theta_u, TrigSeries2D theta_v, double c1, double c2);

// (circulation of theta around the square of side h centred at c) minus the
// flux of sigma through it, divided by the square's chart area.
double stokes_defect(const MagneticSystem& sys, const Primitive& theta, const ChartPoint& centre, double h);

double s_of_energy(double k);
double energy_of_s(double s);

}  // namespace magflow

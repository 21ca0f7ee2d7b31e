#pragma once
#include <memory>

#include "magflow/spline.hpp"

namespace magflow {

// Scalar function on a chart plane, closed form or sampled; used for the
// conformal factor of a torus and for planar magnetic fields.
class PlanarFunction {
 public:
  enum class Kind { Constant, Cosine, Bump, Grid };

  PlanarFunction() = default;
  static PlanarFunction constant(double c);
  // offset + amp * cos(2 pi (nx x / lx + ny y / ly))
  static PlanarFunction cosine(double amp, int nx, int ny, double lx, double ly, double offset = 0);
  // base + amp * (B - mean B) or base + amp * B, where B is the periodic
  // von Mises bump exp(kappa (cos 2pi dx/lx + cos 2pi dy/ly - 2)), kappa = 1/(2pi w)^2
  static PlanarFunction bump(double base, double amp, double width, double cx, double cy, double lx,
                             double ly, bool zero_mean);
  static PlanarFunction grid(PeriodicSpline spline);

  Jet2 eval(double x, double y) const;
  Kind kind() const { return kind_; }
  bool is_constant() const { return kind_ == Kind::Constant; }
  double constant_value() const { return c0_; }
  double bump_mean() const;  // mean of B over one period cell

 private:
  Kind kind_ = Kind::Constant;
  double c0_ = 0, amp_ = 0, width_ = 1, cx_ = 0, cy_ = 0, lx_ = 1, ly_ = 1;
  int nx_ = 0, ny_ = 0;
  bool zero_mean_ = false;
  std::shared_ptr<const PeriodicSpline> spline_;
};

}  // namespace magflow

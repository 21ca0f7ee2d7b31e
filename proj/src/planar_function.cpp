#include "magflow/planar_function.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>

#include "magflow/errors.hpp"

namespace magflow {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

PlanarFunction PlanarFunction::constant(double c) {
  PlanarFunction f;
  f.kind_ = Kind::Constant;
  f.c0_ = c;
  return f;
}

PlanarFunction PlanarFunction::cosine(double amp, int nx, int ny, double lx, double ly, double offset) {
  if (lx <= 0 || ly <= 0) throw DomainError("cosine field needs positive periods");
  PlanarFunction f;
  f.kind_ = Kind::Cosine;
  f.amp_ = amp;
  f.nx_ = nx;
  f.ny_ = ny;
  f.lx_ = lx;
  f.ly_ = ly;
  f.c0_ = offset;
  return f;
}

PlanarFunction PlanarFunction::bump(double base, double amp, double width, double cx, double cy,
                                    double lx, double ly, bool zero_mean) {
  if (width <= 0 || lx <= 0 || ly <= 0) throw DomainError("bump needs positive width and periods");
  PlanarFunction f;
  f.kind_ = Kind::Bump;
  f.c0_ = base;
  f.amp_ = amp;
  f.width_ = width;
  f.cx_ = cx;
  f.cy_ = cy;
  f.lx_ = lx;
  f.ly_ = ly;
  f.zero_mean_ = zero_mean;
  return f;
}

PlanarFunction PlanarFunction::grid(PeriodicSpline spline) {
  PlanarFunction f;
  f.kind_ = Kind::Grid;
  f.lx_ = spline.lx();
  f.ly_ = spline.ly();
  f.spline_ = std::make_shared<const PeriodicSpline>(std::move(spline));
  return f;
}

double PlanarFunction::bump_mean() const {
  const double kappa = 1.0 / (kTwoPi * kTwoPi * width_ * width_);
  // mean of exp(kappa (cos t - 1)) over a period is exp(-kappa) I0(kappa)
  const double m1 = std::exp(-kappa) * boost::math::cyl_bessel_i(0, kappa);
  return m1 * m1;
}

Jet2 PlanarFunction::eval(double x, double y) const {
  Jet2 j;
  switch (kind_) {
    case Kind::Constant:
      j.f = c0_;
      break;
    case Kind::Cosine: {
      const double wx = kTwoPi * nx_ / lx_, wy = kTwoPi * ny_ / ly_;
      const double ph = wx * x + wy * y;
      const double c = std::cos(ph), s = std::sin(ph);
      j.f = c0_ + amp_ * c;
      j.fx = -amp_ * wx * s;
      j.fy = -amp_ * wy * s;
      j.fxx = -amp_ * wx * wx * c;
      j.fxy = -amp_ * wx * wy * c;
      j.fyy = -amp_ * wy * wy * c;
      break;
    }
    case Kind::Bump: {
      const double kappa = 1.0 / (kTwoPi * kTwoPi * width_ * width_);
      const double ax = kTwoPi / lx_, ay = kTwoPi / ly_;
      const double cx = std::cos(ax * (x - cx_)), sx = std::sin(ax * (x - cx_));
      const double cy = std::cos(ay * (y - cy_)), sy = std::sin(ay * (y - cy_));
      const double b = std::exp(kappa * (cx + cy - 2.0));
      const double px = -kappa * ax * sx, py = -kappa * ay * sy;  // d/dx of the exponent
      const double pxx = -kappa * ax * ax * cx, pyy = -kappa * ay * ay * cy;
      j.f = c0_ + amp_ * (b - (zero_mean_ ? bump_mean() : 0.0));
      j.fx = amp_ * b * px;
      j.fy = amp_ * b * py;
      j.fxx = amp_ * b * (px * px + pxx);
      j.fxy = amp_ * b * px * py;
      j.fyy = amp_ * b * (py * py + pyy);
      break;
    }
    case Kind::Grid:
      j = spline_->eval(x, y);
      break;
  }
  return j;
}

}  // namespace magflow

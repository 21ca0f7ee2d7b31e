#include "magflow/magnetic.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "magflow/errors.hpp"
#include "magflow/kernels.hpp"
#include "magflow/numerics.hpp"

namespace magflow {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

MagneticField MagneticField::sphere_height(double c0, double c1) {
  MagneticField f;
  f.kind_ = Kind::SphereHeight;
  f.c0_ = c0;
  f.c1_ = c1;
  return f;
}

Jet2 MagneticField::jet(const SurfaceModel& s, const ChartPoint& p) const {
  if (kind_ == Kind::Planar) return planar_.eval(p.u, p.v);
  if (s.kind() != SurfaceKind::RoundSphere) throw UnsupportedError("height field needs the sphere");
  // Z = sign * (1 - 2/q), q = 1 + r^2; chart 0 has Z -> -1 at its origin
  const double sign = p.chart == 0 ? 1.0 : -1.0;
  const double q = 1.0 + p.u * p.u + p.v * p.v;
  Jet2 z;
  z.f = sign * (1.0 - 2.0 / q);
  z.fx = sign * 4.0 * p.u / (q * q);
  z.fy = sign * 4.0 * p.v / (q * q);
  z.fxx = sign * (4.0 / (q * q) - 16.0 * p.u * p.u / (q * q * q));
  z.fxy = sign * (-16.0 * p.u * p.v / (q * q * q));
  z.fyy = sign * (4.0 / (q * q) - 16.0 * p.v * p.v / (q * q * q));
  Jet2 out{c0_ + c1_ * z.f, c1_ * z.fx, c1_ * z.fy, c1_ * z.fxx, c1_ * z.fxy, c1_ * z.fyy};
  return out;
}

double MagneticField::value(const SurfaceModel& s, const ChartPoint& p) const { return jet(s, p).f; }

bool MagneticField::is_constant() const {
  return kind_ == Kind::Planar ? planar_.is_constant() : c1_ == 0.0;
}

double MagneticField::constant_value() const {
  return kind_ == Kind::Planar ? planar_.constant_value() : c0_;
}

MagneticSystem::MagneticSystem(SurfaceModel surface, MagneticField field)
    : surface_(std::move(surface)), field_(std::move(field)) {
  if (field_.kind() == MagneticField::Kind::SphereHeight && surface_.kind() != SurfaceKind::RoundSphere)
    throw ConfigError("height field requires the sphere");
  if (surface_.kind() == SurfaceKind::RoundSphere && field_.kind() == MagneticField::Kind::Planar &&
      !field_.is_constant())
    throw ConfigError("planar fields are not well defined on the sphere; use a constant or height field");
}

Jet2 MagneticSystem::density_jet(const ChartPoint& p) const {
  const ConformalJet l = surface_.log_factor(p);
  const Jet2 f = field_.jet(surface_, p);
  const double e = std::exp(2 * l.lam);
  // d(f e^{2 lam}) = (df + 2 f dlam) e^{2 lam}
  Jet2 d;
  d.f = f.f * e;
  d.fx = (f.fx + 2 * f.f * l.lu) * e;
  d.fy = (f.fy + 2 * f.f * l.lv) * e;
  d.fxx = (f.fxx + 4 * f.fx * l.lu + 2 * f.f * (l.luu + 2 * l.lu * l.lu)) * e;
  d.fxy = (f.fxy + 2 * f.fx * l.lv + 2 * f.fy * l.lu + 2 * f.f * (l.luv + 2 * l.lu * l.lv)) * e;
  d.fyy = (f.fyy + 4 * f.fy * l.lv + 2 * f.f * (l.lvv + 2 * l.lv * l.lv)) * e;
  return d;
}

double flux_total(const MagneticSystem& sys, int resolution) {
  const SurfaceModel& s = sys.surface();
  if (!s.compact()) throw UnsupportedError("flux needs a compact surface; declare a hyperbolic genus");
  if (s.kind() == SurfaceKind::HyperbolicPlane && !sys.field().is_constant())
    throw UnsupportedError("hyperbolic quotients support constant fields only");
  const auto nodes = s.fundamental_domain_rule(resolution);
  std::vector<double> w(nodes.size()), f(nodes.size()), mu(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    w[i] = nodes[i].weight;
    f[i] = sys.f(nodes[i].p);
    mu[i] = mu_density(s, nodes[i].p);
  }
  return kernels::weighted_dot(w.data(), f.data(), mu.data(), nodes.size());
}

namespace {

class ZeroPrimitive final : public Primitive {
 public:
  Vec2 value(const ChartPoint&) const override { return Vec2::Zero(); }
  Eigen::Matrix2d jacobian(const ChartPoint&) const override { return Eigen::Matrix2d::Zero(); }
  bool global() const override { return true; }
};

// Closed form of the line-integral primitive for constant fields on the
// homogeneous surfaces: theta_u = -c int_{y0}^{v} exp(2 lam(u, t)) dt.
class ConstantFieldPrimitive final : public Primitive {
 public:
  ConstantFieldPrimitive(SurfaceKind kind, double c, int chart, double y0)
      : kind_(kind), c_(c), chart_(chart), y0_(y0) {}
  Vec2 value(const ChartPoint& p) const override {
    check(p);
    return {-c_ * integral(p.u, p.v), 0.0};
  }
  Eigen::Matrix2d jacobian(const ChartPoint& p) const override {
    check(p);
    Eigen::Matrix2d j = Eigen::Matrix2d::Zero();
    switch (kind_) {
      case SurfaceKind::FlatTorus:
        j(0, 1) = -c_;
        break;
      case SurfaceKind::HyperbolicPlane:
        j(0, 1) = -c_ / (p.v * p.v);
        break;
      default: {
        const double a = std::sqrt(1.0 + p.u * p.u);
        const double q = a * a + p.v * p.v;
        j(0, 0) = -c_ * 4.0 * (dsphere_da(a, p.v) - dsphere_da(a, y0_)) * p.u / a;
        j(0, 1) = -c_ * 4.0 / (q * q);
      }
    }
    return j;
  }

 private:
  void check(const ChartPoint& p) const {
    if (p.chart != chart_) throw DomainError("point lies outside the primitive's chart");
  }
  // antiderivative of 1 / (a^2 + t^2)^2 in t, and its derivative in a
  static double sphere_f(double a, double t) {
    return t / (2 * a * a * (a * a + t * t)) + std::atan(t / a) / (2 * a * a * a);
  }
  static double dsphere_da(double a, double t) {
    const double q = a * a + t * t;
    return -t * (2 * a * a * a + a * t * t) / (a * a * q * a * a * q) - t / (q * 2 * a * a * a) -
           3 * std::atan(t / a) / (2 * a * a * a * a);
  }
  double integral(double u, double y) const {
    switch (kind_) {
      case SurfaceKind::FlatTorus:
        return y - y0_;
      case SurfaceKind::HyperbolicPlane:
        if (y <= 0) throw DomainError("hyperbolic chart requires y > 0");
        return 1.0 / y0_ - 1.0 / y;
      default: {
        const double a = std::sqrt(1.0 + u * u);
        return 4.0 * (sphere_f(a, y) - sphere_f(a, y0_));
      }
    }
  }
  SurfaceKind kind_;
  double c_;
  int chart_;
  double y0_;
};

class LineIntegralPrimitive final : public Primitive {
 public:
  LineIntegralPrimitive(MagneticSystem sys, int chart, double y0) : sys_(std::move(sys)), chart_(chart), y0_(y0) {
    sys_.surface().check_domain({chart, 0.0, y0});
  }
  Vec2 value(const ChartPoint& p) const override {
    check(p);
    return {-integrate([&](double t) { return sys_.density_jet({chart_, p.u, t}).f; }, p.v), 0.0};
  }
  Eigen::Matrix2d jacobian(const ChartPoint& p) const override {
    check(p);
    Eigen::Matrix2d j = Eigen::Matrix2d::Zero();
    j(0, 0) = -integrate([&](double t) { return sys_.density_jet({chart_, p.u, t}).fx; }, p.v);
    j(0, 1) = -sys_.density_jet(p).f;
    return j;
  }

 private:
  void check(const ChartPoint& p) const {
    if (p.chart != chart_) throw DomainError("point lies outside the primitive's chart");
  }
  template <class F>
  double integrate(F&& f, double y) const {
    if (y == y0_) return 0.0;
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, y0_, y, 8, 1e-12);
  }
  MagneticSystem sys_;
  int chart_;
  double y0_;
};

class SeriesPrimitive final : public Primitive {
 public:
  SeriesPrimitive(TrigSeries2D tu, TrigSeries2D tv, double c1, double c2)
      : tu_(std::move(tu)), tv_(std::move(tv)), c1_(c1), c2_(c2) {}
  Vec2 value(const ChartPoint& p) const override {
    return {tu_.eval(p.u, p.v).f + c1_, tv_.eval(p.u, p.v).f + c2_};
  }
  Eigen::Matrix2d jacobian(const ChartPoint& p) const override {
    const Jet2 a = tu_.eval(p.u, p.v), b = tv_.eval(p.u, p.v);
    Eigen::Matrix2d j;
    j << a.fx, a.fy, b.fx, b.fy;
    return j;
  }
  bool global() const override { return true; }

 private:
  TrigSeries2D tu_, tv_;
  double c1_, c2_;
};

class SphereHeightPrimitive final : public Primitive {
 public:
  explicit SphereHeightPrimitive(double c1) : c1_(c1) {}
  // chart 0: -2 c1 / q^2 (u dv - v du); chart 1 has the opposite sign
  Vec2 value(const ChartPoint& p) const override {
    const double a = amp(p);
    return {-a * p.v, a * p.u};
  }
  Eigen::Matrix2d jacobian(const ChartPoint& p) const override {
    const double q = 1.0 + p.u * p.u + p.v * p.v;
    const double a = amp(p);
    const double da = -2.0 * a / q;  // d a / d(r^2)
    Eigen::Matrix2d j;
    j << -2 * da * p.u * p.v, -a - 2 * da * p.v * p.v, a + 2 * da * p.u * p.u, 2 * da * p.u * p.v;
    return j;
  }
  bool global() const override { return true; }

 private:
  double amp(const ChartPoint& p) const {
    const double q = 1.0 + p.u * p.u + p.v * p.v;
    return (p.chart == 0 ? -2.0 : 2.0) * c1_ / (q * q);
  }
  double c1_;
};

}  // namespace

PrimitivePtr zero_primitive() { return std::make_shared<ZeroPrimitive>(); }

PrimitivePtr local_primitive(const MagneticSystem& sys, int chart, double y0) {
  if (sys.field().is_constant() && sys.field().constant_value() == 0.0) return zero_primitive();
  sys.surface().check_domain({chart, 0.0, y0});
  const SurfaceKind kind = sys.surface().kind();
  if (sys.field().is_constant() && kind != SurfaceKind::ConformalTorus)
    return std::make_shared<ConstantFieldPrimitive>(kind, sys.field().constant_value(), chart, y0);
  return std::make_shared<LineIntegralPrimitive>(sys, chart, y0);
}

PrimitivePtr exact_torus_primitive(const MagneticSystem& sys, double c1, double c2, int grid) {
  const SurfaceModel& s = sys.surface();
  if (!s.is_torus()) throw UnsupportedError("periodic primitives exist only on the torus");
  if (grid < 8) throw DomainError("spectral grid too small");
  const int n = grid;
  const double lx = s.lx(), ly = s.ly();
  std::vector<double> samples(static_cast<std::size_t>(n) * n);
  double total = 0, total_abs = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double v = sys.density_jet({0, i * lx / n, j * ly / n}).f;
      samples[j * n + i] = v;
      total += v;
      total_abs += std::abs(v);
    }
  if (std::abs(total) > 1e-9 * std::max(1.0, total_abs))
    throw NoGlobalPrimitive("torus field has nonzero flux; only chart-local primitives exist");
  auto fh = periodic_dft(samples, n, n);
  std::vector<std::complex<double>> tu(fh.size()), tv(fh.size());
  const std::complex<double> I(0, 1);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double wx = kTwoPi * signed_freq(i, n) / lx, wy = kTwoPi * signed_freq(j, n) / ly;
      const double w2 = wx * wx + wy * wy;
      if (w2 == 0) continue;
      const std::complex<double> psi = -fh[j * n + i] / w2;
      tu[j * n + i] = -I * wy * psi;
      tv[j * n + i] = I * wx * psi;
    }
  auto su = prune_to_series(tu, n, n, lx, ly, 1e-14);
  auto sv = prune_to_series(tv, n, n, lx, ly, 1e-14);
  return std::make_shared<SeriesPrimitive>(std::move(su), std::move(sv), c1, c2);
}

PrimitivePtr sphere_height_primitive(double c1) { return std::make_shared<SphereHeightPrimitive>(c1); }

PrimitivePtr series_primitive(TrigSeries2D theta_u, TrigSeries2D theta_v, double c1, double c2) {
  return std::make_shared<SeriesPrimitive>(std::move(theta_u), std::move(theta_v), c1, c2);
}

double stokes_defect(const MagneticSystem& sys, const Primitive& theta, const ChartPoint& c, double h) {
  const GaussRule& g = gauss_legendre(16);
  const double a = 0.5 * h;
  double circ = 0;
  const Vec2 corners[4] = {{c.u - a, c.v - a}, {c.u + a, c.v - a}, {c.u + a, c.v + a}, {c.u - a, c.v + a}};
  for (int e = 0; e < 4; ++e) {
    const Vec2 p0 = corners[e], p1 = corners[(e + 1) % 4], d = p1 - p0;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      const Vec2 x = p0 + 0.5 * (g.x[i] + 1.0) * d;
      circ += 0.5 * g.w[i] * theta.value(ChartPoint::at(c.chart, x)).dot(d);
    }
  }
  double flux = 0;
  for (std::size_t i = 0; i < g.x.size(); ++i)
    for (std::size_t j = 0; j < g.x.size(); ++j)
      flux += g.w[i] * g.w[j] * a * a * sys.density_jet({c.chart, c.u + a * g.x[i], c.v + a * g.x[j]}).f;
  return (circ - flux) / (h * h);
}

double s_of_energy(double k) {
  if (!(k > 0)) throw DomainError("energy must be positive");
  return 1.0 / std::sqrt(2.0 * k);
}

double energy_of_s(double s) {
  if (!(s > 0)) throw DomainError("strength s must be positive");
  return 1.0 / (2.0 * s * s);
}

}  // namespace magflow

#include "magflow/geometry.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "magflow/errors.hpp"
#include "magflow/numerics.hpp"

namespace magflow {

namespace {
constexpr double kPi = std::numbers::pi;
}

SurfaceModel SurfaceModel::sphere() {
  SurfaceModel s;
  s.kind_ = SurfaceKind::RoundSphere;
  return s;
}

SurfaceModel SurfaceModel::flat_torus(double lx, double ly) {
  if (!(lx > 0 && ly > 0)) throw DomainError("torus periods must be positive");
  SurfaceModel s;
  s.kind_ = SurfaceKind::FlatTorus;
  s.lx_ = lx;
  s.ly_ = ly;
  return s;
}

SurfaceModel SurfaceModel::hyperbolic(int genus) {
  if (genus == 1 || genus < 0) throw DomainError("hyperbolic quotient genus must be 0 (none) or >= 2");
  SurfaceModel s;
  s.kind_ = SurfaceKind::HyperbolicPlane;
  s.genus_ = genus;
  return s;
}

SurfaceModel SurfaceModel::conformal_torus(PlanarFunction u, double lx, double ly) {
  if (!(lx > 0 && ly > 0)) throw DomainError("torus periods must be positive");
  SurfaceModel s;
  s.kind_ = SurfaceKind::ConformalTorus;
  s.lx_ = lx;
  s.ly_ = ly;
  s.conformal_ = std::move(u);
  return s;
}

int SurfaceModel::euler_characteristic() const {
  switch (kind_) {
    case SurfaceKind::RoundSphere: return 2;
    case SurfaceKind::FlatTorus:
    case SurfaceKind::ConformalTorus: return 0;
    case SurfaceKind::HyperbolicPlane:
      if (genus_ < 2) throw UnsupportedError("bare hyperbolic plane has no Euler characteristic; declare a genus");
      return 2 - 2 * genus_;
  }
  return 0;
}

const char* SurfaceModel::name() const {
  switch (kind_) {
    case SurfaceKind::RoundSphere: return "sphere";
    case SurfaceKind::FlatTorus: return "torus";
    case SurfaceKind::HyperbolicPlane: return "hyperbolic";
    case SurfaceKind::ConformalTorus: return "conformal_torus";
  }
  return "?";
}

void SurfaceModel::check_domain(const ChartPoint& p) const {
  if (!std::isfinite(p.u) || !std::isfinite(p.v)) throw DomainError("non-finite chart coordinates");
  if (kind_ == SurfaceKind::RoundSphere) {
    if (p.chart != 0 && p.chart != 1) throw DomainError("sphere chart id must be 0 or 1");
  } else if (p.chart != 0) {
    throw DomainError("only chart 0 exists on this surface");
  }
  if (kind_ == SurfaceKind::HyperbolicPlane && p.v < hyperbolic_floor())
    throw DomainError("hyperbolic chart requires y >= 1e-12");
}

ConformalJet SurfaceModel::log_factor(const ChartPoint& p) const {
  check_domain(p);
  ConformalJet j;
  switch (kind_) {
    case SurfaceKind::FlatTorus:
      break;
    case SurfaceKind::RoundSphere: {
      const double q = 1.0 + p.u * p.u + p.v * p.v;
      j.lam = std::log(2.0 / q);
      j.lu = -2.0 * p.u / q;
      j.lv = -2.0 * p.v / q;
      j.luu = -2.0 / q + 4.0 * p.u * p.u / (q * q);
      j.luv = 4.0 * p.u * p.v / (q * q);
      j.lvv = -2.0 / q + 4.0 * p.v * p.v / (q * q);
      break;
    }
    case SurfaceKind::HyperbolicPlane:
      j.lam = -std::log(p.v);
      j.lv = -1.0 / p.v;
      j.lvv = 1.0 / (p.v * p.v);
      break;
    case SurfaceKind::ConformalTorus: {
      const Jet2 u = conformal_.eval(p.u, p.v);
      j = {u.f, u.fx, u.fy, u.fxx, u.fxy, u.fyy};
      break;
    }
  }
  return j;
}

ChartPoint SurfaceModel::to_chart(const ChartPoint& p, int chart, Vec2* velocity) const {
  if (p.chart == chart) return p;
  if (kind_ != SurfaceKind::RoundSphere) throw DomainError("chart transition only exists on the sphere");
  const double r2 = p.u * p.u + p.v * p.v;
  if (r2 == 0) throw DomainError("chart transition undefined at the chart origin");
  // w = 1/z, dw = -dz / z^2
  ChartPoint q{chart, p.u / r2, -p.v / r2};
  if (velocity) {
    const std::complex<double> z(p.u, p.v), dz(velocity->x(), velocity->y());
    const std::complex<double> dw = -dz / (z * z);
    *velocity = Vec2(dw.real(), dw.imag());
  }
  return q;
}

ChartPoint SurfaceModel::canonical(const ChartPoint& p, Vec2* velocity) const {
  if (kind_ != SurfaceKind::RoundSphere) return p;
  if (p.u * p.u + p.v * p.v <= 4.0) return p;
  return to_chart(p, 1 - p.chart, velocity);
}

Vec3 SurfaceModel::embed(const ChartPoint& p) const {
  if (kind_ != SurfaceKind::RoundSphere) throw UnsupportedError("embedding is only defined for the sphere");
  check_domain(p);
  const double r2 = p.u * p.u + p.v * p.v, q = 1.0 + r2;
  if (p.chart == 0) return {2 * p.u / q, 2 * p.v / q, (r2 - 1) / q};
  return {2 * p.u / q, -2 * p.v / q, (1 - r2) / q};
}

ChartPoint SurfaceModel::from_embedding(const Vec3& x) const {
  if (kind_ != SurfaceKind::RoundSphere) throw UnsupportedError("embedding is only defined for the sphere");
  if (x.z() <= 0) return {0, x.x() / (1 - x.z()), x.y() / (1 - x.z())};
  return {1, x.x() / (1 + x.z()), -x.y() / (1 + x.z())};
}

std::vector<QuadNode> SurfaceModel::fundamental_domain_rule(int n) const {
  if (n < 4) throw DomainError("quadrature resolution too small");
  std::vector<QuadNode> nodes;
  switch (kind_) {
    case SurfaceKind::FlatTorus:
    case SurfaceKind::ConformalTorus: {
      const double hx = lx_ / n, hy = ly_ / n;
      nodes.reserve(static_cast<std::size_t>(n) * n);
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) nodes.push_back({{0, (i + 0.5) * hx, (j + 0.5) * hy}, hx * hy});
      break;
    }
    case SurfaceKind::RoundSphere: {
      // each chart covers its closed unit disc (one hemisphere)
      const int nr = std::max(8, n / 4), na = std::max(8, n);
      const GaussRule& g = gauss_legendre(nr);
      const double da = 2 * kPi / na;
      for (int chart = 0; chart < 2; ++chart)
        for (int a = 0; a < na; ++a) {
          const double ang = (a + 0.5) * da;
          for (int r = 0; r < nr; ++r) {
            const double rho = 0.5 * (g.x[r] + 1.0);
            nodes.push_back({{chart, rho * std::cos(ang), rho * std::sin(ang)}, 0.5 * g.w[r] * rho * da});
          }
        }
      break;
    }
    case SurfaceKind::HyperbolicPlane: {
      if (genus_ < 2) throw UnsupportedError("bare hyperbolic plane has no fundamental domain; declare a genus");
      // regular 4h-gon with interior angles pi/(2h) in the Poincare disc
      const int sides = 4 * genus_;
      const double half = kPi / sides;
      const double cot = 1.0 / std::tan(half);
      const double big_r = std::acosh(cot * cot);
      const double rv = std::tanh(0.5 * big_r);
      const double d = (rv * rv + 1.0) / (2.0 * rv * std::cos(half));
      const int nr = std::max(32, n / 4), na = std::max(16, n / 8);
      const GaussRule& gr = gauss_legendre(nr);
      const GaussRule& ga = gauss_legendre(na);
      for (int e = 0; e < sides; ++e) {
        const double mid = 2 * kPi * e / sides;
        for (int side = 0; side < 2; ++side)
          for (int a = 0; a < na; ++a) {
            // half-sector delta in [0, half] or [-half, 0]
            const double delta = (side == 0 ? 0.5 : -0.5) * half * (ga.x[a] + 1.0);
            const double wa = 0.5 * half * ga.w[a];
            const double cd = std::cos(delta);
            const double tb = d * cd - std::sqrt(d * d * cd * cd - 1.0);
            for (int r = 0; r < nr; ++r) {
              const double t = 0.5 * tb * (gr.x[r] + 1.0);
              const double wr = 0.5 * tb * gr.w[r];
              const std::complex<double> z = std::polar(t, mid + delta);
              const std::complex<double> w = std::complex<double>(0, 1) * (1.0 + z) / (1.0 - z);
              const double jac = 4.0 / std::pow(std::abs(1.0 - z), 4);
              nodes.push_back({{0, w.real(), w.imag()}, wa * wr * t * jac});
            }
          }
      }
      break;
    }
  }
  return nodes;
}

Vec2 christoffel_contract(const ConformalJet& j, const Vec2& a, const Vec2& b) {
  // Gamma^u: uu = lu, uv = lv, vv = -lu; Gamma^v: uu = -lv, uv = lu, vv = lv
  const double gu = j.lu * a.x() * b.x() + j.lv * (a.x() * b.y() + a.y() * b.x()) - j.lu * a.y() * b.y();
  const double gv = -j.lv * a.x() * b.x() + j.lu * (a.x() * b.y() + a.y() * b.x()) + j.lv * a.y() * b.y();
  return {gu, gv};
}

MetricData metric_at(const SurfaceModel& s, const ChartPoint& p) {
  const ConformalJet j = s.log_factor(p);
  const double e2 = std::exp(2 * j.lam);
  MetricData m;
  m.g << e2, 0, 0, e2;
  auto& G = m.christoffel;
  G[0][0][0] = j.lu;
  G[0][0][1] = G[0][1][0] = j.lv;
  G[0][1][1] = -j.lu;
  G[1][0][0] = -j.lv;
  G[1][0][1] = G[1][1][0] = j.lu;
  G[1][1][1] = j.lv;
  m.K = -(j.luu + j.lvv) / e2;
  m.mu_density = e2;
  return m;
}

double gaussian_curvature(const SurfaceModel& s, const ChartPoint& p) {
  const ConformalJet j = s.log_factor(p);
  return -(j.luu + j.lvv) * std::exp(-2 * j.lam);
}

double mu_density(const SurfaceModel& s, const ChartPoint& p) { return std::exp(2 * s.log_factor(p).lam); }

double inner(const SurfaceModel& s, const ChartPoint& p, const Vec2& a, const Vec2& b) {
  return std::exp(2 * s.log_factor(p).lam) * a.dot(b);
}

double norm(const SurfaceModel& s, const ChartPoint& p, const Vec2& a) {
  return std::exp(s.log_factor(p).lam) * a.norm();
}

Vec2 rotate90(const SurfaceModel& s, const ChartPoint& p, const Vec2& w) {
  s.check_domain(p);
  return {-w.y(), w.x()};  // conformal charts: the Euclidean rotation is an isometry
}

double geodesic_curvature_of(const SurfaceModel& s, const ChartPoint& q, const Vec2& qdot, const Vec2& qddot) {
  const ConformalJet j = s.log_factor(q);
  const double speed_e = qdot.norm();
  if (speed_e == 0) throw DegenerateInput("geodesic curvature undefined at zero velocity");
  const Vec2 acc = qddot + christoffel_contract(j, qdot, qdot);
  const Vec2 iq(-qdot.y(), qdot.x());
  // g(acc, i qdot) / |qdot|^3 with g = e^{2 lam} Euclidean
  return std::exp(-j.lam) * acc.dot(iq) / (speed_e * speed_e * speed_e);
}

double discrete_geodesic_curvature(const SurfaceModel& s, const Vec2& a, const Vec2& b, const Vec2& c, int chart) {
  const Vec2 ab = b - a, bc = c - b, ac = c - a;
  const double lab = ab.norm(), lbc = bc.norm(), lac = ac.norm();
  if (lab == 0 || lbc == 0 || lac == 0) throw DegenerateInput("repeated polygon vertex");
  const double cross = ab.x() * bc.y() - ab.y() * bc.x();
  const double kappa_e = 2.0 * cross / (lab * lbc * lac);
  const ConformalJet j = s.log_factor(ChartPoint::at(chart, b));
  const Vec2 t = ac / lac;
  const Vec2 nrm(-t.y(), t.x());
  return std::exp(-j.lam) * (kappa_e - (j.lu * nrm.x() + j.lv * nrm.y()));
}

SurfaceInvariants surface_invariants(const SurfaceModel& s, int resolution) {
  if (!s.compact()) throw UnsupportedError("area of the bare hyperbolic plane is infinite; declare a genus");
  double area = 0, gb = 0;
  for (const QuadNode& n : s.fundamental_domain_rule(resolution)) {
    const MetricData m = metric_at(s, n.p);
    area += n.weight * m.mu_density;
    gb += n.weight * m.mu_density * m.K;
  }
  return {area, s.euler_characteristic(), gb};
}

}  // namespace magflow

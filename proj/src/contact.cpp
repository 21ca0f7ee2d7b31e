#include "magflow/contact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "magflow/errors.hpp"
#include "magflow/numerics.hpp"
#include "magflow/taimanov.hpp"

namespace magflow {

namespace {

constexpr double kPi = std::numbers::pi;

SMPoint shifted(const SMPoint& x, const SMVector& w) { return {{x.q.chart, x.q.u + w(0), x.q.v + w(1)}, x.phi + w(2)}; }

double wedge(const CoframeValue& a1, const CoframeValue& a2, double CoframeValue::*f, double CoframeValue::*g) {
  return a1.*f * a2.*g - a2.*f * a1.*g;
}

// The 1-form of a candidate evaluated on an SM tangent vector.
double candidate_form(const MagneticSystem& sys, double s, const ContactCandidate& c, const SMPoint& x,
                      const SMVector& w) {
  const CoframeValue cf = coframe(sys.surface(), x, w);
  switch (c.kind) {
    case CandidateKind::HomogeneousPlus: return cf.a + s * cf.p;
    case CandidateKind::HomogeneousMinus: return cf.a - s * cf.p;
    case CandidateKind::ExactPrimitive: return cf.a - s * c.zeta->value(x.q).dot(w.head<2>());
    case CandidateKind::NonExact: return cf.a - s * c.zeta->value(x.q).dot(w.head<2>()) + s * c.ratio * cf.p;
    case CandidateKind::ClosedTorus: return w(2) + c.a * w(0) + c.b * w(1);
  }
  return 0;
}

// omega_s = d alpha - s pi^* sigma = psi ^ beta - s f alpha ^ beta
double omega_s(const MagneticSystem& sys, double s, const SMPoint& x, const SMVector& e1, const SMVector& e2) {
  const CoframeValue c1 = coframe(sys.surface(), x, e1), c2 = coframe(sys.surface(), x, e2);
  return wedge(c1, c2, &CoframeValue::p, &CoframeValue::b) -
         s * sys.f(x.q) * wedge(c1, c2, &CoframeValue::a, &CoframeValue::b);
}

// Circulation of a 1-form around the parallelogram x, x+e1, x+e1+e2, x+e2.
template <class Form>
double circulation(const Form& form, const SMPoint& x, const SMVector& e1, const SMVector& e2) {
  auto edge = [&](const SMVector& start, const SMVector& dir) {
    return integrate_gl([&](double t) { return form(shifted(x, start + t * dir), dir); }, 0.0, 1.0, 8);
  };
  // opposite edges summed first so that exact cancellations stay exact
  return (edge(SMVector::Zero(), e1) + edge(e1 + e2, -e1)) + (edge(e1, e2) + edge(e2, -e2));
}

struct BaseNode {
  ChartPoint q;
  double weight;  // chart weight times mu density; 0 when not integrable
};

std::vector<BaseNode> base_nodes(const SurfaceModel& s, int q) {
  std::vector<BaseNode> out;
  if (!s.compact()) {
    for (int j = 0; j < q; ++j)
      for (int i = 0; i < q; ++i) out.push_back({{0, -2.0 + 4.0 * (i + 0.5) / q, 0.1 + 3.9 * (j + 0.5) / q}, 0.0});
    return out;
  }
  for (const QuadNode& n : s.fundamental_domain_rule(q)) out.push_back({n.p, n.weight * mu_density(s, n.p)});
  return out;
}

double exact_area(const SurfaceModel& s) {
  switch (s.kind()) {
    case SurfaceKind::RoundSphere: return 4 * kPi;
    case SurfaceKind::FlatTorus: return s.lx() * s.ly();
    case SurfaceKind::HyperbolicPlane: return -2 * kPi * s.euler_characteristic();
    case SurfaceKind::ConformalTorus: break;
  }
  return surface_invariants(s, 512).area;
}

bool exact_on_torus(const MagneticSystem& sys) { return sys.surface().is_torus(); }

}  // namespace

Vec2 unit_vector(const SurfaceModel& s, const SMPoint& x) {
  return std::exp(-s.log_factor(x.q).lam) * Vec2(std::cos(x.phi), std::sin(x.phi));
}

CoframeValue coframe(const SurfaceModel& s, const SMPoint& x, const SMVector& w) {
  const ConformalJet j = s.log_factor(x.q);
  const double e = std::exp(j.lam), c = std::cos(x.phi), sn = std::sin(x.phi);
  return {e * (c * w(0) + sn * w(1)), w(2) - j.lv * w(0) + j.lu * w(1), e * (-sn * w(0) + c * w(1))};
}

SMVector frame_X(const SurfaceModel& s, const SMPoint& x) {
  const ConformalJet j = s.log_factor(x.q);
  const double e = std::exp(-j.lam);
  const double du = e * std::cos(x.phi), dv = e * std::sin(x.phi);
  return {du, dv, j.lv * du - j.lu * dv};
}

SMVector frame_V() { return {0, 0, 1}; }

SMVector frame_H(const SurfaceModel& s, const SMPoint& x) {
  const ConformalJet j = s.log_factor(x.q);
  const double e = std::exp(-j.lam);
  const double du = -e * std::sin(x.phi), dv = e * std::cos(x.phi);
  return {du, dv, j.lv * du - j.lu * dv};
}

CoframeValue xs_coefficients(const MagneticSystem& sys, double s, const SMPoint& x) {
  sys.surface().check_domain(x.q);
  return {1.0, s * sys.f(x.q), 0.0};
}

StructuralResiduals structural_relations_check(const SurfaceModel& s, double h, int samples, unsigned seed) {
  if (!(h > 0)) throw DomainError("parallelogram side must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> G(0.0, 1.0);
  StructuralResiduals r{0, 0, 0};
  for (int n = 0; n < samples; ++n) {
    ChartPoint q{0, U(rng), U(rng)};
    if (s.kind() == SurfaceKind::RoundSphere) q = {0, 3 * U(rng) - 1.5, 3 * U(rng) - 1.5};
    if (s.kind() == SurfaceKind::HyperbolicPlane) q = {0, 2 * U(rng) - 1, 0.5 + 1.5 * U(rng)};
    if (s.is_torus()) q = {0, U(rng) * s.lx(), U(rng) * s.ly()};
    const SMPoint x{q, 2 * kPi * U(rng)};
    SMVector e1(G(rng), G(rng), G(rng)), e2(G(rng), G(rng), G(rng));
    e1.normalize();
    e2 = (e2 - e2.dot(e1) * e1).normalized();
    e1 *= h;
    e2 *= h;
    auto form = [&](double CoframeValue::*f) {
      return [&s, f](const SMPoint& y, const SMVector& w) { return coframe(s, y, w).*f; };
    };
    const CoframeValue c1 = coframe(s, x, e1), c2 = coframe(s, x, e2);
    const double K = gaussian_curvature(s, x.q);
    const double area = h * h;
    const double da = circulation(form(&CoframeValue::a), x, e1, e2) - wedge(c1, c2, &CoframeValue::p, &CoframeValue::b);
    const double dp = circulation(form(&CoframeValue::p), x, e1, e2) - K * wedge(c1, c2, &CoframeValue::b, &CoframeValue::a);
    const double db = circulation(form(&CoframeValue::b), x, e1, e2) - wedge(c1, c2, &CoframeValue::a, &CoframeValue::p);
    r.d_alpha = std::max(r.d_alpha, std::abs(da) / area);
    r.d_psi = std::max(r.d_psi, std::abs(dp) / area);
    r.d_beta = std::max(r.d_beta, std::abs(db) / area);
  }
  return r;
}

const char* verdict_name(ContactVerdict v) {
  switch (v) {
    case ContactVerdict::Positive: return "positive_contact";
    case ContactVerdict::Negative: return "negative_contact";
    case ContactVerdict::Indeterminate: return "indeterminate";
  }
  return "?";
}

PrimitivePtr contact_zeta(const MagneticSystem& sys) {
  const SurfaceModel& s = sys.surface();
  const MagneticField& f = sys.field();
  if (f.kind() == MagneticField::Kind::SphereHeight) return sphere_height_primitive(f.height_c1());
  if (s.is_torus()) {
    try {
      return exact_torus_primitive(sys);
    } catch (const NoGlobalPrimitive&) {
      throw UnsupportedError("non-exact torus field: omega_s is not exact");
    }
  }
  // constant curvature and constant field: sigma is a multiple of K mu
  if (f.is_constant()) return zero_primitive();
  throw UnsupportedError("no primitive construction for this field");
}

ContactCandidate nonexact_candidate(const MagneticSystem& sys) {
  if (sys.surface().is_torus()) throw UnsupportedError("the torus has no non-exact candidate");
  ContactCandidate c;
  c.kind = CandidateKind::NonExact;
  c.zeta = contact_zeta(sys);
  c.ratio = flux_total(sys) / (2 * kPi * sys.surface().euler_characteristic());
  return c;
}

double candidate_on_flow(const MagneticSystem& sys, double s, const ContactCandidate& c, const SMPoint& x) {
  const SurfaceModel& surf = sys.surface();
  const double f = sys.f(x.q);
  switch (c.kind) {
    case CandidateKind::HomogeneousPlus: return 1 + s * s * f;
    case CandidateKind::HomogeneousMinus: return 1 - s * s * f;
    case CandidateKind::ExactPrimitive: return 1 - s * c.zeta->value(x.q).dot(unit_vector(surf, x));
    case CandidateKind::NonExact:
      return 1 - s * c.zeta->value(x.q).dot(unit_vector(surf, x)) + s * s * c.ratio * f;
    case CandidateKind::ClosedTorus: {
      const SMVector X = frame_X(surf, x);
      return X(2) + s * f + c.a * X(0) + c.b * X(1);
    }
  }
  return 0;
}

ContactCertificate contact_candidate_min(const MagneticSystem& sys, double s, const ContactCandidate& c,
                                         const SMGrid& grid) {
  const SurfaceModel& surf = sys.surface();
  if ((c.kind == CandidateKind::ExactPrimitive || c.kind == CandidateKind::NonExact) && !c.zeta)
    throw InvalidCandidate("candidate needs a primitive zeta");
  if (c.kind == CandidateKind::ClosedTorus && !surf.is_torus())
    throw InvalidCandidate("closed fiber forms are only used on the torus");
  if (grid.q < 2 || grid.fiber < 1) throw DomainError("SM grid too small");
  const std::vector<BaseNode> nodes = base_nodes(surf, grid.q);

  // spot-check d tau = ratio * omega_s on small coordinate parallelograms
  ContactCertificate cert;
  cert.s = s;
  {
    std::vector<double> d, w;
    const double h = 1e-3;
    const SMVector axes[3] = {{h, 0, 0}, {0, h, 0}, {0, 0, h}};
    for (std::size_t n = 0; n < nodes.size(); n += std::max<std::size_t>(1, nodes.size() / 5))
      for (int a = 0; a < 3; ++a) {
        const SMVector e1 = axes[a], e2 = axes[(a + 1) % 3];
        const SMPoint x{nodes[n].q, 0.7 + n};
        const SMPoint corner = shifted(x, -0.5 * (e1 + e2));
        d.push_back(circulation([&](const SMPoint& y, const SMVector& v) { return candidate_form(sys, s, c, y, v); },
                                corner, e1, e2));
        w.push_back(omega_s(sys, s, x, e1, e2));
      }
    double num = 0, den = 0, scale = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      num += d[i] * w[i];
      den += w[i] * w[i];
      scale = std::max(scale, std::abs(w[i]));
    }
    cert.d_ratio = den > 0 ? num / den : 0.0;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (std::abs(d[i] - cert.d_ratio * w[i]) > 1e-5 * std::max(scale, 1e-12))
        throw InvalidCandidate("d tau is not proportional to omega_s");
  }

  std::vector<double> lo(nodes.size()), hi(nodes.size());
  parallel_for(static_cast<int>(nodes.size()), [&](int i) {
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    for (int j = 0; j < grid.fiber; ++j) {
      const double v = candidate_on_flow(sys, s, c, {nodes[i].q, 2 * kPi * j / grid.fiber});
      mn = std::min(mn, v);
      mx = std::max(mx, v);
    }
    lo[i] = mn;
    hi[i] = mx;
  });
  cert.min_value = *std::min_element(lo.begin(), lo.end());
  cert.max_value = *std::max_element(hi.begin(), hi.end());
  cert.verdict = cert.min_value > 0   ? ContactVerdict::Positive
                 : cert.max_value < 0 ? ContactVerdict::Negative
                                      : ContactVerdict::Indeterminate;
  static const char* names[] = {"alpha + s psi", "alpha - s psi", "alpha - s zeta",
                                "alpha - s zeta + s [sigma]/(2 pi chi) psi", "psi + a du + b dv"};
  cert.witness = names[static_cast<int>(c.kind)];
  return cert;
}

LiouvilleAction liouville_action(const MagneticSystem& sys, double s, const SMGrid& grid) {
  const SurfaceModel& surf = sys.surface();
  if (!surf.compact()) throw UnsupportedError("Liouville volume needs a compact surface");
  const PrimitivePtr zeta = contact_zeta(sys);
  const double flux = flux_total(sys);
  const bool exact = exact_on_torus(sys);
  const double ratio = exact ? 0.0 : flux / (2 * kPi * surf.euler_characteristic());
  const std::vector<BaseNode> nodes = base_nodes(surf, grid.q);
  std::vector<double> vol(nodes.size()), act(nodes.size()), flip(nodes.size());
  const double dphi = 2 * kPi / grid.fiber;
  parallel_for(static_cast<int>(nodes.size()), [&](int i) {
    const Vec2 z = zeta->value(nodes[i].q);
    const double f = sys.f(nodes[i].q);
    double a = 0, fl = 0;
    for (int j = 0; j < grid.fiber; ++j) {
      const double zv = z.dot(unit_vector(surf, {nodes[i].q, j * dphi}));
      a += 1 - s * zv + s * s * ratio * f;
      fl += zv;
    }
    vol[i] = nodes[i].weight * dphi * grid.fiber;
    act[i] = nodes[i].weight * dphi * a;
    flip[i] = nodes[i].weight * dphi * fl;
  });
  LiouvilleAction out{0, 0, 0, 0};
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    out.volume += vol[i];
    out.quadrature_action += act[i];
    out.flip_integral += flip[i];
  }
  const double area = exact_area(surf);
  out.closed_form_action = 2 * kPi * area + (exact ? 0.0 : s * s * flux * flux / surf.euler_characteristic());
  return out;
}

RotationVector rotation_vector_liouville(const MagneticSystem& sys, double s, const SMGrid& grid) {
  const SurfaceModel& surf = sys.surface();
  RotationVector r;
  if (!surf.is_torus()) return r;  // the fiber class vanishes in real homology when chi != 0
  r.torus = true;
  const std::vector<BaseNode> nodes = base_nodes(surf, grid.q);
  const double dphi = 2 * kPi / grid.fiber;
  std::vector<Eigen::Vector3d> part(nodes.size());
  parallel_for(static_cast<int>(nodes.size()), [&](int i) {
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    const double f = sys.f(nodes[i].q);
    for (int j = 0; j < grid.fiber; ++j) {
      SMVector X = frame_X(surf, {nodes[i].q, j * dphi});
      X(2) += s * f;
      acc += X;
    }
    part[i] = nodes[i].weight * dphi * acc;
  });
  Eigen::Vector3d tot = Eigen::Vector3d::Zero();
  for (const auto& p : part) tot += p;
  // pair with the closed forms du / lx, dv / ly, dphi / 2 pi
  r.m = tot(0) / surf.lx();
  r.n = tot(1) / surf.ly();
  r.fiber = tot(2) / (2 * kPi);
  return r;
}

RotationVector rotation_vector_orbit(const MagneticSystem& sys, const Orbit& orbit) {
  RotationVector r;
  if (!sys.surface().is_torus()) return r;
  r.torus = true;
  r.m = orbit.homotopy.m;
  r.n = orbit.homotopy.n;
  double turn = 0;
  const auto& sm = orbit.trajectory.samples;
  for (std::size_t i = 1; i < sm.size(); ++i)
    turn += wrap_angle(std::atan2(sm[i].state.v.y(), sm[i].state.v.x()) -
                       std::atan2(sm[i - 1].state.v.y(), sm[i - 1].state.v.x()));
  r.fiber = std::round(turn / (2 * kPi) * 1e9) / 1e9;
  return r;
}

GaussBonnetCheck gauss_bonnet_action_check(const MagneticSystem& sys, const Orbit& orbit, int polygon_vertices) {
  const SurfaceModel& surf = sys.surface();
  if (!orbit.homotopy.contractible) throw InvalidRegion("orbit does not bound a disc");
  const double k = orbit.energy, s = orbit.s, speed = std::sqrt(2 * k);
  // uniform samples over exactly one period
  std::vector<TangentState> xs;
  double dt = orbit.trajectory.dt;
  {
    const auto& sm = orbit.trajectory.samples;
    bool uniform = sm.size() > 8;
    for (std::size_t i = 1; i < sm.size() && uniform; ++i) uniform = std::abs(sm[i].t - sm[i - 1].t - dt) < 1e-9 * dt;
    if (uniform && std::abs(sm.back().t - orbit.period) < 1e-9 * orbit.period) {
      for (const auto& x : sm) xs.push_back(x.state);
    } else {
      const long n = std::max(64L, static_cast<long>(std::ceil(orbit.period / dt)));
      dt = orbit.period / static_cast<double>(n);
      const Trajectory tr = integrate(sys, sm.front().state, orbit.period, dt);
      if (tr.truncated) throw InvalidRegion("orbit left the domain when resampled");
      for (const auto& x : tr.samples) xs.push_back(x.state);
    }
  }
  const int chart = xs.front().q.chart;
  for (auto& x : xs)
    if (x.q.chart != chart) x.q = surf.to_chart(x.q, chart, &x.v);
  const int n = static_cast<int>(xs.size()) - 1;  // last sample closes the loop

  const bool exact = exact_on_torus(sys);
  const PrimitivePtr zeta = contact_zeta(sys);
  const double flux = exact ? 0.0 : flux_total(sys);
  const double ratio = exact ? 0.0 : flux / (2 * kPi * surf.euler_characteristic());
  double action = 0, omega = 0, turn = 0;
  for (int i = 0; i < n; ++i) {
    const Vec2 vhat = xs[i].v / speed;
    const ConformalJet j = surf.log_factor(xs[i].q);
    action += 1 - s * zeta->value(xs[i].q).dot(vhat) + s * s * ratio * sys.f(xs[i].q);
    omega += -j.lv * vhat.x() + j.lu * vhat.y();
    turn += wrap_angle(std::atan2(xs[i + 1].v.y(), xs[i + 1].v.x()) - std::atan2(xs[i].v.y(), xs[i].v.x()));
  }
  action *= speed * dt;
  omega *= speed * dt;

  RegionCurve poly{chart, {}, 0};
  const int m = std::min(polygon_vertices, n);
  for (int i = 0; i < m; ++i) poly.points.push_back(xs[static_cast<std::size_t>(i) * n / m].q.xy());
  double signed_area = 0;
  for (int i = 0; i < m; ++i) {
    const Vec2& a = poly.points[i];
    const Vec2& b = poly.points[(i + 1) % m];
    signed_area += a.x() * b.y() - a.y() * b.x();
  }
  GaussBonnetCheck out{};
  out.orientation = signed_area > 0 ? 1.0 : -1.0;
  out.lhs = action / s;
  out.rhs = taimanov_value({poly}, sys, k) + (exact ? 0.0 : out.orientation * flux / surf.euler_characteristic());
  out.residual = std::abs(out.lhs - out.rhs);
  // Gauss-Bonnet on the disc in its own orientation
  double k_mu = 0;
  if (surf.kind() != SurfaceKind::FlatTorus) {
    // fan quadrature of K mu
    const GaussRule& r = gauss_legendre(8);
    Vec2 centre = Vec2::Zero();
    for (const auto& p : poly.points) centre += p;
    centre /= m;
    for (int i = 0; i < m; ++i) {
      const Vec2 a = poly.points[i] - centre, ba = poly.points[(i + 1) % m] - poly.points[i];
      const double jac = a.x() * ba.y() - a.y() * ba.x();
      for (std::size_t iu = 0; iu < r.x.size(); ++iu) {
        const double u = 0.5 * (r.x[iu] + 1);
        for (std::size_t iv = 0; iv < r.x.size(); ++iv) {
          const double v = 0.5 * (r.x[iv] + 1);
          const ChartPoint p = ChartPoint::at(chart, centre + u * a + u * v * ba);
          const MetricData md = metric_at(surf, p);
          k_mu += 0.25 * r.w[iu] * r.w[iv] * u * jac * md.K * md.mu_density;
        }
      }
    }
  }
  out.gauss_bonnet = out.orientation * (k_mu + turn + omega);
  out.gauss_bonnet_residual = std::abs(out.gauss_bonnet - 2 * kPi);
  return out;
}

}  // namespace magflow

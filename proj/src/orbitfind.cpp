#include "magflow/orbitfind.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <complex>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>

#include "magflow/errors.hpp"
#include "magflow/kernels.hpp"
#include "magflow/numerics.hpp"

namespace magflow {

namespace {
constexpr double kPi = std::numbers::pi;
}

OracleResult homogeneous_oracle(OracleKind kind, double s) {
  if (!(s > 0)) throw DomainError("strength s must be positive");
  OracleResult r;
  switch (kind) {
    case OracleKind::Sphere:
      r = {true, std::atan(1.0 / s), 2 * kPi * s / std::sqrt(s * s + 1)};
      break;
    case OracleKind::Torus:
      r = {true, 1.0 / s, 2 * kPi};
      break;
    case OracleKind::Hyperbolic:
      if (s > 1) r = {true, std::atanh(1.0 / s), 2 * kPi * s / std::sqrt(s * s - 1)};
      break;
  }
  return r;
}

// ---------------------------------------------------------------- shooting

Section section_through(const MagneticSystem& sys, const TangentState& x, bool lattice) {
  TangentState y = x;
  y.q = sys.surface().canonical(y.q, &y.v);
  const int c = std::abs(y.v.x()) >= std::abs(y.v.y()) ? 0 : 1;
  if (y.v[c] == 0) throw DegenerateInput("zero velocity has no transverse section");
  return {y.q.chart, c, c == 0 ? y.q.u : y.q.v, y.v[c] > 0 ? 1 : -1, lattice && sys.surface().is_torus()};
}

namespace {

struct SectionCoords {
  const MagneticSystem& sys;
  Section sec;
  double k;

  TangentState state(const Vec2& z) const {
    ChartPoint q{sec.chart, 0, 0};
    (sec.coord == 0 ? q.u : q.v) = sec.value;
    (sec.coord == 0 ? q.v : q.u) = z.x();
    const double lam = sys.surface().log_factor(q).lam;
    return {q, std::sqrt(2 * k) * std::exp(-lam) * Vec2(std::cos(z.y()), std::sin(z.y()))};
  }
  Vec2 coords(const TangentState& x) const {
    ChartPoint q = x.q;
    Vec2 v = x.v;
    if (q.chart != sec.chart) q = sys.surface().to_chart(q, sec.chart, &v);
    return {sec.coord == 0 ? q.v : q.u, std::atan2(v.y(), v.x())};
  }
  Vec2 difference(const Vec2& a, const Vec2& b) const {
    double dp = a.x() - b.x();
    if (sec.lattice) dp = std::remainder(dp, sec.coord == 0 ? sys.surface().ly() : sys.surface().lx());
    return {dp, wrap_angle(a.y() - b.y())};
  }
};

}  // namespace

Orbit shoot_periodic(const MagneticSystem& sys, double k, const TangentState& seed, const Section& section,
                     const ShootParams& params) {
  if (!(k > 0)) throw DomainError("energy must be positive");
  const SectionCoords sc{sys, section, k};
  TangentState start = with_energy(sys, seed, k);
  Vec2 z = sc.coords(start);
  auto residual = [&](const Vec2& zz, double* period) {
    const ReturnResult r = poincare_return(sys, section, sc.state(zz), params.max_time, params.dt);
    if (period) *period = r.time;
    return sc.difference(sc.coords(r.state), zz);
  };
  double period = 0;
  Vec2 F = residual(z, &period);
  double prev = std::numeric_limits<double>::infinity();
  int it = 0;
  bool converged = false;
  for (; it < params.max_iter; ++it) {
    const double fn = F.norm();
    if (fn < params.tol || (fn < 1e-8 && fn > 0.5 * prev)) {
      converged = true;
      break;
    }
    Eigen::Matrix2d J;
    for (int i = 0; i < 2; ++i) {
      Vec2 zp = z;
      zp[i] += params.fd_step;
      J.col(i) = (residual(zp, nullptr) - F) / params.fd_step;
    }
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(J, Eigen::ComputeFullU | Eigen::ComputeFullV);
    svd.setThreshold(1e-8);
    const Vec2 dz = -svd.solve(F);
    if (dz.norm() < params.tol) {
      z += dz;
      F = residual(z, &period);
      converged = true;
      ++it;
      break;
    }
    // damped update
    double a = 1.0;
    Vec2 Fn;
    double pn = period;
    for (int h = 0; h < 12; ++h, a *= 0.5) {
      try {
        Fn = residual(z + a * dz, &pn);
      } catch (const NoReturn&) {
        continue;
      }
      if (Fn.norm() < fn) break;
    }
    prev = fn;
    z += a * dz;
    F = Fn;
    period = pn;
  }
  if (!converged) throw NoConvergence("shooting did not converge within the iteration budget");

  Orbit orbit;
  const TangentState x0 = sc.state(z);
  orbit.trajectory = integrate(sys, x0, period, params.dt);
  orbit.period = period;
  orbit.energy = k;
  orbit.s = s_of_energy(k);
  orbit.newton_iterations = it;
  orbit.homotopy = homotopy_of(sys, orbit.trajectory);
  orbit.curvature_residual = curvature_residual(sys, orbit.trajectory, orbit.s);
  TangentState xe = orbit.trajectory.samples.back().state;
  if (xe.q.chart != x0.q.chart) xe.q = sys.surface().to_chart(xe.q, x0.q.chart, &xe.v);
  Vec2 dq = xe.q.xy() - x0.q.xy();
  if (sys.surface().is_torus()) {
    dq.x() = std::remainder(dq.x(), sys.surface().lx());
    dq.y() = std::remainder(dq.y(), sys.surface().ly());
  }
  orbit.closure_gap = std::hypot(dq.norm(), (xe.v - x0.v).norm());
  return orbit;
}

Orbit shoot_periodic(const MagneticSystem& sys, double k, const TangentState& seed, const ShootParams& params) {
  return shoot_periodic(sys, k, seed, section_through(sys, seed, params.lattice_section), params);
}

namespace {

// Node coordinates (u, v, heading) with speed fixed by the energy.
TangentState node_state(const MagneticSystem& sys, double k, int chart, const Eigen::Vector3d& z) {
  const ChartPoint q{chart, z(0), z(1)};
  const double lam = sys.surface().log_factor(q).lam;
  return {q, std::sqrt(2 * k) * std::exp(-lam) * Vec2(std::cos(z(2)), std::sin(z(2)))};
}

Trajectory segment_flow(const MagneticSystem& sys, const TangentState& x, double t, double dt) {
  if (!(t > 0)) throw NoConvergence("multiple shooting drove the period to zero");
  const long steps = std::max(1L, static_cast<long>(std::ceil(t / dt)));
  Trajectory tr = integrate(sys, x, t, t / static_cast<double>(steps));
  if (tr.truncated) throw NoReturn("segment left the domain: " + tr.truncation_reason);
  return tr;
}

}  // namespace

Orbit shoot_multiple(const MagneticSystem& sys, double k, const std::vector<TangentState>& nodes, double period,
                     const ShootParams& params) {
  if (!(k > 0)) throw DomainError("energy must be positive");
  if (!(period > 0)) throw DomainError("period guess must be positive");
  const int M = static_cast<int>(nodes.size());
  if (M < 2) throw DomainError("multiple shooting needs at least two nodes");
  const SurfaceModel& surf = sys.surface();
  std::vector<int> chart(M);
  const int dim = 3 * M + 1;
  Eigen::VectorXd z(dim);
  for (int j = 0; j < M; ++j) {
    TangentState x = nodes[j];
    x.q = surf.canonical(x.q, &x.v);
    chart[j] = x.q.chart;
    z.segment<3>(3 * j) << x.q.u, x.q.v, std::atan2(x.v.y(), x.v.x());
  }
  z(dim - 1) = period;
  const Vec2 anchor(z(0), z(1));
  const Vec2 heading(std::cos(z(2)), std::sin(z(2)));
  auto defect = [&](const TangentState& end, int j) {
    TangentState e = end;
    if (e.q.chart != chart[j]) e.q = surf.to_chart(e.q, chart[j], &e.v);
    Eigen::Vector3d d(e.q.u - z(3 * j), e.q.v - z(3 * j + 1), 0.0);
    if (surf.is_torus()) {
      d(0) = std::remainder(d(0), surf.lx());
      d(1) = std::remainder(d(1), surf.ly());
    }
    d(2) = wrap_angle(std::atan2(e.v.y(), e.v.x()) - z(3 * j + 2));
    return d;
  };
  // residual: segment matching defects plus a phase condition on node 0
  auto residual = [&](const Eigen::VectorXd& zz) {
    Eigen::VectorXd F(dim);
    const Eigen::VectorXd saved = z;
    z = zz;
    try {
      for (int j = 0; j < M; ++j) {
        const TangentState x = node_state(sys, k, chart[j], zz.segment<3>(3 * j));
        const Trajectory tr = segment_flow(sys, x, zz(dim - 1) / M, params.dt);
        F.segment<3>(3 * j) = defect(tr.samples.back().state, (j + 1) % M);
      }
    } catch (...) {
      z = saved;
      throw;
    }
    z = saved;
    F(dim - 1) = (Vec2(zz(0), zz(1)) - anchor).dot(heading);
    return F;
  };
  Eigen::VectorXd F = residual(z);
  double prev = std::numeric_limits<double>::infinity();
  int it = 0;
  bool converged = false;
  for (; it < params.max_iter; ++it) {
    const double fn = F.norm();
    if (fn < params.tol || (fn < 1e-8 && fn > 0.5 * prev)) {
      converged = true;
      break;
    }
    Eigen::MatrixXd J(dim, dim);
    for (int i = 0; i < dim; ++i) {
      Eigen::VectorXd zp = z;
      const double h = params.fd_step * (i == dim - 1 ? std::max(1.0, z(i)) : 1.0);
      zp(i) += h;
      J.col(i) = (residual(zp) - F) / h;
    }
    const Eigen::VectorXd dz = -J.colPivHouseholderQr().solve(F);
    double a = 1.0;
    Eigen::VectorXd Fn = F;
    bool improved = false;
    for (int h = 0; h < 12 && !improved; ++h, a *= 0.5) {
      try {
        Fn = residual(z + a * dz);
        improved = Fn.norm() < fn;
      } catch (const Error&) {
      }
      if (improved) break;
    }
    if (!improved) break;
    prev = fn;
    z += a * dz;
    F = Fn;
    if (a * dz.norm() < params.tol) {
      converged = F.norm() < 1e-8;
      ++it;
      break;
    }
  }
  if (!converged) throw NoConvergence("multiple shooting did not converge");

  Orbit orbit;
  orbit.period = z(dim - 1);
  orbit.energy = k;
  orbit.s = s_of_energy(k);
  orbit.newton_iterations = it;
  double offset = 0;
  for (int j = 0; j < M; ++j) {
    const Trajectory tr = segment_flow(sys, node_state(sys, k, chart[j], z.segment<3>(3 * j)), orbit.period / M, params.dt);
    orbit.trajectory.dt = tr.dt;
    orbit.trajectory.max_energy_drift = std::max(orbit.trajectory.max_energy_drift, tr.max_energy_drift);
    // keep torus lifts continuous across nodes
    Vec2 shift = Vec2::Zero();
    if (j > 0 && surf.is_torus()) {
      const Vec2 jump = tr.samples[0].state.q.xy() - orbit.trajectory.samples.back().state.q.xy();
      shift = {std::round(jump.x() / surf.lx()) * surf.lx(), std::round(jump.y() / surf.ly()) * surf.ly()};
    }
    for (std::size_t i = (j == 0 ? 0 : 1); i < tr.samples.size(); ++i) {
      Sample smp = tr.samples[i];
      smp.t += offset;
      smp.state.q.u -= shift.x();
      smp.state.q.v -= shift.y();
      orbit.trajectory.samples.push_back(smp);
    }
    offset += orbit.period / M;
  }
  orbit.closure_gap = F.head(3 * M).cwiseAbs().maxCoeff();
  orbit.homotopy = homotopy_of(sys, orbit.trajectory);
  orbit.curvature_residual = curvature_residual(sys, orbit.trajectory, orbit.s);
  return orbit;
}

EuclideanCircle fit_circle(const std::vector<Vec2>& pts) {
  if (pts.size() < 3) throw DegenerateInput("circle fit needs at least three points");
  Vec2 mean = Vec2::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  Eigen::MatrixXd A(pts.size(), 3);
  Eigen::VectorXd b(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec2 d = pts[i] - mean;
    A(i, 0) = d.x();
    A(i, 1) = d.y();
    A(i, 2) = 1.0;
    b(i) = -d.squaredNorm();
  }
  const Eigen::Vector3d c = A.colPivHouseholderQr().solve(b);
  const Vec2 centre(-0.5 * c(0), -0.5 * c(1));
  return {centre + mean, std::sqrt(centre.squaredNorm() - c(2))};
}

double measure_geodesic_radius(const MagneticSystem& sys, const Trajectory& tr) {
  const SurfaceModel& s = sys.surface();
  if (tr.samples.size() < 3) throw DegenerateInput("too few samples for a radius");
  switch (s.kind()) {
    case SurfaceKind::RoundSphere: {
      std::vector<Vec3> pts;
      Vec3 mean = Vec3::Zero();
      for (const auto& smp : tr.samples) {
        pts.push_back(s.embed(smp.state.q));
        mean += pts.back();
      }
      mean /= static_cast<double>(pts.size());
      Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
      for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
      const Vec3 n = es.eigenvectors().col(0);
      return std::acos(std::min(1.0, std::abs(n.dot(mean))));
    }
    case SurfaceKind::FlatTorus:
    case SurfaceKind::HyperbolicPlane: {
      std::vector<Vec2> pts;
      for (const auto& smp : tr.samples) pts.push_back(smp.state.q.xy());
      const EuclideanCircle c = fit_circle(pts);
      if (s.kind() == SurfaceKind::FlatTorus) return c.radius;
      if (c.radius >= c.centre.y()) throw DegenerateInput("fitted circle leaves the half-plane");
      return std::atanh(c.radius / c.centre.y());
    }
    case SurfaceKind::ConformalTorus:
      break;
  }
  throw UnsupportedError("geodesic radius is only measured on homogeneous surfaces");
}

Homotopy homotopy_of(const MagneticSystem& sys, const Trajectory& tr) {
  Homotopy h;
  if (!sys.surface().is_torus() || tr.samples.empty()) return h;
  const Vec2 d = tr.samples.back().state.q.xy() - tr.samples.front().state.q.xy();
  h.m = static_cast<int>(std::lround(d.x() / sys.surface().lx()));
  h.n = static_cast<int>(std::lround(d.y() / sys.surface().ly()));
  h.contractible = h.m == 0 && h.n == 0;
  return h;
}

// ---------------------------------------------------------------- loops

DiscreteLoop circle_loop(int chart, const Vec2& centre, double rho, int N, double T) {
  if (N < 3) throw DomainError("loops need at least three vertices");
  DiscreteLoop loop;
  loop.T = T;
  for (int i = 0; i < N; ++i) {
    const double a = 2 * kPi * i / N;
    loop.vertices.push_back({chart, centre.x() + rho * std::cos(a), centre.y() + rho * std::sin(a)});
  }
  return loop;
}

namespace {

void check_loop(const SurfaceModel& s, const DiscreteLoop& loop) {
  if (loop.size() < 3) throw DomainError("loops need at least three vertices");
  if (!(loop.T > 0)) throw DomainError("loop period must be positive");
  const int chart = loop.vertices[0].chart;
  for (const auto& p : loop.vertices) {
    if (p.chart != chart) throw DomainError("all loop vertices must share one chart");
    s.check_domain(p);
  }
  if (!loop.contractible() && !s.is_torus()) throw DomainError("winding numbers only make sense on the torus");
}

Vec2 closing_shift(const SurfaceModel& s, const DiscreteLoop& loop) {
  if (!s.is_torus()) return Vec2::Zero();
  return {loop.m * s.lx(), loop.n * s.ly()};
}

// Per-segment data, segment i joins x_i to x_{i+1}.
struct Segments {
  int N;
  int chart;
  std::vector<double> dx, dy, E, lu, lv;  // E = exp(2 lam(mid))
  std::vector<Vec2> mid;
};

Segments segments(const SurfaceModel& s, const DiscreteLoop& loop) {
  Segments g;
  g.N = loop.size();
  g.chart = loop.vertices[0].chart;
  const Vec2 shift = closing_shift(s, loop);
  g.dx.resize(g.N);
  g.dy.resize(g.N);
  g.E.resize(g.N);
  g.lu.resize(g.N);
  g.lv.resize(g.N);
  g.mid.resize(g.N);
  for (int i = 0; i < g.N; ++i) {
    const Vec2 a = loop.vertices[i].xy();
    const Vec2 b = i + 1 < g.N ? loop.vertices[i + 1].xy() : loop.vertices[0].xy() + shift;
    const Vec2 d = b - a;
    g.dx[i] = d.x();
    g.dy[i] = d.y();
    g.mid[i] = 0.5 * (a + b);
    const ConformalJet j = s.log_factor(ChartPoint::at(g.chart, g.mid[i]));
    g.E[i] = std::exp(2 * j.lam);
    g.lu[i] = j.lu;
    g.lv[i] = j.lv;
  }
  return g;
}

// sum_i E_i |dx_i|^2
double kinetic_sum(const Segments& g) { return kernels::weighted_norm2(g.E.data(), g.dx.data(), g.dy.data(), g.N); }

}  // namespace

PrimitivePtr loop_primitive(const MagneticSystem& sys, const DiscreteLoop& loop, double c1, double c2) {
  check_loop(sys.surface(), loop);
  if (loop.contractible()) {
    // the harmonic part integrates to zero around contractible loops
    double y0 = 0;
    for (const auto& p : loop.vertices) y0 += p.v;
    y0 /= loop.size();
    return local_primitive(sys, loop.vertices[0].chart, y0);
  }
  try {
    return exact_torus_primitive(sys, c1, c2);
  } catch (const NoGlobalPrimitive&) {
    throw UndefinedAction("non-contractible loop with non-exact field: the action has no primitive");
  }
}

LoopMeasures loop_measures(const MagneticSystem& sys, const DiscreteLoop& loop) {
  check_loop(sys.surface(), loop);
  const Segments g = segments(sys.surface(), loop);
  double len = 0;
  for (int i = 0; i < g.N; ++i) len += std::sqrt(g.E[i]) * std::hypot(g.dx[i], g.dy[i]);
  const double ks = kinetic_sum(g);
  return {len, g.N * ks, g.N * ks / (2 * loop.T * loop.T)};
}

DiscreteLoop reparametrize_uniform(const MagneticSystem& sys, const DiscreteLoop& loop) {
  check_loop(sys.surface(), loop);
  const Segments g = segments(sys.surface(), loop);
  std::vector<double> cum(g.N + 1, 0.0);
  for (int i = 0; i < g.N; ++i) cum[i + 1] = cum[i] + std::sqrt(g.E[i]) * std::hypot(g.dx[i], g.dy[i]);
  DiscreteLoop out = loop;
  int seg = 0;
  for (int j = 1; j < g.N; ++j) {
    const double target = cum[g.N] * j / g.N;
    while (seg < g.N - 1 && cum[seg + 1] < target) ++seg;
    const double t = (target - cum[seg]) / (cum[seg + 1] - cum[seg]);
    const ChartPoint& a = loop.vertices[seg];
    out.vertices[j] = {a.chart, a.u + t * g.dx[seg], a.v + t * g.dy[seg]};
  }
  return out;
}

double discrete_action(const DiscreteLoop& loop, const MagneticSystem& sys, double k, const Primitive& theta) {
  check_loop(sys.surface(), loop);
  const Segments g = segments(sys.surface(), loop);
  double flux = 0;
  for (int i = 0; i < g.N; ++i) flux += theta.value(ChartPoint::at(g.chart, g.mid[i])).dot(Vec2(g.dx[i], g.dy[i]));
  return g.N * kinetic_sum(g) / (2 * loop.T) + k * loop.T - flux;
}

double discrete_action(const DiscreteLoop& loop, const MagneticSystem& sys, double k) {
  return discrete_action(loop, sys, k, *loop_primitive(sys, loop));
}

ActionGradient discrete_action_gradient(const DiscreteLoop& loop, const MagneticSystem& sys, double k,
                                        const Primitive& theta) {
  check_loop(sys.surface(), loop);
  const Segments g = segments(sys.surface(), loop);
  const int N = g.N;
  const double T = loop.T;
  std::vector<Vec2> gd(N), gm(N);
  for (int i = 0; i < N; ++i) {
    const ChartPoint m = ChartPoint::at(g.chart, g.mid[i]);
    const Vec2 d(g.dx[i], g.dy[i]);
    const Vec2 th = theta.value(m);
    const Eigen::Matrix2d J = theta.jacobian(m);
    gd[i] = (N / T) * g.E[i] * d - th;
    gm[i] = (N / (2 * T)) * d.squaredNorm() * 2 * g.E[i] * Vec2(g.lu[i], g.lv[i]) - J.transpose() * d;
  }
  ActionGradient out;
  out.vertex.resize(N);
  for (int j = 0; j < N; ++j) {
    const int p = (j + N - 1) % N;
    out.vertex[j] = gd[p] + 0.5 * gm[p] - gd[j] + 0.5 * gm[j];
  }
  out.dT = k - N * kinetic_sum(g) / (2 * T * T);
  return out;
}

ActionGradient discrete_action_gradient(const DiscreteLoop& loop, const MagneticSystem& sys, double k) {
  return discrete_action_gradient(loop, sys, k, *loop_primitive(sys, loop));
}

namespace {

// Scalar block of the discrete W^{1,2} metric:
//   h sum E(x_i) |xi_i|^2 + sum E(m_i) |xi_{i+1} - xi_i|^2 / h
struct H1Metric {
  std::vector<double> lower, diag, upper;
};

H1Metric h1_metric(const SurfaceModel& s, const DiscreteLoop& loop, const Segments& g) {
  const int N = g.N;
  const double h = 1.0 / N;
  H1Metric m{std::vector<double>(N), std::vector<double>(N), std::vector<double>(N)};
  for (int i = 0; i < N; ++i) {
    const int p = (i + N - 1) % N;
    const double ev = std::exp(2 * s.log_factor(loop.vertices[i]).lam);
    m.diag[i] = h * ev + (g.E[p] + g.E[i]) / h;
    m.lower[i] = -g.E[p] / h;
    m.upper[i] = -g.E[i] / h;
  }
  return m;
}

// Infinitesimal isometries preserving the field, sampled at the vertices.
// Discretisation breaks these symmetries at O(h^2), which leaves near-null
// Hessian modes; stationarity is measured modulo them.
using KillingBasis = std::vector<std::vector<Vec2>>;

KillingBasis killing_basis(const MagneticSystem& sys, const DiscreteLoop& loop) {
  using C = std::complex<double>;
  const SurfaceKind kind = sys.surface().kind();
  const MagneticField& f = sys.field();
  std::vector<C (*)(C)> gens;
  if (kind == SurfaceKind::RoundSphere && f.kind() == MagneticField::Kind::SphereHeight) {
    gens = {[](C z) { return C(0, 1) * z; }};
  } else if (f.is_constant()) {
    switch (kind) {
      case SurfaceKind::RoundSphere:
        gens = {[](C z) { return C(0, 1) * z; }, [](C z) { return 1.0 - z * z; },
                [](C z) { return C(0, 1) * (1.0 + z * z); }};
        break;
      case SurfaceKind::HyperbolicPlane:
        gens = {[](C) { return C(1, 0); }, [](C z) { return z; }, [](C z) { return z * z; }};
        break;
      case SurfaceKind::FlatTorus:
        gens = {[](C) { return C(1, 0); }, [](C) { return C(0, 1); }};
        if (loop.contractible()) gens.push_back([](C z) { return C(0, 1) * z; });
        break;
      default:
        break;
    }
  }
  KillingBasis basis;
  for (auto* gen : gens) {
    std::vector<Vec2> col(loop.size());
    for (int i = 0; i < loop.size(); ++i) {
      const C w = gen(C(loop.vertices[i].u, loop.vertices[i].v));
      col[i] = {w.real(), w.imag()};
    }
    basis.push_back(std::move(col));
  }
  return basis;
}

std::vector<Vec2> apply_metric(const H1Metric& m, const std::vector<Vec2>& x) {
  const int N = static_cast<int>(x.size());
  std::vector<Vec2> out(N);
  for (int i = 0; i < N; ++i)
    out[i] = m.diag[i] * x[i] + m.lower[i] * x[(i + N - 1) % N] + m.upper[i] * x[(i + 1) % N];
  return out;
}

// Riesz representative (sharp) of the vertex gradient, projected
// G-orthogonally off the Killing directions; returns the dual norm squared.
double sharpen(const H1Metric& m, const ActionGradient& grad, std::vector<Vec2>& out,
               const KillingBasis& killing = {}) {
  const int N = static_cast<int>(grad.vertex.size());
  std::vector<double> gx(N), gy(N);
  for (int i = 0; i < N; ++i) {
    gx[i] = grad.vertex[i].x();
    gy[i] = grad.vertex[i].y();
  }
  solve_cyclic_tridiagonal(m.lower, m.diag, m.upper, gx);
  solve_cyclic_tridiagonal(m.lower, m.diag, m.upper, gy);
  out.resize(N);
  double n2 = grad.dT * grad.dT;
  for (int i = 0; i < N; ++i) {
    out[i] = {gx[i], gy[i]};
    n2 += out[i].dot(grad.vertex[i]);
  }
  const int r = static_cast<int>(killing.size());
  if (r == 0) return n2;
  Eigen::MatrixXd A(r, r);
  Eigen::VectorXd c(r);
  for (int a = 0; a < r; ++a) {
    const std::vector<Vec2> Gk = apply_metric(m, killing[a]);
    c(a) = 0;
    for (int i = 0; i < N; ++i) c(a) += killing[a][i].dot(grad.vertex[i]);
    for (int b = 0; b < r; ++b) {
      A(a, b) = 0;
      for (int i = 0; i < N; ++i) A(a, b) += killing[b][i].dot(Gk[i]);
    }
  }
  const Eigen::VectorXd y = A.completeOrthogonalDecomposition().solve(c);
  for (int a = 0; a < r; ++a)
    for (int i = 0; i < N; ++i) out[i] -= y(a) * killing[a][i];
  return n2 - c.dot(y);
}

DiscreteLoop displaced(const DiscreteLoop& loop, const std::vector<Vec2>& dir, double dT, double a) {
  DiscreteLoop out = loop;
  for (int i = 0; i < loop.size(); ++i) {
    out.vertices[i].u += a * dir[i].x();
    out.vertices[i].v += a * dir[i].y();
  }
  out.T += a * dT;
  return out;
}

}  // namespace

double gradient_dual_norm(const DiscreteLoop& loop, const MagneticSystem& sys, const ActionGradient& grad) {
  const Segments g = segments(sys.surface(), loop);
  std::vector<Vec2> sharp;
  return std::sqrt(std::max(0.0, sharpen(h1_metric(sys.surface(), loop, g), grad, sharp)));
}

namespace {

struct Evaluator {
  const MagneticSystem& sys;
  double k;
  const Primitive& theta;

  bool valid(const DiscreteLoop& l) const {
    if (!(l.T > 0)) return false;
    try {
      for (const auto& p : l.vertices) sys.surface().check_domain(p);
    } catch (const DomainError&) {
      return false;
    }
    return true;
  }
  double action(const DiscreteLoop& l) const { return discrete_action(l, sys, k, theta); }
  ActionGradient gradient(const DiscreteLoop& l) const { return discrete_action_gradient(l, sys, k, theta); }
  // dual norm modulo the Killing directions
  double dual(const DiscreteLoop& l, const ActionGradient& g) const {
    const Segments seg = segments(sys.surface(), l);
    std::vector<Vec2> sharp;
    return std::sqrt(std::max(0.0, sharpen(h1_metric(sys.surface(), l, seg), g, sharp, killing_basis(sys, l))));
  }
};

int colour_count(int N) {
  for (int c = 3; c <= 12; ++c)
    if (N % c == 0) return c;
  return N;
}

// One Newton step on the gradient with a finite-difference Hessian. Returns
// true if the dual gradient norm decreased.
bool newton_step(const Evaluator& ev, DiscreteLoop& loop, ActionGradient& grad, double& eta) {
  const int N = loop.size();
  const int dim = 2 * N + 1;
  double mean_edge = 0;
  {
    const Segments g = segments(ev.sys.surface(), loop);
    for (int i = 0; i < N; ++i) mean_edge += std::hypot(g.dx[i], g.dy[i]);
    mean_edge /= N;
  }
  const double ex = 1e-4 * std::max(mean_edge, 1e-12);
  const double eT = 1e-6 * loop.T;
  const int colours = colour_count(N);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(dim) * 12);
  std::map<std::pair<int, int>, double> entries;
  for (int d = 0; d < 2; ++d)
    for (int c = 0; c < colours; ++c) {
      DiscreteLoop lp = loop, lm = loop;
      for (int i = c; i < N; i += colours) {
        (d == 0 ? lp.vertices[i].u : lp.vertices[i].v) += ex;
        (d == 0 ? lm.vertices[i].u : lm.vertices[i].v) -= ex;
      }
      if (!ev.valid(lp) || !ev.valid(lm)) return false;
      const ActionGradient gp = ev.gradient(lp), gm = ev.gradient(lm);
      for (int i = c; i < N; i += colours)
        for (int o = -1; o <= 1; ++o) {
          const int j = ((i + o) % N + N) % N;
          for (int e = 0; e < 2; ++e) {
            const double val = (gp.vertex[j][e] - gm.vertex[j][e]) / (2 * ex);
            entries[{2 * j + e, 2 * i + d}] += val;
          }
        }
    }
  {
    DiscreteLoop lp = loop, lm = loop;
    lp.T += eT;
    lm.T -= eT;
    const ActionGradient gp = ev.gradient(lp), gm = ev.gradient(lm);
    for (int j = 0; j < N; ++j)
      for (int e = 0; e < 2; ++e) {
        const double val = (gp.vertex[j][e] - gm.vertex[j][e]) / (2 * eT);
        entries[{2 * j + e, 2 * N}] += val;
        entries[{2 * N, 2 * j + e}] += val;
      }
    entries[{2 * N, 2 * N}] += (gp.dT - gm.dT) / (2 * eT);
  }
  // symmetrise the vertex block
  for (auto& [key, val] : entries) {
    if (key.first == 2 * N || key.second == 2 * N) {
      trip.emplace_back(key.first, key.second, val);
      continue;
    }
    auto it = entries.find({key.second, key.first});
    const double other = it == entries.end() ? 0.0 : it->second;
    trip.emplace_back(key.first, key.second, 0.5 * (val + other));
  }
  const Segments g = segments(ev.sys.surface(), loop);
  const H1Metric metric = h1_metric(ev.sys.surface(), loop, g);
  // border with G K so the step stays G-orthogonal to the Killing directions
  const KillingBasis killing = killing_basis(ev.sys, loop);
  const int r = static_cast<int>(killing.size());
  for (int a = 0; a < r; ++a) {
    const std::vector<Vec2> Gk = apply_metric(metric, killing[a]);
    for (int i = 0; i < N; ++i)
      for (int e = 0; e < 2; ++e) {
        trip.emplace_back(2 * i + e, dim + a, Gk[i][e]);
        trip.emplace_back(dim + a, 2 * i + e, Gk[i][e]);
      }
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim + r);
  for (int i = 0; i < N; ++i) {
    rhs(2 * i) = -grad.vertex[i].x();
    rhs(2 * i + 1) = -grad.vertex[i].y();
  }
  rhs(2 * N) = -grad.dT;
  for (double mu : {1e-10, 1e-7, 1e-4, 1e-2}) {
    std::vector<Eigen::Triplet<double>> t2 = trip;
    for (int i = 0; i < N; ++i) {
      const int p = (i + N - 1) % N;
      for (int e = 0; e < 2; ++e) {
        t2.emplace_back(2 * i + e, 2 * i + e, mu * metric.diag[i]);
        t2.emplace_back(2 * i + e, 2 * p + e, mu * metric.lower[i]);
        t2.emplace_back(2 * i + e, 2 * ((i + 1) % N) + e, mu * metric.upper[i]);
      }
    }
    t2.emplace_back(2 * N, 2 * N, mu);
    Eigen::SparseMatrix<double> M(dim + r, dim + r);
    M.setFromTriplets(t2.begin(), t2.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(M);
    if (lu.info() != Eigen::Success) continue;
    const Eigen::VectorXd step = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !step.allFinite()) continue;
    std::vector<Vec2> dir(N);
    for (int i = 0; i < N; ++i) dir[i] = {step(2 * i), step(2 * i + 1)};
    double a = 1.0;
    for (int h = 0; h < 10; ++h, a *= 0.5) {
      DiscreteLoop trial = displaced(loop, dir, step(2 * N), a);
      if (!ev.valid(trial)) continue;
      const ActionGradient gt = ev.gradient(trial);
      const double et = ev.dual(trial, gt);
      if (et < eta) {
        loop = std::move(trial);
        grad = gt;
        eta = et;
        return true;
      }
    }
  }
  return false;
}

}  // namespace

const char* outcome_name(DescentOutcome o) {
  switch (o) {
    case DescentOutcome::Converged: return "converged";
    case DescentOutcome::Collapsed: return "collapse";
    case DescentOutcome::MaxIterations: return "max_iterations";
  }
  return "?";
}

DescentResult descend_to_critical(const DiscreteLoop& loop0, const MagneticSystem& sys, double k,
                                  const DescentParams& params) {
  if (!(k > 0)) throw DomainError("energy must be positive");
  check_loop(sys.surface(), loop0);
  const PrimitivePtr theta = loop_primitive(sys, loop0, params.c1, params.c2);
  const Evaluator ev{sys, k, *theta};
  DescentResult res;
  DiscreteLoop loop = loop0;
  ActionGradient grad = ev.gradient(loop);
  double eta = ev.dual(loop, grad);
  double S = ev.action(loop);
  double alpha = 1e-2;
  int newton_cooldown = 0;
  int it = 0;
  for (; it < params.max_iter; ++it) {
    if (loop.T < params.T_min) {
      res.outcome = DescentOutcome::Collapsed;
      break;
    }
    if (eta < params.tol) {
      res.outcome = DescentOutcome::Converged;
      break;
    }
    if (eta < params.newton_switch && newton_cooldown == 0) {
      if (newton_step(ev, loop, grad, eta)) {
        S = ev.action(loop);
        ++res.newton_steps;
        continue;
      }
      newton_cooldown = 20;
    }
    if (newton_cooldown > 0) --newton_cooldown;
    // normalised steepest descent X = -sharp(eta) / sqrt(1 + |eta|^2)
    const Segments g = segments(sys.surface(), loop);
    std::vector<Vec2> sharp;
    const double n2 = sharpen(h1_metric(sys.surface(), loop, g), grad, sharp, killing_basis(sys, loop));
    const double scale = -1.0 / std::sqrt(1.0 + n2);
    for (auto& v : sharp) v *= scale;
    const double dT = scale * grad.dT;
    const double slope = scale * n2;
    bool moved = false;
    double a = alpha;
    for (int h = 0; h < 60; ++h, a *= 0.5) {
      if (loop.T + a * dT < 0.5 * loop.T) continue;
      DiscreteLoop trial = displaced(loop, sharp, dT, a);
      if (!ev.valid(trial)) continue;
      const double St = ev.action(trial);
      if (St <= S + 1e-4 * a * slope) {
        loop = std::move(trial);
        S = St;
        moved = true;
        break;
      }
    }
    if (!moved) {
      // no descent possible at double precision: try Newton regardless
      if (newton_step(ev, loop, grad, eta)) {
        S = ev.action(loop);
        ++res.newton_steps;
        continue;
      }
      break;
    }
    alpha = std::min(4.0 * a, 1.0);
    grad = ev.gradient(loop);
    eta = ev.dual(loop, grad);
  }
  if (res.outcome == DescentOutcome::MaxIterations) {
    if (loop.T < params.T_min) res.outcome = DescentOutcome::Collapsed;
    else if (eta < params.tol) res.outcome = DescentOutcome::Converged;
  }
  res.loop = loop;
  res.iterations = it;
  res.grad_norm = eta;
  res.action = S;
  res.mean_energy = loop_measures(sys, loop).mean_energy;
  return res;
}

Orbit loop_to_orbit(const MagneticSystem& sys, double k, const DiscreteLoop& loop, const ShootParams& params) {
  check_loop(sys.surface(), loop);
  const int N = loop.size();
  const Vec2 shift = closing_shift(sys.surface(), loop);
  const Vec2 prev = loop.vertices[N - 1].xy() - shift;
  const Vec2 v = (loop.vertices[1].xy() - prev) * (N / (2.0 * loop.T));
  const TangentState seed{loop.vertices[0], v};
  ShootParams p = params;
  p.lattice_section = p.lattice_section || !loop.contractible();
  return shoot_periodic(sys, k, seed, p);
}

void write_orbit_json(const std::string& path, const Orbit& orbit) {
  nlohmann::json j;
  j["period"] = orbit.period;
  j["energy"] = orbit.energy;
  j["s"] = orbit.s;
  j["residual"] = orbit.curvature_residual;
  j["closure_gap"] = orbit.closure_gap;
  j["homotopy"] = {{"contractible", orbit.homotopy.contractible}, {"m", orbit.homotopy.m}, {"n", orbit.homotopy.n}};
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << std::setw(2) << j << '\n';
}

void write_loop_csv(const std::string& path, const DiscreteLoop& loop) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "vertex,chart,u,v\n" << std::setprecision(17);
  for (int i = 0; i < loop.size(); ++i)
    out << i << ',' << loop.vertices[i].chart << ',' << loop.vertices[i].u << ',' << loop.vertices[i].v << '\n';
}

}  // namespace magflow

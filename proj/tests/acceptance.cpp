// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "magflow/contact.hpp"
#include "magflow/critical.hpp"
#include "magflow/errors.hpp"
#include "magflow/taimanov.hpp"

using namespace magflow;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
  bool ok = true;
  std::string detail;
  void check(bool cond, const std::string& what) {
    if (!cond) ok = false;
    if (!cond || detail.size() < 600) detail += (detail.empty() ? "" : "; ") + what + (cond ? "" : " [failed]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[96];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}
std::string fmt(const char* f, double a, double b) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// every orbit accepted by the criteria below, for the curvature invariant
std::vector<std::pair<std::string, double>> accepted_orbits;

void accept(const std::string& name, const Orbit& o) { accepted_orbits.push_back({name, o.curvature_residual}); }

const MagneticSystem& sphere_sys() {
  static const MagneticSystem s(SurfaceModel::sphere(), MagneticField::constant(1));
  return s;
}
const MagneticSystem& torus_sys() {
  static const MagneticSystem s(SurfaceModel::flat_torus(), MagneticField::constant(1));
  return s;
}
const MagneticSystem& plane_sys() {
  static const MagneticSystem s(SurfaceModel::hyperbolic(), MagneticField::constant(1));
  return s;
}
const MagneticSystem& genus2_sys() {
  static const MagneticSystem s(SurfaceModel::hyperbolic(2), MagneticField::constant(1));
  return s;
}

// Start on the circle of geodesic radius r about the south-pole chart origin:
// stereographic radius tan(r/2), heading counter-clockwise.
TangentState sphere_seed(double r) { return {{0, std::tan(r / 2), 0}, Vec2(0, 1)}; }

// Hyperbolic circle of radius r about i: Euclidean centre i cosh r, radius sinh r.
TangentState plane_seed(double r) { return {{0, std::sinh(r), std::cosh(r)}, Vec2(0, 1)}; }

Outcome sphere_orbits() {
  Outcome out;
  for (double s : {0.5, 1.0, 2.0}) {
    const double radius = std::atan(1 / s), period = 2 * kPi * s / std::sqrt(s * s + 1);
    const auto t0 = std::chrono::steady_clock::now();
    const Orbit o = shoot_periodic(sphere_sys(), energy_of_s(s), sphere_seed(radius));
    const double secs = seconds_since(t0);
    accept("sphere s=" + fmt("%g", s), o);
    const double dr = std::abs(measure_geodesic_radius(sphere_sys(), o.trajectory) - radius);
    const double dT = std::abs(o.period - period);
    out.check(dr < 1e-6 && dT < 1e-6 && secs < 5,
              fmt("s=%g: |dr|=%.1e", s, dr) + fmt(" |dT|=%.1e %.2fs", dT, secs));
  }
  return out;
}

Outcome torus_orbits() {
  Outcome out;
  std::vector<double> periods;
  for (double s : {0.5, 1.0, 2.0, 4.0}) {
    const TangentState x{{0, 0.5 + 1 / s, 0.5}, Vec2(0, 1)};
    const Orbit o = shoot_periodic(torus_sys(), energy_of_s(s), x);
    accept("torus s=" + fmt("%g", s), o);
    const double dr = std::abs(measure_geodesic_radius(torus_sys(), o.trajectory) - 1 / s);
    const double dT = std::abs(o.period - 2 * kPi);
    periods.push_back(o.period);
    out.check(dr < 1e-6 && dT < 1e-8, fmt("s=%g: |dr|=%.1e", s, dr) + fmt(" |T-2pi|=%.1e", dT));
  }
  double spread = 0;
  for (double a : periods)
    for (double b : periods) spread = std::max(spread, std::abs(a - b));
  out.check(spread < 1e-8, fmt("period spread %.1e", spread));
  return out;
}

Outcome hyperbolic_orbits() {
  Outcome out;
  {
    const double s = 2, radius = std::atanh(0.5), period = 4 * kPi / std::sqrt(3.0);
    const Orbit o = shoot_periodic(plane_sys(), energy_of_s(s), plane_seed(radius));
    accept("hyperbolic s=2", o);
    const double dr = std::abs(measure_geodesic_radius(plane_sys(), o.trajectory) - radius);
    const double dT = std::abs(o.period - period);
    out.check(dr < 1e-6 && dT < 1e-6, fmt("s=2: |dr|=%.1e |dT|=%.1e", dr, dT));
  }
  const double s = 0.8, k = energy_of_s(s);
  const TangentState x = with_energy(plane_sys(), {{0, 0, 1}, Vec2(1, 0)}, k);
  bool closed = true;
  try {
    shoot_periodic(plane_sys(), k, x);
  } catch (const NoReturn&) {
    closed = false;
  } catch (const NoConvergence&) {
    closed = false;
  }
  out.check(!closed, std::string("s=0.8 shooting ") + (closed ? "closed" : "fails to close"));
  // the flow is not reversible, so only the forward arc down to {y = 0}
  std::vector<Vec2> pts;
  const Trajectory tr = integrate(plane_sys(), x, 60, 1e-3);
  const double kres = curvature_residual(plane_sys(), tr, s);
  for (const Sample& p : tr.samples)
    if (p.state.q.v > 1e-3) pts.push_back(p.state.q.xy());
  const EuclideanCircle c = fit_circle(pts);
  double fit = 0;
  for (const Vec2& p : pts) fit = std::max(fit, std::abs((p - c.centre).norm() - c.radius));
  // a circle with centre height b and radius R meets y = 0 at angle arccos(|b| / R)
  const double angle = std::acos(std::abs(c.centre.y()) / c.radius);
  out.check(kres < 1e-6, fmt("s=0.8 |kappa-0.8|=%.1e", kres));
  out.check(fit < 1e-6, fmt("arc fit %.1e", fit));
  out.check(std::abs(angle - std::acos(0.8)) < 1e-4, fmt("boundary angle %.6f vs %.6f", angle, std::acos(0.8)));
  return out;
}

double state_distance(const TangentState& a, const TangentState& b) {
  return std::hypot((a.q.xy() - b.q.xy()).norm(), (a.v - b.v).norm());
}

Outcome energy_conservation() {
  Outcome out;
  struct Case {
    const char* name;
    const MagneticSystem* sys;
    TangentState x;
  };
  const Case cases[] = {{"sphere", &sphere_sys(), sphere_seed(std::atan(1.0))},
                        {"torus", &torus_sys(), {{0, 0.3, 0.4}, Vec2(1, 0)}},
                        {"hyperbolic", &plane_sys(), plane_seed(std::atanh(0.5))}};
  for (const Case& c : cases) {
    const double k = 0.125;  // s = 2: every system has a closed circle
    const TangentState x = with_energy(*c.sys, c.x, k);
    const Trajectory tr = integrate(*c.sys, x, 100, 1e-3);
    out.check(!tr.truncated && tr.max_energy_drift < 1e-9, std::string(c.name) + fmt(" drift %.1e", tr.max_energy_drift));
    // global error against a fine reference at t = 2
    const double T = 2;
    auto end_state = [&](double h) { return integrate(*c.sys, x, T, h).samples.back().state; };
    const TangentState ref = end_state(1e-3);
    const double e1 = state_distance(end_state(0.1), ref), e2 = state_distance(end_state(0.05), ref);
    const double order = std::log2(e1 / e2);
    out.check(std::abs(order - 4) < 0.3, std::string(c.name) + fmt(" order %.2f", order));
  }
  return out;
}

Outcome curvature_invariant() {
  Outcome out;
  double worst = 0;
  for (const auto& [name, r] : accepted_orbits) {
    worst = std::max(worst, r);
    if (!(r < 1e-6)) out.check(false, name + fmt(" %.1e", r));
  }
  out.check(!accepted_orbits.empty() && worst < 1e-6,
            fmt("%g orbits, max |kappa - s f| = %.1e", static_cast<double>(accepted_orbits.size()), worst));
  return out;
}

Outcome variational() {
  Outcome out;
  std::mt19937 rng(20240611);
  std::uniform_real_distribution<double> jitter(-0.02, 0.02), unit(0, 1);
  const MagneticSystem* systems[] = {&sphere_sys(), &torus_sys(), &plane_sys()};
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const MagneticSystem& sys = *systems[trial % 3];
    const Vec2 centre = sys.surface().kind() == SurfaceKind::HyperbolicPlane ? Vec2(0.1, 1.2) : Vec2(0.3, 0.4);
    DiscreteLoop loop = circle_loop(0, centre, 0.15 + 0.2 * unit(rng), 24, 1 + 3 * unit(rng));
    for (ChartPoint& p : loop.vertices) p.u += jitter(rng), p.v += jitter(rng);
    const double k = 0.2 + unit(rng);
    const PrimitivePtr theta = loop_primitive(sys, loop);
    const ActionGradient g = discrete_action_gradient(loop, sys, k, *theta);
    const double h = 1e-5;
    double num = 0, den = 0;
    for (int i = 0; i < loop.size(); ++i)
      for (int d = 0; d < 2; ++d) {
        DiscreteLoop a = loop, b = loop;
        (d ? a.vertices[i].v : a.vertices[i].u) += h;
        (d ? b.vertices[i].v : b.vertices[i].u) -= h;
        const double fd = (discrete_action(a, sys, k, *theta) - discrete_action(b, sys, k, *theta)) / (2 * h);
        num += std::pow(fd - g.vertex[i][d], 2);
        den += std::pow(g.vertex[i][d], 2);
      }
    DiscreteLoop a = loop, b = loop;
    a.T += h;
    b.T -= h;
    const double fdT = (discrete_action(a, sys, k, *theta) - discrete_action(b, sys, k, *theta)) / (2 * h);
    num += std::pow(fdT - g.dT, 2);
    den += g.dT * g.dT;
    worst = std::max(worst, std::sqrt(num / den));
  }
  out.check(worst < 1e-6, fmt("20 loops: max relative gradient error %.1e", worst));

  // Perturbed oracle circles, sampled uniformly in arclength about the
  // centre: sphere s = 1 (stereographic radius tan(r/2)) and hyperbolic s = 2
  // (Cayley image of the disc radius tanh(r/2)).
  for (const bool sphere : {true, false}) {
    const MagneticSystem& sys = sphere ? sphere_sys() : plane_sys();
    const double s = sphere ? 1.0 : 2.0, k = energy_of_s(s);
    const double r = sphere ? std::atan(1 / s) : std::atanh(1 / s);
    const int N = 2048;
    DiscreteLoop P = circle_loop(0, {0, 1}, 0.1, N, 1);
    for (int i = 0; i < N; ++i) {
      const double a = 2 * kPi * i / N, f = 1 + 0.02 * std::cos(2 * a) + 0.01 * std::sin(3 * a);
      const std::complex<double> shift(0.01, -0.01), I(0, 1);
      std::complex<double> z;
      if (sphere) {
        z = std::tan(r * f / 2) * std::polar(1.0, a) + shift;
      } else {
        const std::complex<double> w = std::tanh(r * f / 2) * std::polar(1.0, a) + shift;
        z = I * (1.0 + w) / (1.0 - w);
      }
      P.vertices[i].u = z.real();
      P.vertices[i].v = z.imag();
    }
    P.T = 1.02 * loop_measures(sys, P).length / std::sqrt(2 * k);
    const DescentResult d = descend_to_critical(P, sys, k);
    const Orbit o = shoot_periodic(sys, k, sphere ? sphere_seed(r) : plane_seed(r));
    const std::string name = sphere ? "sphere" : "hyperbolic";
    accept(name + " shooting reference", o);
    out.check(d.outcome == DescentOutcome::Converged, name + " descent " + outcome_name(d.outcome));
    out.check(std::abs(d.mean_energy - k) < 1e-6, name + fmt(" mean energy - k = %.1e", d.mean_energy - k));
    out.check(std::abs(d.loop.T - o.period) < 1e-5,
              name + fmt(" |T_descent - T_shoot| = %.1e", std::abs(d.loop.T - o.period)));
  }
  return out;
}

Outcome taimanov_stationarity() {
  Outcome out;
  const MagneticSystem bump(SurfaceModel::flat_torus(),
                            MagneticField(PlanarFunction::bump(1, -2, 0.15, 0.5, 0.5, 1, 1, false)));
  const double k = energy_of_s(40);
  const TaimanovResult r = evolve_minimize({circle_curve(0, {0.52, 0.49}, 0.1, 64, false)}, bump, k);
  out.check(r.outcome == TaimanovOutcome::Stationary && r.residual < 1e-3,
            std::string("bump field: ") + outcome_name(r.outcome) + fmt(" residual %.1e", r.residual));
  if (r.curves.size() == 1) {
    const Orbit o = refine_to_orbit(bump, k, r.curves[0]);
    accept("taimanov bump orbit", o);
    out.check(o.closure_gap < 1e-8 && o.curvature_residual < 1e-6,
              fmt("refined orbit gap %.1e, |kappa - s f| %.1e", o.closure_gap, o.curvature_residual));
  }
  TaimanovParams p;
  p.saddle = true;
  const double s = 2;
  const TaimanovResult flat = evolve_minimize({circle_curve(0, {0.5, 0.5}, 0.4, 64)}, torus_sys(), energy_of_s(s), p);
  const double R = fit_circle(flat.curves.at(0).points).radius;
  out.check(flat.outcome == TaimanovOutcome::Stationary && std::abs(R - 1 / s) < 1e-3,
            fmt("f = 1: radius %.6f vs %.6f", R, 1 / s));
  return out;
}

Outcome tau_vs_c0() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  const MagneticSystem bz(SurfaceModel::flat_torus(),
                          MagneticField(PlanarFunction::bump(0, -25, 0.15, 0.5, 0.5, 1, 1, true)));
  const C0Bound c0 = c0_upper_bound(bz);
  const std::vector<RegionCurve> seeds{circle_curve(0, {0.5, 0.5}, 0.1, 64, false),
                                       circle_curve(0, {0.5, 0.5}, 0.2, 64, false)};
  const TauEstimate t = tau_estimate(bz, seeds, 0.3, 1.5);
  const double secs = seconds_since(t0);
  // tau is an energy; the matching threshold is c0^2 / 2
  const double target = 0.5 * c0.value * c0.value;
  const double rel = std::abs(t.tau - target) / target;
  out.check(rel < 0.05, fmt("tau %.6f vs c0^2/2 %.6f", t.tau, target) + fmt(" (c0 %.6f) rel %.1e", c0.value, rel));
  out.check(secs < 120, fmt("%.1f s", secs));
  return out;
}

Outcome critical_values() {
  Outcome out;
  // [sigma] = [mu] = 4 pi (g - 1), chi = 2 - 2g
  const int g = 2;
  const double area = 4 * kPi * (g - 1), chi = 2 - 2 * g;
  const double expected = -area * area / (4 * kPi * chi * area);
  const double ch = c_h_value(genus2_sys());
  out.check(std::abs(ch - expected) < 1e-12 && std::abs(ch - 0.5) < 1e-12, fmt("c_h %.15f", ch));
  const double mane = homogeneous_mane_value(genus2_sys());
  out.check(std::abs(mane - 0.5) < 1e-12 && std::abs(mane - ch) < 1e-12, fmt("Mane value %.15f", mane));
  bool flips = true;
  for (double s : {0.5, 0.9, 0.999999, 1.0}) flips &= !homogeneous_oracle(OracleKind::Hyperbolic, s).exists_contractible;
  for (double s : {1.000001, 1.1, 2.0}) flips &= homogeneous_oracle(OracleKind::Hyperbolic, s).exists_contractible;
  flips &= homogeneous_oracle(OracleKind::Hyperbolic, std::nextafter(1.0, 2.0)).exists_contractible;
  out.check(flips, "existence flag flips at s = 1");
  return out;
}

Outcome contact_certificates() {
  Outcome out;
  ContactCandidate plus, minus;
  plus.kind = CandidateKind::HomogeneousPlus;
  minus.kind = CandidateKind::HomogeneousMinus;
  for (double s : {0.25, 0.5, 1.0, 2.0, 4.0}) {
    const ContactCertificate c = contact_candidate_min(sphere_sys(), s, plus, {64, 32});
    const double v = 1 + s * s;
    out.check(std::abs(c.min_value - v) < 1e-12 && std::abs(c.max_value - v) < 1e-12 &&
                  c.verdict == ContactVerdict::Positive,
              fmt("sphere s=%g: ", s) + verdict_name(c.verdict));
  }
  for (double s : {0.5, 0.9, 1.0, 1.1, 2.0}) {
    const ContactCertificate c = contact_candidate_min(genus2_sys(), s, minus, {64, 32});
    const double v = 1 - s * s;
    const ContactVerdict want = s < 1 ? ContactVerdict::Positive : s > 1 ? ContactVerdict::Negative
                                                                         : ContactVerdict::Indeterminate;
    out.check(std::abs(c.min_value - v) < 1e-12 && std::abs(c.max_value - v) < 1e-12 && c.verdict == want,
              fmt("hyperbolic s=%g: ", s) + verdict_name(c.verdict));
  }
  return out;
}

Outcome liouville() {
  Outcome out;
  for (double s : {0.5, 2.0}) {
    const LiouvilleAction L = liouville_action(genus2_sys(), s);
    const double want = 8 * kPi * kPi * (1 - s * s);
    const double rel = std::abs(L.quadrature_action - want) / std::abs(want);
    out.check(rel < 1e-6 && std::abs(L.flip_integral) < 1e-9, fmt("genus 2 s=%g: rel %.1e", s, rel) + fmt(" flip %.1e", L.flip_integral));
  }
  for (double s : {0.5, 1.5}) {
    const RotationVector rv = rotation_vector_liouville(torus_sys(), s);
    const double flux = 1.0;  // f = 1 on the unit torus
    out.check(std::abs(rv.fiber - s * flux) < 1e-6, fmt("torus s=%g: fiber coefficient %.9f", s, rv.fiber));
  }
  return out;
}

Outcome structure_and_gauss_bonnet() {
  Outcome out;
  for (const SurfaceModel& surf : {SurfaceModel::sphere(), SurfaceModel::flat_torus(), SurfaceModel::hyperbolic(0),
                                   SurfaceModel::conformal_torus(PlanarFunction::cosine(0.2, 1, 1, 1, 1))}) {
    const StructuralResiduals a = structural_relations_check(surf, 1e-2), b = structural_relations_check(surf, 5e-3);
    auto first_order = [](double x, double y) { return y == 0 ? x == 0 : std::abs(x / y - 2) < 0.3; };
    const bool ok = first_order(a.d_alpha, b.d_alpha) && first_order(a.d_psi, b.d_psi) && first_order(a.d_beta, b.d_beta);
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s ratios %.2f %.2f %.2f", surf.name(), a.d_alpha / b.d_alpha,
                  b.d_psi == 0 ? 0.0 : a.d_psi / b.d_psi, a.d_beta / b.d_beta);
    out.check(ok, buf);
  }
  {
    const double s = 2;
    const Orbit o = shoot_periodic(genus2_sys(), energy_of_s(s), plane_seed(std::atanh(1 / s)));
    const GaussBonnetCheck g = gauss_bonnet_action_check(genus2_sys(), o);
    out.check(std::abs(g.gauss_bonnet - 2 * kPi) < 1e-4 && g.residual < 1e-3,
              fmt("genus 2: GB error %.1e, action identity %.1e", std::abs(g.gauss_bonnet - 2 * kPi), g.residual));
  }
  {
    const MagneticSystem bz(SurfaceModel::flat_torus(),
                            MagneticField(PlanarFunction::bump(0, -25, 0.15, 0.5, 0.5, 1, 1, true)));
    const double k = 0.3;
    const TaimanovResult r = evolve_minimize({circle_curve(0, {0.5, 0.5}, 0.2, 64, false)}, bz, k);
    const Orbit o = refine_to_orbit(bz, k, r.curves.at(0));
    accept("exact bump orbit", o);
    const GaussBonnetCheck g = gauss_bonnet_action_check(bz, o);
    out.check(std::abs(g.gauss_bonnet - 2 * kPi) < 1e-4 && g.residual < 1e-3,
              fmt("torus: GB error %.1e, action identity %.1e", std::abs(g.gauss_bonnet - 2 * kPi), g.residual));
  }
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  // 5 runs after the criteria that produce orbits
  const std::vector<Criterion> criteria{
      {1, "sphere orbits", sphere_orbits},
      {2, "torus orbits", torus_orbits},
      {3, "hyperbolic orbits", hyperbolic_orbits},
      {4, "energy conservation", energy_conservation},
      {6, "variational consistency", variational},
      {7, "taimanov stationarity", taimanov_stationarity},
      {8, "tau vs c0", tau_vs_c0},
      {9, "critical values", critical_values},
      {10, "contact certificates", contact_certificates},
      {11, "liouville action", liouville},
      {12, "structural relations and gauss-bonnet", structure_and_gauss_bonnet},
      {5, "prescribed curvature invariant", curvature_invariant},
  };
  std::vector<std::string> lines(13);
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.ok = false;
      o.detail += std::string("exception: ") + e.what();
    }
    failures += !o.ok;
    char head[96];
    std::snprintf(head, sizeof head, "%s criterion %d (%s, %.1fs): ", o.ok ? "PASS" : "FAIL", c.id, c.name,
                  seconds_since(t0));
    lines[c.id] = head + o.detail;
  }
  for (int i = 1; i <= 12; ++i) std::printf("%s\n", lines[i].c_str());
  std::printf("%d of 12 criteria passed\n", 12 - failures);
  return failures == 0 ? 0 : 1;
}

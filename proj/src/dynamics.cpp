#include "magflow/dynamics.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "magflow/errors.hpp"

namespace magflow {

StateDerivative vector_field_eval(const MagneticSystem& sys, const TangentState& x) {
  const ConformalJet j = sys.surface().log_factor(x.q);
  const double f = sys.f(x.q);
  const Vec2 iv(-x.v.y(), x.v.x());
  return {x.v, -christoffel_contract(j, x.v, x.v) + f * iv};
}

double energy_of(const MagneticSystem& sys, const TangentState& x) {
  return 0.5 * inner(sys.surface(), x.q, x.v, x.v);
}

TangentState with_energy(const MagneticSystem& sys, const TangentState& x, double k) {
  if (!(k > 0)) throw DomainError("energy must be positive");
  const double e = energy_of(sys, x);
  if (e == 0) throw DegenerateInput("cannot rescale a zero velocity to positive energy");
  TangentState y = x;
  y.v *= std::sqrt(k / e);
  return y;
}

TangentState rk4_step(const MagneticSystem& sys, const TangentState& x, double h) {
  auto shifted = [&](const StateDerivative& d, double c) {
    TangentState y = x;
    y.q.u += c * d.dq.x();
    y.q.v += c * d.dq.y();
    y.v += c * d.dv;
    return y;
  };
  const StateDerivative k1 = vector_field_eval(sys, x);
  const StateDerivative k2 = vector_field_eval(sys, shifted(k1, 0.5 * h));
  const StateDerivative k3 = vector_field_eval(sys, shifted(k2, 0.5 * h));
  const StateDerivative k4 = vector_field_eval(sys, shifted(k3, h));
  TangentState y = x;
  const Vec2 dq = (k1.dq + 2 * k2.dq + 2 * k3.dq + k4.dq) * (h / 6.0);
  y.q.u += dq.x();
  y.q.v += dq.y();
  y.v += (k1.dv + 2 * k2.dv + 2 * k3.dv + k4.dv) * (h / 6.0);
  return y;
}

namespace {

// One step followed by the between-step chart switch.
TangentState advance(const MagneticSystem& sys, const TangentState& x, double h) {
  TangentState y = rk4_step(sys, x, h);
  y.q = sys.surface().canonical(y.q, &y.v);
  sys.surface().check_domain(y.q);
  return y;
}

}  // namespace

Trajectory integrate(const MagneticSystem& sys, const TangentState& x0, double t_end, double dt) {
  if (!(t_end > 0) || !(dt > 0)) throw DomainError("integration needs t_end > 0 and dt > 0");
  Trajectory tr;
  tr.dt = dt;
  TangentState x = x0;
  x.q = sys.surface().canonical(x.q, &x.v);
  const double e0 = energy_of(sys, x);
  const long steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  tr.samples.reserve(steps + 1);
  tr.samples.push_back({0.0, x});
  double t = 0;
  for (long i = 0; i < steps; ++i) {
    const double h = (i == steps - 1) ? t_end - t : dt;
    try {
      x = advance(sys, x, h);
    } catch (const DomainError& e) {
      tr.truncated = true;
      tr.truncation_reason = e.what();
      break;
    }
    t = (i == steps - 1) ? t_end : (i + 1) * dt;
    tr.samples.push_back({t, x});
    if (e0 > 0) tr.max_energy_drift = std::max(tr.max_energy_drift, std::abs(energy_of(sys, x) - e0) / e0);
  }
  return tr;
}

double section_residual(const MagneticSystem& sys, const Section& sec, const TangentState& x) {
  ChartPoint q = x.q;
  if (q.chart != sec.chart) q = sys.surface().to_chart(q, sec.chart);
  const double r = (sec.coord == 0 ? q.u : q.v) - sec.value;
  // torus lifts: any lattice translate of the section counts
  if (sec.lattice && sys.surface().is_torus()) return std::remainder(r, sec.coord == 0 ? sys.surface().lx() : sys.surface().ly());
  return r;
}

ReturnResult poincare_return(const MagneticSystem& sys, const Section& sec, const TangentState& x0,
                             double max_time, double dt) {
  if (!(max_time > 0) || !(dt > 0)) throw DomainError("return map needs positive max_time and dt");
  if (sec.direction != 1 && sec.direction != -1) throw DomainError("section direction must be +1 or -1");
  TangentState x = x0;
  x.q = sys.surface().canonical(x.q, &x.v);
  double t = 0;
  double r = sec.direction * section_residual(sys, sec, x);
  // residual jumps across the half-period on the torus are not crossings
  const double jump = sec.lattice && sys.surface().is_torus()
                          ? 0.5 * (sec.coord == 0 ? sys.surface().lx() : sys.surface().ly())
                          : std::numeric_limits<double>::infinity();
  while (t < max_time) {
    TangentState y;
    try {
      y = advance(sys, x, dt);
    } catch (const DomainError& e) {
      throw NoReturn(std::string("trajectory left the domain before returning: ") + e.what());
    }
    const double ry = sec.direction * section_residual(sys, sec, y);
    if (r < 0 && ry >= 0 && ry - r < jump) {
      // bisection on the length of a partial RK4 step from x
      double lo = 0, hi = dt, used = dt;
      TangentState best = y;
      double best_r = ry;
      for (int it = 0; it < 200 && std::abs(best_r) >= 1e-12 && hi - lo > 1e-17; ++it) {
        const double mid = 0.5 * (lo + hi);
        const TangentState z = rk4_step(sys, x, mid);
        const double rz = sec.direction * section_residual(sys, sec, z);
        best = z;
        best_r = rz;
        used = mid;
        if (rz < 0) lo = mid; else hi = mid;
      }
      best.q = sys.surface().canonical(best.q, &best.v);
      return {best, t + used, best_r};
    }
    x = y;
    r = ry;
    t += dt;
  }
  throw NoReturn("no section crossing within max_time");
}

std::vector<double> extract_curvature(const MagneticSystem& sys, const Trajectory& tr) {
  const auto& S = tr.samples;
  const std::size_t n = S.size();
  std::vector<double> kappa(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double h = S[i + 1].t - S[i].t;
    bool uniform = true;
    for (int o = -2; o < 2; ++o)
      uniform = uniform && std::abs((S[i + o + 1].t - S[i + o].t) - h) < 1e-9 * h;
    if (!uniform) continue;
    const int chart = S[i].state.q.chart;
    Vec2 vel[5];
    bool ok = true;
    for (int o = -2; o <= 2; ++o) {
      const TangentState& s = S[i + o].state;
      vel[o + 2] = s.v;
      if (s.q.chart != chart) {
        try {
          sys.surface().to_chart(s.q, chart, &vel[o + 2]);
        } catch (const Error&) {
          ok = false;
        }
      }
    }
    if (!ok) continue;
    const Vec2 acc = (vel[0] - 8.0 * vel[1] + 8.0 * vel[3] - vel[4]) / (12.0 * h);
    kappa[i] = geodesic_curvature_of(sys.surface(), S[i].state.q, S[i].state.v, acc);
  }
  return kappa;
}

double curvature_residual(const MagneticSystem& sys, const Trajectory& tr, double s) {
  const auto kappa = extract_curvature(sys, tr);
  double worst = 0;
  for (std::size_t i = 0; i < kappa.size(); ++i) {
    if (std::isnan(kappa[i])) continue;
    worst = std::max(worst, std::abs(kappa[i] - s * sys.f(tr.samples[i].state.q)));
  }
  return worst;
}

void write_trajectory_csv(const std::string& path, const MagneticSystem& sys, const Trajectory& tr) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  const auto kappa = extract_curvature(sys, tr);
  out << "t,chart,u,v,du,dv,energy,kappa\n" << std::setprecision(17);
  for (std::size_t i = 0; i < tr.samples.size(); ++i) {
    const auto& s = tr.samples[i];
    out << s.t << ',' << s.state.q.chart << ',' << s.state.q.u << ',' << s.state.q.v << ',' << s.state.v.x()
        << ',' << s.state.v.y() << ',' << energy_of(sys, s.state) << ',';
    if (!std::isnan(kappa[i])) out << kappa[i];
    out << '\n';
  }
}

}  // namespace magflow

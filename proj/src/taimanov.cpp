#include "magflow/taimanov.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>

#include "magflow/errors.hpp"
#include "magflow/numerics.hpp"

namespace magflow {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

Vec2 at(const RegionCurve& c, int i) {
  const int n = c.size();
  return c.points[((i % n) + n) % n];
}

double segment_length(const SurfaceModel& s, int chart, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  return d.norm() * integrate_gl([&](double t) { return std::exp(s.log_factor(ChartPoint::at(chart, a + t * d)).lam); },
                                 0.0, 1.0, 4);
}

bool segments_cross(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  const double d1 = cross(p2 - p1, q1 - p1), d2 = cross(p2 - p1, q2 - p1);
  const double d3 = cross(q2 - q1, p1 - q1), d4 = cross(q2 - q1, p2 - q1);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}

// Periodic cubic spline through the vertices, parametrised by chord length.
class ClosedSpline {
 public:
  explicit ClosedSpline(const RegionCurve& c) : n_(c.size()), pts_(c.points), t_(n_ + 1, 0.0), h_(n_) {
    for (int i = 0; i < n_; ++i) {
      h_[i] = (at(c, i + 1) - at(c, i)).norm();
      if (h_[i] == 0) throw DegenerateInput("repeated curve vertex");
      t_[i + 1] = t_[i] + h_[i];
    }
    std::vector<double> lo(n_), di(n_), up(n_);
    std::vector<double> rx(n_), ry(n_);
    for (int i = 0; i < n_; ++i) {
      const int p = (i + n_ - 1) % n_;
      lo[i] = h_[p];
      di[i] = 2 * (h_[p] + h_[i]);
      up[i] = h_[i];
      const Vec2 r = 6.0 * ((at(c, i + 1) - at(c, i)) / h_[i] - (at(c, i) - at(c, i - 1)) / h_[p]);
      rx[i] = r.x();
      ry[i] = r.y();
    }
    solve_cyclic_tridiagonal(lo, di, up, rx);
    solve_cyclic_tridiagonal(lo, di, up, ry);
    m_.resize(n_);
    for (int i = 0; i < n_; ++i) m_[i] = {rx[i], ry[i]};
  }
  double period() const { return t_[n_]; }
  Vec2 eval(double t) const {
    t = std::fmod(t, period());
    if (t < 0) t += period();
    int i = static_cast<int>(std::upper_bound(t_.begin(), t_.end(), t) - t_.begin()) - 1;
    i = std::clamp(i, 0, n_ - 1);
    const double h = h_[i], a = t_[i + 1] - t, b = t - t_[i];
    const Vec2& y0 = pts_[i];
    const Vec2& y1 = pts_[(i + 1) % n_];
    const Vec2& m0 = m_[i];
    const Vec2& m1 = m_[(i + 1) % n_];
    return (m0 * a * a * a + m1 * b * b * b) / (6 * h) + (y0 / h - m0 * h / 6) * a + (y1 / h - m1 * h / 6) * b;
  }

 private:
  int n_;
  std::vector<Vec2> pts_;
  std::vector<double> t_, h_;
  std::vector<Vec2> m_;
};

// n vertices equally spaced in metric arclength along the spline.
RegionCurve resample(const SurfaceModel& s, const RegionCurve& c, int n) {
  const ClosedSpline sp(c);
  const int fine = 16 * std::max(n, c.size());
  std::vector<double> tt(fine + 1), ss(fine + 1, 0.0);
  std::vector<Vec2> pp(fine + 1);
  for (int j = 0; j <= fine; ++j) {
    tt[j] = sp.period() * j / fine;
    pp[j] = sp.eval(tt[j]);
  }
  for (int j = 0; j < fine; ++j) {
    const Vec2 mid = 0.5 * (pp[j] + pp[j + 1]);
    ss[j + 1] = ss[j] + (pp[j + 1] - pp[j]).norm() * std::exp(s.log_factor(ChartPoint::at(c.chart, mid)).lam);
  }
  RegionCurve out{c.chart, {}, c.h};
  out.points.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double target = ss[fine] * i / n;
    int j = static_cast<int>(std::upper_bound(ss.begin(), ss.end(), target) - ss.begin()) - 1;
    j = std::clamp(j, 0, fine - 1);
    const double w = (target - ss[j]) / (ss[j + 1] - ss[j]);
    out.points.push_back(sp.eval(tt[j] + w * (tt[j + 1] - tt[j])));
  }
  return out;
}

double effective_spacing(const RegionCurve& c, double length) { return std::min(c.h, length / 12.0); }

}  // namespace

RegionCurve circle_curve(int chart, const Vec2& centre, double rho, int n, bool counter_clockwise) {
  if (n < 3) throw DomainError("curves need at least three vertices");
  if (!(rho > 0)) throw DomainError("circle radius must be positive");
  RegionCurve c{chart, {}, 0};
  for (int i = 0; i < n; ++i) {
    const double a = 2 * std::numbers::pi * i / n * (counter_clockwise ? 1 : -1);
    c.points.push_back(centre + rho * Vec2(std::cos(a), std::sin(a)));
  }
  return c;
}

double curve_length(const SurfaceModel& s, const RegionCurve& c) {
  double l = 0;
  for (int i = 0; i < c.size(); ++i) l += segment_length(s, c.chart, at(c, i), at(c, i + 1));
  return l;
}

double enclosed_flux(const MagneticSystem& sys, const RegionCurve& c) {
  Vec2 centre = Vec2::Zero();
  for (const auto& p : c.points) centre += p;
  centre /= c.size();
  const GaussRule& r = gauss_legendre(8);
  const SurfaceModel& s = sys.surface();
  double flux = 0;
  for (int i = 0; i < c.size(); ++i) {
    const Vec2 a = at(c, i) - centre, ba = at(c, i + 1) - at(c, i);
    const double jac = cross(a, ba);
    // Duffy map of the unit square onto the fan triangle
    for (std::size_t iu = 0; iu < r.x.size(); ++iu) {
      const double u = 0.5 * (r.x[iu] + 1);
      for (std::size_t iv = 0; iv < r.x.size(); ++iv) {
        const double v = 0.5 * (r.x[iv] + 1);
        const ChartPoint p = ChartPoint::at(c.chart, centre + u * a + u * v * ba);
        flux += 0.25 * r.w[iu] * r.w[iv] * u * jac * sys.f(p) * mu_density(s, p);
      }
    }
  }
  return flux;
}

void check_simple(const std::vector<RegionCurve>& curves) {
  for (std::size_t a = 0; a < curves.size(); ++a)
    for (std::size_t b = a; b < curves.size(); ++b) {
      const RegionCurve &ca = curves[a], &cb = curves[b];
      if (ca.chart != cb.chart) continue;
      for (int i = 0; i < ca.size(); ++i)
        for (int j = (a == b ? i + 2 : 0); j < cb.size(); ++j) {
          if (a == b && i == 0 && j == ca.size() - 1) continue;
          if (segments_cross(at(ca, i), at(ca, i + 1), at(cb, j), at(cb, j + 1)))
            throw InvalidRegion(a == b ? "curve intersects itself" : "curves intersect each other");
        }
    }
}

double taimanov_value(const std::vector<RegionCurve>& curves, const MagneticSystem& sys, double k, bool complement) {
  if (!(k > 0)) throw DomainError("energy must be positive");
  for (const auto& c : curves) {
    if (c.size() < 3) throw InvalidRegion("curves need at least three vertices");
    for (const auto& p : c.points) sys.surface().check_domain(ChartPoint::at(c.chart, p));
  }
  check_simple(curves);
  double length = 0, flux = 0;
  for (const auto& c : curves) {
    length += curve_length(sys.surface(), c);
    flux += enclosed_flux(sys, c);
  }
  if (complement) flux = -(flux_total(sys) - flux);
  return std::sqrt(2 * k) * length - flux;
}

std::vector<double> curve_curvature(const SurfaceModel& s, const RegionCurve& c) {
  std::vector<double> kappa(c.size());
  for (int i = 0; i < c.size(); ++i)
    kappa[i] = discrete_geodesic_curvature(s, at(c, i - 1), at(c, i), at(c, i + 1), c.chart);
  return kappa;
}

double stationarity_residual(const std::vector<RegionCurve>& curves, const MagneticSystem& sys, double k) {
  const double s = s_of_energy(k);
  double worst = 0;
  for (const auto& c : curves) {
    const std::vector<double> kappa = curve_curvature(sys.surface(), c);
    for (int i = 0; i < c.size(); ++i)
      worst = std::max(worst, std::abs(kappa[i] - s * sys.f(ChartPoint::at(c.chart, c.points[i]))));
  }
  return worst;
}

const char* outcome_name(TaimanovOutcome o) {
  switch (o) {
    case TaimanovOutcome::Stationary: return "stationary";
    case TaimanovOutcome::Vanished: return "vanished";
    case TaimanovOutcome::SelfIntersected: return "self_intersection";
    case TaimanovOutcome::MaxIterations: return "max_iterations";
    case TaimanovOutcome::BelowThreshold: return "below_threshold";
  }
  return "?";
}

TaimanovResult evolve_minimize(const std::vector<RegionCurve>& seeds, const MagneticSystem& sys, double k,
                               const TaimanovParams& params) {
  if (!(k > 0)) throw DomainError("energy must be positive");
  if (!(params.tol > 0) || !(params.cfl > 0)) throw DomainError("tolerances must be positive");
  const SurfaceModel& surf = sys.surface();
  const double rt = std::sqrt(2 * k);
  TaimanovResult res;
  std::vector<RegionCurve> curves = seeds;
  check_simple(curves);
  for (auto& c : curves) {
    const double len = curve_length(surf, c);
    if (c.h <= 0) c.h = len / 96;
    c = resample(surf, c, std::max(12, static_cast<int>(std::lround(len / effective_spacing(c, len)))));
  }
  auto finish = [&](TaimanovOutcome o, int it) {
    res.outcome = o;
    res.iterations = it;
    res.curves = curves;
    res.value = curves.empty() ? 0.0 : taimanov_value(curves, sys, k);
    res.residual = curves.empty() ? 0.0 : stationarity_residual(curves, sys, k);
    return res;
  };
  std::vector<std::vector<double>> speed(curves.size());
  for (int it = 0; it < params.max_iter; ++it) {
    if (params.snapshot_every > 0 && it % params.snapshot_every == 0) res.snapshots.push_back({it, curves});
    if (it > 0 && it % params.check_every == 0) {
      try {
        check_simple(curves);
      } catch (const InvalidRegion&) {
        return finish(TaimanovOutcome::SelfIntersected, it);
      }
      if (params.stop_below && taimanov_value(curves, sys, k) < *params.stop_below)
        return finish(TaimanovOutcome::BelowThreshold, it);
    }
    // normal speed G = sqrt(2k) kappa - f; dT/dn = G along the outward normal
    double residual = 0, hmin = std::numeric_limits<double>::infinity(), fmax = 0;
    for (std::size_t ci = 0; ci < curves.size(); ++ci) {
      const RegionCurve& c = curves[ci];
      const std::vector<double> kappa = curve_curvature(surf, c);
      speed[ci].resize(c.size());
      double mean = 0, weight = 0;
      for (int i = 0; i < c.size(); ++i) {
        const ChartPoint p = ChartPoint::at(c.chart, c.points[i]);
        const double f = sys.f(p);
        const double hi = segment_length(surf, c.chart, at(c, i), at(c, i + 1));
        speed[ci][i] = rt * kappa[i] - f;
        residual = std::max(residual, std::abs(speed[ci][i]) / rt);
        hmin = std::min(hmin, hi);
        fmax = std::max(fmax, std::abs(f));
        mean += hi * speed[ci][i];
        weight += hi;
      }
      if (params.saddle) {
        mean /= weight;
        for (double& g : speed[ci]) g -= 2 * mean;
      }
    }
    if (residual < params.tol) return finish(TaimanovOutcome::Stationary, it);
    double dt = params.cfl * hmin * hmin / rt;
    if (fmax > 0) dt = std::min(dt, 0.25 * hmin / fmax);
    for (std::size_t ci = 0; ci < curves.size(); ++ci) {
      RegionCurve& c = curves[ci];
      std::vector<Vec2> moved(c.size());
      for (int i = 0; i < c.size(); ++i) {
        const Vec2 t = (at(c, i + 1) - at(c, i - 1)).normalized();
        const Vec2 outward(t.y(), -t.x());
        const double lam = surf.log_factor(ChartPoint::at(c.chart, c.points[i])).lam;
        moved[i] = c.points[i] - dt * speed[ci][i] * std::exp(-lam) * outward;
      }
      c.points = std::move(moved);
    }
    for (std::size_t ci = 0; ci < curves.size(); ++ci) {
      RegionCurve& c = curves[ci];
      const double len = curve_length(surf, c);
      if (len < params.l_min) {
        curves.erase(curves.begin() + static_cast<long>(ci));
        return finish(TaimanovOutcome::Vanished, it + 1);
      }
      const double h = effective_spacing(c, len);
      bool uneven = false;
      for (int i = 0; i < c.size() && !uneven; ++i) {
        const double hi = segment_length(surf, c.chart, at(c, i), at(c, i + 1));
        uneven = hi < 0.5 * h || hi > 2 * h;
      }
      if (uneven) c = resample(surf, c, std::max(12, static_cast<int>(std::lround(len / h))));
    }
  }
  return finish(TaimanovOutcome::MaxIterations, params.max_iter);
}

Orbit refine_to_orbit(const MagneticSystem& sys, double k, const RegionCurve& curve, int segments,
                      const ShootParams& params) {
  if (curve.size() < segments) throw DomainError("curve has fewer vertices than shooting segments");
  std::vector<TangentState> nodes;
  for (int j = 0; j < segments; ++j) {
    const int i = j * curve.size() / segments;
    const Vec2 t = at(curve, i + 1) - at(curve, i - 1);
    nodes.push_back(with_energy(sys, {ChartPoint::at(curve.chart, curve.points[i]), t}, k));
  }
  return shoot_multiple(sys, k, nodes, curve_length(sys.surface(), curve) / std::sqrt(2 * k), params);
}

double best_minimised_value(const MagneticSystem& sys, const std::vector<RegionCurve>& seeds, double k,
                            const TaimanovParams& params, int* evolutions) {
  std::vector<double> values(seeds.size(), 0.0);
  parallel_for(static_cast<int>(seeds.size()), [&](int i) {
    const TaimanovResult r = evolve_minimize({seeds[i]}, sys, k, params);
    values[i] = r.outcome == TaimanovOutcome::Vanished ? 0.0 : r.value;
  });
  if (evolutions) *evolutions += static_cast<int>(seeds.size());
  // the empty region is always admissible
  return std::min(0.0, *std::min_element(values.begin(), values.end()));
}

TauEstimate tau_estimate(const MagneticSystem& sys, const std::vector<RegionCurve>& seeds, double k_lo, double k_hi,
                         int iterations, const TaimanovParams& params) {
  if (seeds.empty()) throw DomainError("tau estimation needs at least one seed");
  if (!(k_lo > 0) || !(k_hi > k_lo)) throw DomainError("need 0 < k_lo < k_hi");
  TaimanovParams p = params;
  p.stop_below = -1e-12;  // a negative value is already a certificate
  TauEstimate est{0, k_lo, k_hi, 0};
  if (!(best_minimised_value(sys, seeds, k_lo, p, &est.evolutions) < 0))
    throw NoBracket("minimised value is not negative at k_lo");
  if (best_minimised_value(sys, seeds, k_hi, p, &est.evolutions) < 0)
    throw NoBracket("minimised value is still negative at k_hi");
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (est.k_lo + est.k_hi);
    if (best_minimised_value(sys, seeds, mid, p, &est.evolutions) < 0) est.k_lo = mid;
    else est.k_hi = mid;
  }
  est.tau = 0.5 * (est.k_lo + est.k_hi);
  return est;
}

void write_snapshots_csv(const std::string& path, const std::vector<TaimanovSnapshot>& snaps) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "iter,vertex,u,v,curve\n" << std::setprecision(17);
  for (const auto& s : snaps)
    for (std::size_t c = 0; c < s.curves.size(); ++c)
      for (int i = 0; i < s.curves[c].size(); ++i)
        out << s.iteration << ',' << i << ',' << s.curves[c].points[i].x() << ',' << s.curves[c].points[i].y() << ','
            << c << '\n';
}

}  // namespace magflow

#include "magflow/critical.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>

#include "magflow/errors.hpp"
#include "magflow/trig_series.hpp"

namespace magflow {

double c_h_value(const MagneticSystem& sys) {
  const SurfaceModel& s = sys.surface();
  if (s.kind() != SurfaceKind::HyperbolicPlane || s.genus() < 2)
    throw UnsupportedError("c_h is defined for genus >= 2 only");
  const double flux = flux_total(sys);
  const SurfaceInvariants inv = surface_invariants(s);
  return -flux * flux / (4 * std::numbers::pi * inv.euler_characteristic * inv.area);
}

double homogeneous_mane_value(const MagneticSystem& sys) {
  if (sys.surface().kind() != SurfaceKind::HyperbolicPlane || !sys.field().is_constant())
    throw UnsupportedError("closed-form Mane value only for constant fields on the hyperbolic plane");
  const double c = sys.field().constant_value();
  return 0.5 * c * c;
}

namespace {

class SumPrimitive final : public Primitive {
 public:
  SumPrimitive(PrimitivePtr a, PrimitivePtr b) : a_(std::move(a)), b_(std::move(b)) {}
  Vec2 value(const ChartPoint& p) const override { return a_->value(p) + b_->value(p); }
  Eigen::Matrix2d jacobian(const ChartPoint& p) const override { return a_->jacobian(p) + b_->jacobian(p); }
  bool global() const override { return a_->global() && b_->global(); }

 private:
  PrimitivePtr a_, b_;
};

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Spectral gradient of a periodic grid function.
struct SpectralGrad {
  int n;
  double lx, ly;
  void apply(const std::vector<double>& phi, std::vector<double>& gx, std::vector<double>& gy,
             std::vector<std::complex<double>>* cx = nullptr, std::vector<std::complex<double>>* cy = nullptr) const {
    const auto ph = periodic_dft(phi, n, n);
    std::vector<std::complex<double>> dx(ph.size()), dy(ph.size());
    const std::complex<double> I(0, 1);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        dx[j * n + i] = I * (kTwoPi * signed_freq(i, n) / lx) * ph[j * n + i];
        dy[j * n + i] = I * (kTwoPi * signed_freq(j, n) / ly) * ph[j * n + i];
      }
    gx = periodic_idft(dx, n, n);
    gy = periodic_idft(dy, n, n);
    if (cx) *cx = std::move(dx);
    if (cy) *cy = std::move(dy);
  }
};

}  // namespace

double grid_sup_norm(const SurfaceModel& s, const Primitive& theta, int n) {
  double best = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const ChartPoint p{0, i * s.lx() / n, j * s.ly() / n};
      best = std::max(best, std::exp(-s.log_factor(p).lam) * theta.value(p).norm());
    }
  return best;
}

C0Bound c0_upper_bound(const MagneticSystem& sys, const C0Params& params) {
  const SurfaceModel& s = sys.surface();
  if (s.kind() != SurfaceKind::FlatTorus) throw UnsupportedError("c0 bounds are computed on the flat torus only");
  if (params.grid < 8 || params.betas.empty() || params.stage_iterations < 1 || params.budget < 0)
    throw DomainError("invalid c0 optimisation parameters");
  PrimitivePtr base;
  try {
    base = exact_torus_primitive(sys);
  } catch (const NoGlobalPrimitive&) {
    throw UnsupportedError("c0 needs an exact field (zero total flux)");
  }
  const int n = params.grid, nn = n * n;
  const SpectralGrad D{n, s.lx(), s.ly()};
  std::vector<double> bx(nn), by(nn);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const Vec2 t = base->value({0, i * s.lx() / n, j * s.ly() / n});
      bx[j * n + i] = t.x();
      by[j * n + i] = t.y();
    }
  // unknowns: phi on the grid, then c1, c2
  const int dim = nn + 2;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(dim);
  std::vector<double> gx, gy, phi(nn);
  auto sup_of = [&](const Eigen::VectorXd& z, std::vector<double>& tu, std::vector<double>& tv) {
    for (int i = 0; i < nn; ++i) phi[i] = z(i);
    D.apply(phi, gx, gy);
    double m = 0;
    tu.resize(nn);
    tv.resize(nn);
    for (int i = 0; i < nn; ++i) {
      tu[i] = bx[i] + gx[i] + z(nn);
      tv[i] = by[i] + gy[i] + z(nn + 1);
      m = std::max(m, std::hypot(tu[i], tv[i]));
    }
    return m;
  };
  // smoothed max (1/beta) log sum exp(beta |theta|) and its gradient
  auto objective = [&](const Eigen::VectorXd& z, double beta, Eigen::VectorXd& grad) {
    std::vector<double> tu, tv;
    const double m = sup_of(z, tu, tv);
    std::vector<double> w(nn), wu(nn), wv(nn);
    double total = 0;
    for (int i = 0; i < nn; ++i) {
      w[i] = std::exp(beta * (std::hypot(tu[i], tv[i]) - m));
      total += w[i];
    }
    grad.setZero(dim);
    for (int i = 0; i < nn; ++i) {
      const double r = std::hypot(tu[i], tv[i]);
      const double p = w[i] / total;
      wu[i] = r > 0 ? p * tu[i] / r : 0.0;
      wv[i] = r > 0 ? p * tv[i] / r : 0.0;
      grad(nn) += wu[i];
      grad(nn + 1) += wv[i];
    }
    // the spectral derivative is skew-adjoint
    std::vector<double> ax, ay, tmp;
    D.apply(wu, ax, tmp);
    D.apply(wv, tmp, ay);
    for (int i = 0; i < nn; ++i) grad(i) = -(ax[i] + ay[i]);
    return m + std::log(total) / beta;
  };

  C0Bound out;
  std::vector<double> tu, tv;
  out.value = sup_of(x, tu, tv);
  Eigen::VectorXd best = x;
  int it = 0;
  int stage = 0;
  Eigen::VectorXd g_prev, x_prev, g(dim);
  double alpha = 1e-2;
  for (; it < params.budget; ++it) {
    const int st = std::min(it / params.stage_iterations, static_cast<int>(params.betas.size()) - 1);
    const double beta = params.betas[st];
    if (st != stage || it == 0) {
      stage = st;
      g_prev.resize(0);
      alpha = 1e-2;
    }
    const double J = objective(x, beta, g);
    if (g_prev.size() == dim) {
      // Barzilai-Borwein step, kept in a safe range
      const Eigen::VectorXd sv = x - x_prev, yv = g - g_prev;
      const double sy = sv.dot(yv);
      alpha = sy > 0 ? std::clamp(sv.squaredNorm() / sy, 1e-6, 10.0) : 1e-2;
    }
    // backtrack on the smoothed objective so a bad BB step cannot diverge
    Eigen::VectorXd trial, gt;
    for (int h = 0; h < 30; ++h, alpha *= 0.5) {
      trial = x - alpha * g;
      if (objective(trial, beta, gt) <= J) break;
    }
    x_prev = x;
    g_prev = g;
    x = trial;
    const double m = sup_of(x, tu, tv);
    if (m < out.value) {
      out.value = m;
      best = x;
    }
    out.history.push_back(out.value);
  }
  out.iterations = it;
  out.c1 = best(nn);
  out.c2 = best(nn + 1);
  for (int i = 0; i < nn; ++i) phi[i] = best(i);
  std::vector<std::complex<double>> cx, cy;
  D.apply(phi, gx, gy, &cx, &cy);
  const PrimitivePtr exact_part =
      series_primitive(prune_to_series(cx, n, n, s.lx(), s.ly(), 0.0), prune_to_series(cy, n, n, s.lx(), s.ly(), 0.0),
                       out.c1, out.c2);
  out.witness = std::make_shared<SumPrimitive>(base, exact_part);
  out.value = grid_sup_norm(s, *out.witness, n);
  return out;
}

void write_primitive_grid_csv(const std::string& path, const SurfaceModel& s, const Primitive& theta, int n) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "x,y,theta_u,theta_v,norm\n" << std::setprecision(17);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const ChartPoint p{0, i * s.lx() / n, j * s.ly() / n};
      const Vec2 t = theta.value(p);
      out << p.u << ',' << p.v << ',' << t.x() << ',' << t.y() << ',' << std::exp(-s.log_factor(p).lam) * t.norm()
          << '\n';
    }
}

}  // namespace magflow

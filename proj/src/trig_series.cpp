#include "magflow/trig_series.hpp"

#include <fftw3.h>

#include <cmath>
#include <numbers>

#include "magflow/errors.hpp"
#include "magflow/kernels.hpp"

namespace magflow {

std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}

TrigSeries2D::TrigSeries2D(int kx, int ky, double lx, double ly, std::vector<std::complex<double>> coef)
    : kx_(kx), ky_(ky), lx_(lx), ly_(ly) {
  const std::size_t size = static_cast<std::size_t>(2 * kx + 1) * (2 * ky + 1);
  if (coef.size() != size) throw DomainError("trig series coefficient count mismatch");
  coef_re_.resize(size);
  coef_im_.resize(size);
  for (std::size_t i = 0; i < size; ++i) {
    coef_re_[i] = coef[i].real();
    coef_im_[i] = coef[i].imag();
  }
}

Jet2 TrigSeries2D::eval(double x, double y) const {
  Jet2 out;
  if (coef_re_.empty()) return out;
  const int wx = 2 * kx_ + 1, wy = 2 * ky_ + 1;
  const double two_pi = 2.0 * std::numbers::pi;
  // exp(i k ax) by recurrence from the fundamental, seeded at both ends
  thread_local std::vector<double> er, ei, dr, di;
  er.resize(wx); ei.resize(wx); dr.resize(wx); di.resize(wx);
  const double ax = two_pi * x / lx_, ay = two_pi * y / ly_;
  const double c1 = std::cos(ax), s1 = std::sin(ax);
  er[kx_] = 1.0;
  ei[kx_] = 0.0;
  for (int k = 1; k <= kx_; ++k) {
    const double pr = er[kx_ + k - 1], pi = ei[kx_ + k - 1];
    er[kx_ + k] = pr * c1 - pi * s1;
    ei[kx_ + k] = pr * s1 + pi * c1;
    er[kx_ - k] = er[kx_ + k];
    ei[kx_ - k] = -ei[kx_ + k];
  }
  for (int k = -kx_; k <= kx_; ++k) {
    const double w = two_pi * k / lx_;  // multiply by i w
    dr[kx_ + k] = -w * ei[kx_ + k];
    di[kx_ + k] = w * er[kx_ + k];
  }
  const double cy = std::cos(ay), sy = std::sin(ay);
  double eyr = std::cos(ky_ * ay), eyi = -std::sin(ky_ * ay);  // l = -Ky
  double v_re = 0, gx_re = 0, gy_re = 0;
  for (int l = -ky_; l <= ky_; ++l) {
    const std::size_t row = static_cast<std::size_t>(l + ky_) * wx;
    double sr, si, tr, ti;
    kernels::complex_dot(coef_re_.data() + row, coef_im_.data() + row, er.data(), ei.data(), wx, &sr, &si);
    kernels::complex_dot(coef_re_.data() + row, coef_im_.data() + row, dr.data(), di.data(), wx, &tr, &ti);
    v_re += sr * eyr - si * eyi;
    gx_re += tr * eyr - ti * eyi;
    const double w = two_pi * l / ly_;
    gy_re += -w * (sr * eyi + si * eyr);
    const double nr = eyr * cy - eyi * sy;
    eyi = eyr * sy + eyi * cy;
    eyr = nr;
  }
  (void)wy;
  out.f = v_re;
  out.fx = gx_re;
  out.fy = gy_re;
  return out;
}

std::vector<std::complex<double>> periodic_dft(const std::vector<double>& samples, int n, int m) {
  std::vector<std::complex<double>> buf(samples.begin(), samples.end());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_2d(m, n, reinterpret_cast<fftw_complex*>(buf.data()),
                            reinterpret_cast<fftw_complex*>(buf.data()), FFTW_FORWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  const double scale = 1.0 / (static_cast<double>(n) * m);
  for (auto& c : buf) c *= scale;
  return buf;
}

std::vector<double> periodic_idft(const std::vector<std::complex<double>>& coef, int n, int m) {
  std::vector<std::complex<double>> buf(coef);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_2d(m, n, reinterpret_cast<fftw_complex*>(buf.data()),
                            reinterpret_cast<fftw_complex*>(buf.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  std::vector<double> out(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) out[i] = buf[i].real();
  return out;
}

TrigSeries2D prune_to_series(const std::vector<std::complex<double>>& coef, int n, int m,
                             double lx, double ly, double rel_tol) {
  double cmax = 0;
  for (const auto& c : coef) cmax = std::max(cmax, std::abs(c));
  if (cmax == 0) return TrigSeries2D();
  int kx = 0, ky = 0;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i)
      if (std::abs(coef[j * n + i]) > rel_tol * cmax) {
        kx = std::max(kx, std::abs(signed_freq(i, n)));
        ky = std::max(ky, std::abs(signed_freq(j, m)));
      }
  const int wx = 2 * kx + 1;
  std::vector<std::complex<double>> kept(static_cast<std::size_t>(wx) * (2 * ky + 1));
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < n; ++i) {
      const int k = signed_freq(i, n), l = signed_freq(j, m);
      if ((2 * i == n) || (2 * j == m)) continue;  // Nyquist modes dropped
      if (std::abs(k) > kx || std::abs(l) > ky) continue;
      kept[static_cast<std::size_t>(l + ky) * wx + (k + kx)] = coef[j * n + i];
    }
  return TrigSeries2D(kx, ky, lx, ly, std::move(kept));
}

}  // namespace magflow

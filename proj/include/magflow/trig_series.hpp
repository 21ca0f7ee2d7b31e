#pragma once
#include <complex>
#include <mutex>
#include <vector>

#include "magflow/spline.hpp"

namespace magflow {

// Real doubly periodic function stored as a truncated Fourier series
//   g(x, y) = Re sum_{|k|<=Kx, |l|<=Ky} c_kl exp(2 pi i (k x / lx + l y / ly)).
class TrigSeries2D {
 public:
  TrigSeries2D() = default;
  TrigSeries2D(int kx, int ky, double lx, double ly, std::vector<std::complex<double>> coef);

  // value and first derivatives (second derivatives left zero)
  Jet2 eval(double x, double y) const;
  int kx() const { return kx_; }
  int ky() const { return ky_; }
  bool empty() const { return coef_re_.empty(); }

 private:
  int kx_ = 0, ky_ = 0;
  double lx_ = 1, ly_ = 1;
  // row-major (l + Ky) * (2Kx+1) + (k + Kx), split real / imaginary parts
  std::vector<double> coef_re_, coef_im_;
};

// Full complex DFT of an n x m real grid (samples[j*n + i]); returns c[l][k] with
// the normalisation of TrigSeries2D, index (l mod m) * n + (k mod n).
std::vector<std::complex<double>> periodic_dft(const std::vector<double>& samples, int n, int m);
std::vector<double> periodic_idft(const std::vector<std::complex<double>>& coef, int n, int m);

// Signed frequency of DFT index i on an n-point grid, Nyquist mapped to 0.
inline int signed_freq(int i, int n) {
  if (2 * i == n) return 0;
  return i <= n / 2 ? i : i - n;
}

// Keep modes with |c| > rel_tol * max|c| and return them as a series.
TrigSeries2D prune_to_series(const std::vector<std::complex<double>>& coef, int n, int m,
                             double lx, double ly, double rel_tol);

// FFTW planning is not thread safe; every plan creation takes this lock.
std::mutex& fftw_planner_mutex();

}  // namespace magflow

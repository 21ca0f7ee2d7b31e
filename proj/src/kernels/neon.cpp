#include <arm_neon.h>

#include "magflow/kernels.hpp"

namespace magflow::kernels::detail {
namespace {

double weighted_dot(const double* w, const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2)
    acc = vfmaq_f64(acc, vmulq_f64(vld1q_f64(w + i), vld1q_f64(a + i)), vld1q_f64(b + i));
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

void complex_dot(const double* ar, const double* ai, const double* br, const double* bi,
                 std::size_t n, double* re, double* im) {
  float64x2_t r = vdupq_n_f64(0.0), m = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t xr = vld1q_f64(ar + i), xi = vld1q_f64(ai + i);
    float64x2_t yr = vld1q_f64(br + i), yi = vld1q_f64(bi + i);
    r = vfmaq_f64(r, xr, yr);
    r = vfmsq_f64(r, xi, yi);
    m = vfmaq_f64(m, xr, yi);
    m = vfmaq_f64(m, xi, yr);
  }
  double sr = vaddvq_f64(r), sm = vaddvq_f64(m);
  for (; i < n; ++i) {
    sr += ar[i] * br[i] - ai[i] * bi[i];
    sm += ar[i] * bi[i] + ai[i] * br[i];
  }
  *re = sr;
  *im = sm;
}

double weighted_norm2(const double* w, const double* x, const double* y, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t xv = vld1q_f64(x + i), yv = vld1q_f64(y + i);
    float64x2_t q = vfmaq_f64(vmulq_f64(xv, xv), yv, yv);
    acc = vfmaq_f64(acc, vld1q_f64(w + i), q);
  }
  double s = vaddvq_f64(acc);
  for (; i < n; ++i) s += w[i] * (x[i] * x[i] + y[i] * y[i]);
  return s;
}

void minmax(const double* a, std::size_t n, double* lo, double* hi) {
  double l = a[0], h = a[0];
  std::size_t i = 0;
  if (n >= 2) {
    float64x2_t vl = vld1q_f64(a), vh = vl;
    for (i = 2; i + 2 <= n; i += 2) {
      float64x2_t v = vld1q_f64(a + i);
      vl = vminq_f64(vl, v);
      vh = vmaxq_f64(vh, v);
    }
    l = vminvq_f64(vl);
    h = vmaxvq_f64(vh);
  }
  for (; i < n; ++i) {
    l = a[i] < l ? a[i] : l;
    h = a[i] > h ? a[i] : h;
  }
  *lo = l;
  *hi = h;
}

}  // namespace

const Table neon_table{weighted_dot, complex_dot, weighted_norm2, minmax};

}  // namespace magflow::kernels::detail

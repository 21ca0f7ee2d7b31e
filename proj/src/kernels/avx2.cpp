#include <immintrin.h>

#include "magflow/kernels.hpp"

namespace magflow::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, sh));
}

double weighted_dot(const double* w, const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d p0 = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(a + i));
    __m256d p1 = _mm256_mul_pd(_mm256_loadu_pd(w + i + 4), _mm256_loadu_pd(a + i + 4));
    acc0 = _mm256_fmadd_pd(p0, _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(p1, _mm256_loadu_pd(b + i + 4), acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

void complex_dot(const double* ar, const double* ai, const double* br, const double* bi,
                 std::size_t n, double* re, double* im) {
  __m256d r = _mm256_setzero_pd(), m = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xr = _mm256_loadu_pd(ar + i), xi = _mm256_loadu_pd(ai + i);
    __m256d yr = _mm256_loadu_pd(br + i), yi = _mm256_loadu_pd(bi + i);
    r = _mm256_fmadd_pd(xr, yr, r);
    r = _mm256_fnmadd_pd(xi, yi, r);
    m = _mm256_fmadd_pd(xr, yi, m);
    m = _mm256_fmadd_pd(xi, yr, m);
  }
  double sr = hsum(r), sm = hsum(m);
  for (; i < n; ++i) {
    sr += ar[i] * br[i] - ai[i] * bi[i];
    sm += ar[i] * bi[i] + ai[i] * br[i];
  }
  *re = sr;
  *im = sm;
}

double weighted_norm2(const double* w, const double* x, const double* y, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i), yv = _mm256_loadu_pd(y + i);
    __m256d q = _mm256_fmadd_pd(yv, yv, _mm256_mul_pd(xv, xv));
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + i), q, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += w[i] * (x[i] * x[i] + y[i] * y[i]);
  return s;
}

void minmax(const double* a, std::size_t n, double* lo, double* hi) {
  double l = a[0], h = a[0];
  std::size_t i = 0;
  if (n >= 4) {
    __m256d vl = _mm256_loadu_pd(a), vh = vl;
    for (i = 4; i + 4 <= n; i += 4) {
      __m256d v = _mm256_loadu_pd(a + i);
      vl = _mm256_min_pd(vl, v);
      vh = _mm256_max_pd(vh, v);
    }
    alignas(32) double bl[4], bh[4];
    _mm256_store_pd(bl, vl);
    _mm256_store_pd(bh, vh);
    l = bl[0];
    h = bh[0];
    for (int j = 1; j < 4; ++j) {
      l = bl[j] < l ? bl[j] : l;
      h = bh[j] > h ? bh[j] : h;
    }
  }
  for (; i < n; ++i) {
    l = a[i] < l ? a[i] : l;
    h = a[i] > h ? a[i] : h;
  }
  *lo = l;
  *hi = h;
}

}  // namespace

const Table avx2_table{weighted_dot, complex_dot, weighted_norm2, minmax};

}  // namespace magflow::kernels::detail

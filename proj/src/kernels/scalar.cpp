#include "magflow/kernels.hpp"

namespace magflow::kernels::detail {
namespace {

double weighted_dot(const double* w, const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * a[i] * b[i];
  return s;
}

void complex_dot(const double* ar, const double* ai, const double* br, const double* bi,
                 std::size_t n, double* re, double* im) {
  double r = 0.0, m = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    r += ar[i] * br[i] - ai[i] * bi[i];
    m += ar[i] * bi[i] + ai[i] * br[i];
  }
  *re = r;
  *im = m;
}

double weighted_norm2(const double* w, const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += w[i] * (x[i] * x[i] + y[i] * y[i]);
  return s;
}

void minmax(const double* a, std::size_t n, double* lo, double* hi) {
  double l = a[0], h = a[0];
  for (std::size_t i = 1; i < n; ++i) {
    l = a[i] < l ? a[i] : l;
    h = a[i] > h ? a[i] : h;
  }
  *lo = l;
  *hi = h;
}

}  // namespace

const Table scalar_table{weighted_dot, complex_dot, weighted_norm2, minmax};

}  // namespace magflow::kernels::detail

#pragma once
#include <cstddef>

// Data-parallel reductions used by quadrature, trig-series evaluation and the
// loop action. Each kernel has a scalar reference and vector variants; the
// variant is picked once at startup from the CPU features.
namespace magflow::kernels {

enum class Isa { Scalar, Avx2, Neon };

struct Table {
  // sum_i w[i] * a[i] * b[i]
  double (*weighted_dot)(const double* w, const double* a, const double* b, std::size_t n);
  // sum_i (ar + i ai)(br + i bi); result written to re, im
  void (*complex_dot)(const double* ar, const double* ai, const double* br, const double* bi,
                      std::size_t n, double* re, double* im);
  // sum_i w[i] * (x[i]^2 + y[i]^2)
  double (*weighted_norm2)(const double* w, const double* x, const double* y, std::size_t n);
  // min and max of a[0..n), n >= 1
  void (*minmax)(const double* a, std::size_t n, double* lo, double* hi);
};

const Table& table(Isa isa);  // throws UnsupportedError if not compiled or not supported by CPU
bool available(Isa isa);
Isa active_isa();             // honours MAGFLOW_SIMD=scalar
const char* isa_name(Isa isa);

inline const Table& active() { return table(active_isa()); }

inline double weighted_dot(const double* w, const double* a, const double* b, std::size_t n) {
  return active().weighted_dot(w, a, b, n);
}
inline void complex_dot(const double* ar, const double* ai, const double* br, const double* bi,
                        std::size_t n, double* re, double* im) {
  active().complex_dot(ar, ai, br, bi, n, re, im);
}
inline double weighted_norm2(const double* w, const double* x, const double* y, std::size_t n) {
  return active().weighted_norm2(w, x, y, n);
}
inline void minmax(const double* a, std::size_t n, double* lo, double* hi) {
  active().minmax(a, n, lo, hi);
}

namespace detail {
extern const Table scalar_table;
#if defined(MAGFLOW_HAVE_AVX2)
extern const Table avx2_table;
#endif
#if defined(MAGFLOW_HAVE_NEON)
extern const Table neon_table;
#endif
}  // namespace detail

}  // namespace magflow::kernels

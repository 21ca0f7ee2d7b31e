#pragma once
#include <functional>
#include <vector>

namespace magflow {

struct GaussRule {
  std::vector<double> x;  // nodes on [-1, 1]
  std::vector<double> w;
};

// Cached Gauss-Legendre rule with n points (thread-safe).
const GaussRule& gauss_legendre(int n);

// Integrate a smooth function on [a, b] with an n-point rule.
template <class F>
double integrate_gl(F&& f, double a, double b, int n) {
  const GaussRule& r = gauss_legendre(n);
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * f(c + h * r.x[i]);
  return s * h;
}

// Solve the periodic tridiagonal system
//   lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]  (indices mod n)
// via Sherman-Morrison. rhs is overwritten with the solution. n >= 3.
void solve_cyclic_tridiagonal(const std::vector<double>& lower, const std::vector<double>& diag,
                              const std::vector<double>& upper, std::vector<double>& rhs);

// Wrap an angle into (-pi, pi].
double wrap_angle(double a);

// Worker count: MAGFLOW_THREADS if set and positive, else the hardware count.
int thread_count();

// Run body(i) for i in [0, n) on up to thread_count() threads. The first
// exception thrown by any body is rethrown after all workers finish.
void parallel_for(int n, const std::function<void(int)>& body);

}  // namespace magflow

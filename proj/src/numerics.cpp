#include "magflow/numerics.hpp"

#include <boost/math/special_functions/legendre.hpp>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>

#include "magflow/errors.hpp"

namespace magflow {

const GaussRule& gauss_legendre(int n) {
  if (n < 1) throw DomainError("Gauss-Legendre rule needs n >= 1");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    auto rule = std::make_unique<GaussRule>();
    // boost returns the non-negative roots in increasing order
    std::vector<double> pos = boost::math::legendre_p_zeros<double>(n);
    auto weight = [n](double x) {
      double dp = boost::math::legendre_p_prime(n, x);
      return 2.0 / ((1.0 - x * x) * dp * dp);
    };
    for (auto it = pos.rbegin(); it != pos.rend(); ++it) {
      if (*it == 0.0) continue;
      rule->x.push_back(-*it);
      rule->w.push_back(weight(*it));
    }
    for (double x : pos) {
      rule->x.push_back(x);
      rule->w.push_back(weight(x));
    }
    slot = std::move(rule);
  }
  return *slot;
}

void solve_cyclic_tridiagonal(const std::vector<double>& lower, const std::vector<double>& diag,
                              const std::vector<double>& upper, std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  if (n < 3) throw DomainError("cyclic tridiagonal solve needs n >= 3");
  // A = B + u v^T with u = (gamma, 0.., upper[n-1]), v = (1, 0.., lower[0]/gamma)
  const double gamma = -diag[0];
  std::vector<double> b(diag);
  b[0] -= gamma;
  b[n - 1] -= upper[n - 1] * lower[0] / gamma;

  auto thomas = [&](std::vector<double>& d) {
    std::vector<double> c(n);
    double beta = b[0];
    d[0] /= beta;
    for (std::size_t i = 1; i < n; ++i) {
      c[i] = upper[i - 1] / beta;
      beta = b[i] - lower[i] * c[i];
      d[i] = (d[i] - lower[i] * d[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) d[i] -= c[i + 1] * d[i + 1];
  };

  std::vector<double> u(n, 0.0);
  u[0] = gamma;
  u[n - 1] = upper[n - 1];
  thomas(rhs);
  thomas(u);
  const double vx = rhs[0] + lower[0] / gamma * rhs[n - 1];
  const double vz = u[0] + lower[0] / gamma * u[n - 1];
  const double factor = vx / (1.0 + vz);
  for (std::size_t i = 0; i < n; ++i) rhs[i] -= factor * u[i];
}

double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

int thread_count() {
  if (const char* env = std::getenv("MAGFLOW_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int n, const std::function<void(int)>& body) {
  const int workers = std::min(n, thread_count());
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace magflow

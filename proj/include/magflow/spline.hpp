#pragma once
#include <string>
#include <vector>

namespace magflow {

// Value, gradient and Hessian of a scalar function of two variables.
struct Jet2 {
  double f = 0, fx = 0, fy = 0, fxx = 0, fxy = 0, fyy = 0;
};

// Doubly periodic C2 interpolant: cubic B-spline through samples on the
// nodes (i*lx/nx, j*ly/ny). Reproduces the samples exactly at the nodes.
class PeriodicSpline {
 public:
  PeriodicSpline() = default;
  // samples indexed [j*nx + i] for node (x_i, y_j)
  PeriodicSpline(int nx, int ny, double lx, double ly, std::vector<double> samples);

  Jet2 eval(double x, double y) const;
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double lx() const { return lx_; }
  double ly() const { return ly_; }
  const std::vector<double>& samples() const { return samples_; }

 private:
  int nx_ = 0, ny_ = 0;
  double lx_ = 1, ly_ = 1;
  std::vector<double> samples_;
  std::vector<double> coef_;
};

// Load a periodic grid from CSV with header "x,y,<value>" (any row order).
// The periods are inferred as n * spacing.
PeriodicSpline load_grid_csv(const std::string& path, const std::string& value_column);

}  // namespace magflow

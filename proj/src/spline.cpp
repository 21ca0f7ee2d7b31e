#include "magflow/spline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "magflow/errors.hpp"
#include "magflow/numerics.hpp"

namespace magflow {
namespace {

// Solve (c[i-1] + 4 c[i] + c[i+1]) / 6 = data[i] periodically, stride access.
void prefilter_line(double* data, int n, int stride) {
  std::vector<double> rhs(n);
  for (int i = 0; i < n; ++i) rhs[i] = data[i * stride];
  if (n < 3) return;  // constant lines are their own coefficients
  std::vector<double> lo(n, 1.0 / 6.0), di(n, 4.0 / 6.0), up(n, 1.0 / 6.0);
  solve_cyclic_tridiagonal(lo, di, up, rhs);
  for (int i = 0; i < n; ++i) data[i * stride] = rhs[i];
}

// Uniform cubic B-spline basis at offset t in [0,1) for knots -1..2.
void basis(double t, double b[4], double d[4], double dd[4]) {
  const double s = 1.0 - t;
  b[0] = s * s * s / 6.0;
  b[1] = (3 * t * t * t - 6 * t * t + 4) / 6.0;
  b[2] = (-3 * t * t * t + 3 * t * t + 3 * t + 1) / 6.0;
  b[3] = t * t * t / 6.0;
  d[0] = -0.5 * s * s;
  d[1] = 1.5 * t * t - 2 * t;
  d[2] = -1.5 * t * t + t + 0.5;
  d[3] = 0.5 * t * t;
  dd[0] = s;
  dd[1] = 3 * t - 2;
  dd[2] = -3 * t + 1;
  dd[3] = t;
}

}  // namespace

PeriodicSpline::PeriodicSpline(int nx, int ny, double lx, double ly, std::vector<double> samples)
    : nx_(nx), ny_(ny), lx_(lx), ly_(ly), samples_(std::move(samples)) {
  if (nx < 1 || ny < 1 || lx <= 0 || ly <= 0)
    throw DomainError("periodic grid needs positive sizes and periods");
  if (samples_.size() != static_cast<std::size_t>(nx) * ny)
    throw DomainError("periodic grid sample count does not match nx*ny");
  coef_ = samples_;
  for (int j = 0; j < ny; ++j) prefilter_line(coef_.data() + j * nx, nx, 1);
  for (int i = 0; i < nx; ++i) prefilter_line(coef_.data() + i, ny, nx);
}

Jet2 PeriodicSpline::eval(double x, double y) const {
  const double gx = x / lx_ * nx_, gy = y / ly_ * ny_;
  const double fx = std::floor(gx), fy = std::floor(gy);
  double bx[4], dx[4], ddx[4], by[4], dy[4], ddy[4];
  basis(gx - fx, bx, dx, ddx);
  basis(gy - fy, by, dy, ddy);
  auto wrap = [](long i, int n) { long r = i % n; return static_cast<int>(r < 0 ? r + n : r); };
  const long ix = static_cast<long>(fx), iy = static_cast<long>(fy);
  Jet2 out;
  for (int b = 0; b < 4; ++b) {
    const int row = wrap(iy + b - 1, ny_) * nx_;
    double v = 0, vx = 0, vxx = 0;
    for (int a = 0; a < 4; ++a) {
      const double c = coef_[row + wrap(ix + a - 1, nx_)];
      v += c * bx[a];
      vx += c * dx[a];
      vxx += c * ddx[a];
    }
    out.f += v * by[b];
    out.fx += vx * by[b];
    out.fy += v * dy[b];
    out.fxx += vxx * by[b];
    out.fxy += vx * dy[b];
    out.fyy += v * ddy[b];
  }
  const double sx = nx_ / lx_, sy = ny_ / ly_;
  out.fx *= sx;
  out.fy *= sy;
  out.fxx *= sx * sx;
  out.fxy *= sx * sy;
  out.fyy *= sy * sy;
  return out;
}

PeriodicSpline load_grid_csv(const std::string& path, const std::string& value_column) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open grid file " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty grid file " + path);
  auto split = [](const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item.erase(0, item.find_first_not_of(" \t\r"));
      item.erase(item.find_last_not_of(" \t\r") + 1);
      parts.push_back(item);
    }
    return parts;
  };
  auto header = split(line);
  if (header.size() != 3 || header[0] != "x" || header[1] != "y" || header[2] != value_column)
    throw ConfigError("grid file " + path + " must have header x,y," + value_column, 1);
  struct Row { double x, y, f; };
  std::vector<Row> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto p = split(line);
    if (p.size() != 3) throw ConfigError("expected three columns in " + path, line_no);
    try {
      rows.push_back({std::stod(p[0]), std::stod(p[1]), std::stod(p[2])});
    } catch (const std::exception&) {
      throw ConfigError("non-numeric entry in " + path, line_no);
    }
  }
  std::vector<double> xs, ys;
  for (const auto& r : rows) { xs.push_back(r.x); ys.push_back(r.y); }
  auto uniq = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double a : v)
      if (out.empty() || std::abs(a - out.back()) > 1e-9 * (1 + std::abs(a))) out.push_back(a);
    return out;
  };
  xs = uniq(xs);
  ys = uniq(ys);
  const int nx = static_cast<int>(xs.size()), ny = static_cast<int>(ys.size());
  if (nx < 2 || ny < 2 || rows.size() != static_cast<std::size_t>(nx) * ny)
    throw ConfigError("grid file " + path + " is not a complete rectangular grid");
  const double hx = (xs.back() - xs.front()) / (nx - 1), hy = (ys.back() - ys.front()) / (ny - 1);
  if (std::abs(xs.front()) > 1e-9 || std::abs(ys.front()) > 1e-9)
    throw ConfigError("grid file " + path + " must start at x = 0, y = 0");
  std::vector<double> samples(rows.size());
  for (const auto& r : rows) {
    const int i = static_cast<int>(std::lround(r.x / hx)), j = static_cast<int>(std::lround(r.y / hy));
    if (std::abs(i * hx - r.x) > 1e-6 * hx || std::abs(j * hy - r.y) > 1e-6 * hy)
      throw ConfigError("grid file " + path + " is not uniformly spaced");
    samples[j * nx + i] = r.f;
  }
  return PeriodicSpline(nx, ny, nx * hx, ny * hy, std::move(samples));
}

}  // namespace magflow

#include "magflow/cli.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "magflow/contact.hpp"
#include "magflow/critical.hpp"
#include "magflow/errors.hpp"
#include "magflow/numerics.hpp"
#include "magflow/taimanov.hpp"

namespace magflow {

namespace {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// property_tree drops positions, so recover the line of a key for messages.
// An empty key finds the section header.
int line_of(const std::string& text, const std::string& section, const std::string& key) {
  std::istringstream in(text);
  std::string line, current;
  for (int n = 1; std::getline(in, line); ++n) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      current = trim(t.substr(1, t.size() - 2));
      if (key.empty() && current == section) return n;
    } else if (const auto eq = t.find('='); eq != std::string::npos && current == section &&
                                               trim(t.substr(0, eq)) == key) {
      return n;
    }
  }
  return 0;
}

double to_double(const std::string& raw) {
  const std::string v = trim(raw);
  double d = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size() || !std::isfinite(d))
    throw std::invalid_argument("expected a number, got '" + v + "'");
  return d;
}

int to_int(const std::string& raw) {
  const std::string v = trim(raw);
  int i = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), i);
  if (v.empty() || ec != std::errc() || p != v.data() + v.size())
    throw std::invalid_argument("expected an integer, got '" + v + "'");
  return i;
}

bool to_bool(const std::string& raw) {
  std::string v = trim(raw);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string part; std::getline(in, part, sep);)
    if (!trim(part).empty()) out.push_back(trim(part));
  return out;
}

using Setter = std::function<void(const std::string&)>;

Setter real(double& d) {
  return [&d](const std::string& v) { d = to_double(v); };
}
Setter positive(double& d) {
  return [&d](const std::string& v) {
    d = to_double(v);
    if (!(d > 0)) throw std::invalid_argument("must be positive");
  };
}
Setter positive(std::optional<double>& d) {
  return [&d](const std::string& v) {
    d = to_double(v);
    if (!(*d > 0)) throw std::invalid_argument("must be positive");
  };
}
Setter integer(int& i, int min) {
  return [&i, min](const std::string& v) {
    i = to_int(v);
    if (i < min) throw std::invalid_argument("must be at least " + std::to_string(min));
  };
}
Setter flag(bool& b) {
  return [&b](const std::string& v) { b = to_bool(v); };
}
Setter word(std::string& s) {
  return [&s](const std::string& v) { s = trim(v); };
}
Setter one_of(std::string& s, std::vector<std::string> allowed) {
  return [&s, allowed](const std::string& v) {
    const std::string t = trim(v);
    if (std::find(allowed.begin(), allowed.end(), t) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw std::invalid_argument("'" + t + "' is not one of " + list);
    }
    s = t;
  };
}

CircleSeed parse_circle(const std::string& entry, int chart) {
  std::istringstream in(entry);
  CircleSeed c;
  c.chart = chart;
  std::string u, v, r, dir;
  if (!(in >> u >> v >> r)) throw std::invalid_argument("circle seed needs 'u v radius [ccw|cw]'");
  c.u = to_double(u);
  c.v = to_double(v);
  c.radius = to_double(r);
  if (!(c.radius > 0)) throw std::invalid_argument("circle seed radius must be positive");
  if (in >> dir) {
    if (dir == "cw") c.counter_clockwise = false;
    else if (dir != "ccw") throw std::invalid_argument("circle direction must be ccw or cw");
  }
  if (in >> dir) throw std::invalid_argument("trailing text in circle seed '" + entry + "'");
  return c;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"simulate", "orbit-shoot", "orbit-descend", "oracle",
                                              "taimanov", "critical",    "contact-check", "sweep"};
  return names;
}

RunConfig parse_config(const std::string& text, const fs::path& base_dir) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.message(), static_cast<int>(e.line()));
  }

  RunConfig cfg;
  cfg.base_dir = base_dir;
  SurfaceSpec& su = cfg.surface;
  FieldSpec& fi = cfg.field;
  SolverSpec& so = cfg.solver;
  RunSpec& ru = cfg.run;
  bool field_shorthand = false, field_kind_given = false;
  std::optional<double> k, s;
  std::string output, circles, sweep;

  const std::map<std::string, std::map<std::string, Setter>> table{
      {"surface",
       {{"kind",
         [&](const std::string& v) {
           std::string t = trim(v);
           if (t == "torus") t = "flat_torus";
           one_of(su.kind, {"sphere", "flat_torus", "hyperbolic", "conformal_torus"})(t);
         }},
        {"genus", integer(su.genus, 0)},
        {"lx", positive(su.lx)},
        {"ly", positive(su.ly)},
        {"conformal_amp", real(su.conformal_amp)},
        {"conformal_nx", integer(su.conformal_nx, -1000)},
        {"conformal_ny", integer(su.conformal_ny, -1000)},
        {"conformal_csv", word(su.conformal_csv)}}},
      {"field",
       {{"kind",
         [&](const std::string& v) {
           field_kind_given = true;
           one_of(fi.kind, {"constant", "cosine", "bump", "sphere_height", "csv"})(v);
         }},
        {"constant",
         [&](const std::string& v) {
           field_shorthand = true;
           fi.value = to_double(v);
         }},
        {"value", real(fi.value)},
        {"amp", real(fi.amp)},
        {"offset", real(fi.offset)},
        {"nx", integer(fi.nx, -1000)},
        {"ny", integer(fi.ny, -1000)},
        {"base", real(fi.base)},
        {"width", positive(fi.width)},
        {"cx", real(fi.cx)},
        {"cy", real(fi.cy)},
        {"zero_mean", flag(fi.zero_mean)},
        {"c0", real(fi.c0)},
        {"c1", real(fi.c1)},
        {"csv", word(fi.csv)},
        {"csv_column", word(fi.csv_column)}}},
      {"solver",
       {{"dt", positive(so.dt)},
        {"tol", positive(so.tol)},
        {"max_iter", integer(so.max_iter, 1)},
        {"fd_step", positive(so.fd_step)},
        {"max_time", positive(so.max_time)},
        {"lattice_section", flag(so.lattice_section)},
        {"t_end", positive(so.t_end)},
        {"loop_vertices", integer(so.loop_vertices, 8)},
        {"loop_period", positive(so.loop_period)},
        {"descent_tol", positive(so.descent_tol)},
        {"descent_max_iter", integer(so.descent_max_iter, 1)},
        {"period_min", positive(so.period_min)},
        {"taimanov_tol", positive(so.taimanov_tol)},
        {"l_min", positive(so.l_min)},
        {"cfl", positive(so.cfl)},
        {"taimanov_max_iter", integer(so.taimanov_max_iter, 1)},
        {"saddle", flag(so.saddle)},
        {"snapshot_every", integer(so.snapshot_every, 0)},
        {"segments", integer(so.segments, 3)},
        {"k_lo", positive(so.k_lo)},
        {"k_hi", positive(so.k_hi)},
        {"bisection_iterations", integer(so.bisection_iterations, 1)},
        {"c0_grid", integer(so.c0_grid, 8)},
        {"c0_budget", integer(so.c0_budget, 0)},
        {"sm_grid", integer(so.sm_grid, 2)},
        {"fiber_grid", integer(so.fiber_grid, 1)},
        {"structural_h", positive(so.structural_h)}}},
      {"run",
       {{"k", positive(k)},
        {"s", positive(s)},
        {"output", word(output)},
        {"seed_chart", integer(ru.seed_chart, 0)},
        {"seed_u", [&](const std::string& v) { ru.seed_u = to_double(v); }},
        {"seed_v", [&](const std::string& v) { ru.seed_v = to_double(v); }},
        {"seed_heading", real(ru.seed_heading)},
        {"seed_radius", positive(ru.seed_radius)},
        {"seed_circles", word(circles)},
        {"sweep", word(sweep)},
        {"sweep_command",
         one_of(ru.sweep_command, {"simulate", "orbit-shoot", "orbit-descend", "oracle", "taimanov", "critical",
                                   "contact-check"})},
        {"candidate", one_of(ru.candidate, {"auto", "plus", "minus", "exact", "nonexact", "closed"})},
        {"rng_seed", [&](const std::string& v) {
           const int i = to_int(v);
           if (i < 0) throw std::invalid_argument("must be non-negative");
           ru.rng_seed = static_cast<unsigned>(i);
         }}}}};

  for (const auto& [section, body] : tree) {
    const auto sec = table.find(section);
    if (!body.data().empty())
      throw ConfigError("key '" + section + "' outside any section", line_of(text, "", section));
    if (sec == table.end()) throw ConfigError("unknown section [" + section + "]", line_of(text, section, ""));
    for (const auto& [key, value] : body) {
      const int line = line_of(text, section, key);
      const auto setter = sec->second.find(key);
      if (setter == sec->second.end()) throw ConfigError("unknown key " + section + "." + key, line);
      try {
        setter->second(value.data());
      } catch (const std::invalid_argument& e) {
        throw ConfigError(section + "." + key + ": " + e.what(), line);
      }
    }
  }

  if (field_shorthand) {
    if (field_kind_given && fi.kind != "constant")
      throw ConfigError("field.constant conflicts with field.kind = " + fi.kind, line_of(text, "field", "constant"));
    fi.kind = "constant";
  }
  if (k && s) throw ConfigError("run.k and run.s are mutually exclusive", line_of(text, "run", "s"));
  if (k) {
    ru.k = k;
    ru.s = s_of_energy(*k);
  } else if (s) {
    ru.s = s;
    ru.k = energy_of_s(*s);
  }
  if (!output.empty()) ru.output = output;
  try {
    for (const auto& entry : split(circles, ',')) ru.seed_circles.push_back(parse_circle(entry, ru.seed_chart));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("run.seed_circles: ") + e.what(), line_of(text, "run", "seed_circles"));
  }
  if (!sweep.empty()) {
    const int line = line_of(text, "run", "sweep");
    if (!k && !s) throw ConfigError("run.sweep needs run.k or run.s to fix its unit", line);
    ru.sweep_in_s = s.has_value();
    std::string spaced = sweep;
    std::replace(spaced.begin(), spaced.end(), ',', ' ');
    std::istringstream in(spaced);
    for (std::string tok; in >> tok;) {
      try {
        ru.sweep.push_back(to_double(tok));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("run.sweep: ") + e.what(), line);
      }
      if (!(ru.sweep.back() > 0)) throw ConfigError("run.sweep: values must be positive", line);
    }
  }
  if (so.k_lo && so.k_hi && !(*so.k_lo < *so.k_hi))
    throw ConfigError("solver.k_lo must be below solver.k_hi", line_of(text, "solver", "k_hi"));
  if (su.kind == "hyperbolic" && su.genus == 1)
    throw ConfigError("surface.genus: the hyperbolic surface needs genus 0 (plane) or >= 2",
                      line_of(text, "surface", "genus"));
  return cfg;
}

RunConfig parse_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

MagneticSystem build_system(const RunConfig& cfg) {
  const SurfaceSpec& su = cfg.surface;
  const FieldSpec& fi = cfg.field;
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (cfg.base_dir / p).string(); };
  SurfaceModel surface = SurfaceModel::flat_torus(su.lx, su.ly);
  if (su.kind == "sphere") {
    surface = SurfaceModel::sphere();
  } else if (su.kind == "hyperbolic") {
    surface = SurfaceModel::hyperbolic(su.genus);
  } else if (su.kind == "conformal_torus") {
    PlanarFunction u = su.conformal_csv.empty()
                           ? PlanarFunction::cosine(su.conformal_amp, su.conformal_nx, su.conformal_ny, su.lx, su.ly)
                           : PlanarFunction::grid(load_grid_csv(resolve(su.conformal_csv), "u"));
    surface = SurfaceModel::conformal_torus(std::move(u), su.lx, su.ly);
  }
  const double lx = surface.lx(), ly = surface.ly();
  MagneticField field = MagneticField::constant(fi.value);
  if (fi.kind == "cosine") field = MagneticField(PlanarFunction::cosine(fi.amp, fi.nx, fi.ny, lx, ly, fi.offset));
  else if (fi.kind == "bump")
    field = MagneticField(PlanarFunction::bump(fi.base, fi.amp, fi.width, fi.cx, fi.cy, lx, ly, fi.zero_mean));
  else if (fi.kind == "sphere_height") field = MagneticField::sphere_height(fi.c0, fi.c1);
  else if (fi.kind == "csv") {
    if (fi.csv.empty()) throw ConfigError("field.csv must name a file for kind = csv");
    field = MagneticField(PlanarFunction::grid(load_grid_csv(resolve(fi.csv), fi.csv_column)));
  }
  return MagneticSystem(std::move(surface), std::move(field));
}

// ------------------------------------------------------------------ execution

namespace {

struct Run {
  const RunConfig& cfg;
  MagneticSystem sys;
  fs::path dir;
  json summary = json::object();

  double k() const {
    if (!cfg.run.k) throw ConfigError("this command needs run.k or run.s");
    return *cfg.run.k;
  }
  double s() const { return s_of_energy(k()); }

  ChartPoint seed_point() const {
    const SurfaceModel& surf = sys.surface();
    double u = 0, v = 0;
    if (surf.kind() == SurfaceKind::HyperbolicPlane) v = 1;
    if (surf.is_torus()) u = 0.5 * surf.lx(), v = 0.5 * surf.ly();
    return {cfg.run.seed_chart, cfg.run.seed_u.value_or(u), cfg.run.seed_v.value_or(v)};
  }
  TangentState seed_state() const {
    TangentState x{seed_point(), Vec2(std::cos(cfg.run.seed_heading), std::sin(cfg.run.seed_heading))};
    return with_energy(sys, x, k());
  }
  ShootParams shoot_params() const {
    const SolverSpec& so = cfg.solver;
    ShootParams p;
    p.tol = so.tol;
    p.max_iter = so.max_iter;
    p.fd_step = so.fd_step;
    p.dt = so.dt;
    p.max_time = so.max_time;
    p.lattice_section = so.lattice_section;
    return p;
  }
  TaimanovParams taimanov_params() const {
    const SolverSpec& so = cfg.solver;
    TaimanovParams p;
    p.tol = so.taimanov_tol;
    p.l_min = so.l_min;
    p.cfl = so.cfl;
    p.max_iter = so.taimanov_max_iter;
    p.saddle = so.saddle;
    p.snapshot_every = so.snapshot_every;
    return p;
  }
  std::vector<RegionCurve> seed_curves() const {
    std::vector<RegionCurve> out;
    for (const CircleSeed& c : cfg.run.seed_circles)
      out.push_back(circle_curve(c.chart, {c.u, c.v}, c.radius, 64, c.counter_clockwise));
    if (out.empty()) out.push_back(circle_curve(cfg.run.seed_chart, seed_point().xy(), cfg.run.seed_radius, 64));
    return out;
  }
  SMGrid sm_grid() const { return {cfg.solver.sm_grid, cfg.solver.fiber_grid}; }

  void plot(const std::string& name, const std::string& body) const {
    std::ofstream out(dir / name);
    if (!out) throw Error("cannot write " + (dir / name).string());
    out << "set datafile separator ','\nset terminal png size 800,800\n" << body;
  }
  void plot_path(const std::string& csv) const {
    const std::string stem = fs::path(csv).stem().string();
    plot(stem + ".gp", "set output '" + stem + ".png'\nset size ratio -1\nset key off\nset xlabel 'u'\nset ylabel 'v'\n"
                       "plot '" + csv + "' using 3:4 with lines\n");
  }
};

void put_orbit(json& j, const Run& r, const Orbit& o, const std::string& prefix = "") {
  j[prefix + "period"] = o.period;
  j[prefix + "energy"] = o.energy;
  j[prefix + "closure_gap"] = o.closure_gap;
  j[prefix + "curvature_residual"] = o.curvature_residual;
  j[prefix + "newton_iterations"] = o.newton_iterations;
  j[prefix + "contractible"] = o.homotopy.contractible;
  if (r.sys.surface().is_torus()) {
    j[prefix + "m"] = o.homotopy.m;
    j[prefix + "n"] = o.homotopy.n;
  }
  if (o.homotopy.contractible && r.sys.field().is_constant())
    j[prefix + "radius"] = measure_geodesic_radius(r.sys, o.trajectory);
}

int cmd_simulate(Run& r) {
  const Trajectory tr = integrate(r.sys, r.seed_state(), r.cfg.solver.t_end, r.cfg.solver.dt);
  write_trajectory_csv((r.dir / "trajectory.csv").string(), r.sys, tr);
  r.plot_path("trajectory.csv");
  r.summary["outcome"] = tr.truncated ? "truncated" : "ok";
  if (tr.truncated) r.summary["reason"] = tr.truncation_reason;
  r.summary["t_end"] = tr.samples.empty() ? 0.0 : tr.samples.back().t;
  r.summary["samples"] = tr.samples.size();
  r.summary["max_energy_drift"] = tr.max_energy_drift;
  r.summary["curvature_residual"] = curvature_residual(r.sys, tr, r.s());
  return tr.truncated ? 1 : 0;
}

int cmd_orbit_shoot(Run& r) {
  const Orbit o = shoot_periodic(r.sys, r.k(), r.seed_state(), r.shoot_params());
  write_orbit_json((r.dir / "orbit.json").string(), o);
  write_trajectory_csv((r.dir / "trajectory.csv").string(), r.sys, o.trajectory);
  r.plot_path("trajectory.csv");
  r.summary["outcome"] = "closed";
  put_orbit(r.summary, r, o);
  return 0;
}

int cmd_orbit_descend(Run& r) {
  const SolverSpec& so = r.cfg.solver;
  const double k = r.k();
  const ChartPoint c = r.seed_point();
  DiscreteLoop loop =
      reparametrize_uniform(r.sys, circle_loop(c.chart, c.xy(), r.cfg.run.seed_radius, so.loop_vertices, 1.0));
  loop.T = so.loop_period.value_or(loop_measures(r.sys, loop).length / std::sqrt(2 * k));
  DescentParams p;
  p.tol = so.descent_tol;
  p.T_min = so.period_min;
  p.max_iter = so.descent_max_iter;
  const DescentResult d = descend_to_critical(loop, r.sys, k, p);
  write_loop_csv((r.dir / "loop.csv").string(), d.loop);
  r.plot_path("loop.csv");
  r.summary["outcome"] = outcome_name(d.outcome);
  r.summary["period"] = d.loop.T;
  r.summary["action"] = d.action;
  r.summary["mean_energy"] = d.mean_energy;
  r.summary["grad_norm"] = d.grad_norm;
  r.summary["iterations"] = d.iterations;
  r.summary["newton_steps"] = d.newton_steps;
  if (d.outcome != DescentOutcome::Converged) return 1;
  try {
    const Orbit o = loop_to_orbit(r.sys, k, d.loop, r.shoot_params());
    write_trajectory_csv((r.dir / "trajectory.csv").string(), r.sys, o.trajectory);
    put_orbit(r.summary, r, o, "shot_");
  } catch (const NoConvergence&) {
    r.summary["shot_outcome"] = "no-convergence";
  } catch (const NoReturn&) {
    r.summary["shot_outcome"] = "no-return";
  }
  return 0;
}

int cmd_oracle(Run& r) {
  const MagneticSystem& sys = r.sys;
  if (!sys.field().is_constant() || sys.field().constant_value() != 1.0)
    throw UnsupportedError("the oracle covers the unit constant field only");
  OracleKind kind = OracleKind::Torus;
  switch (sys.surface().kind()) {
    case SurfaceKind::RoundSphere: kind = OracleKind::Sphere; break;
    case SurfaceKind::HyperbolicPlane: kind = OracleKind::Hyperbolic; break;
    case SurfaceKind::FlatTorus: break;
    case SurfaceKind::ConformalTorus: throw UnsupportedError("no closed form on a conformal torus");
  }
  const OracleResult o = homogeneous_oracle(kind, r.s());
  r.summary["exists_contractible"] = o.exists_contractible;
  if (o.radius) r.summary["radius"] = *o.radius;
  if (o.period) {
    r.summary["period"] = *o.period;
    // one lap of the predicted circle for inspection
    const Trajectory tr = integrate(sys, r.seed_state(), *o.period, r.cfg.solver.dt);
    write_trajectory_csv((r.dir / "trajectory.csv").string(), sys, tr);
    r.plot_path("trajectory.csv");
  }
  return 0;
}

int cmd_taimanov(Run& r) {
  const double k = r.k();
  const TaimanovResult t = evolve_minimize(r.seed_curves(), r.sys, k, r.taimanov_params());
  write_snapshots_csv((r.dir / "curves.csv").string(), {{t.iterations, t.curves}});
  r.plot_path("curves.csv");
  if (!t.snapshots.empty()) write_snapshots_csv((r.dir / "snapshots.csv").string(), t.snapshots);
  r.summary["outcome"] = outcome_name(t.outcome);
  r.summary["value"] = t.value;
  r.summary["residual"] = t.residual;
  r.summary["iterations"] = t.iterations;
  json curves = json::array();
  for (const RegionCurve& c : t.curves)
    curves.push_back({{"vertices", c.size()},
                      {"length", curve_length(r.sys.surface(), c)},
                      {"flux", enclosed_flux(r.sys, c)}});
  r.summary["curves"] = curves;
  if (t.outcome != TaimanovOutcome::Stationary && t.outcome != TaimanovOutcome::BelowThreshold) return 1;
  if (t.curves.size() == 1) {
    const Orbit o = refine_to_orbit(r.sys, k, t.curves[0], r.cfg.solver.segments, r.shoot_params());
    write_orbit_json((r.dir / "orbit.json").string(), o);
    write_trajectory_csv((r.dir / "trajectory.csv").string(), r.sys, o.trajectory);
    put_orbit(r.summary, r, o, "orbit_");
  }
  return 0;
}

int cmd_critical(Run& r) {
  const MagneticSystem& sys = r.sys;
  const SurfaceModel& surf = sys.surface();
  const SolverSpec& so = r.cfg.solver;
  if (surf.kind() == SurfaceKind::HyperbolicPlane && surf.genus() >= 2) r.summary["c_h"] = c_h_value(sys);
  if (surf.kind() == SurfaceKind::HyperbolicPlane && sys.field().is_constant())
    r.summary["homogeneous_c"] = homogeneous_mane_value(sys);
  if (surf.kind() == SurfaceKind::FlatTorus) {
    try {
      C0Params p;
      p.grid = so.c0_grid;
      p.budget = so.c0_budget;
      const C0Bound b = c0_upper_bound(sys, p);
      write_primitive_grid_csv((r.dir / "primitive.csv").string(), surf, *b.witness, so.c0_grid);
      r.plot("primitive.gp",
             "set output 'primitive.png'\nset view map\nset size ratio -1\nset xlabel 'x'\nset ylabel 'y'\n"
             "splot 'primitive.csv' using 1:2:5 with points pointtype 5 palette title '|theta|'\n");
      r.summary["c0_upper"] = b.value;
      r.summary["half_c0_squared"] = 0.5 * b.value * b.value;
      r.summary["c0_iterations"] = b.iterations;
    } catch (const UnsupportedError&) {
      // non-exact field: no c0
    }
  }
  if (so.k_lo && so.k_hi) {
    const TauEstimate t = tau_estimate(sys, r.seed_curves(), *so.k_lo, *so.k_hi, so.bisection_iterations,
                                       r.taimanov_params());
    r.summary["tau"] = t.tau;
    r.summary["tau_bracket"] = {t.k_lo, t.k_hi};
    r.summary["tau_evolutions"] = t.evolutions;
  }
  if (r.summary.empty()) throw UnsupportedError("no critical value applies to this system");
  return 0;
}

ContactCandidate pick_candidate(const Run& r) {
  const MagneticSystem& sys = r.sys;
  std::string name = r.cfg.run.candidate;
  if (name == "auto") {
    const SurfaceKind kind = sys.surface().kind();
    if (kind == SurfaceKind::RoundSphere) name = sys.field().is_constant() ? "plus" : "exact";
    else if (kind == SurfaceKind::HyperbolicPlane) name = sys.field().is_constant() ? "minus" : "nonexact";
    else name = std::abs(flux_total(sys)) < 1e-10 ? "exact" : "closed";
  }
  ContactCandidate c;
  if (name == "plus") c.kind = CandidateKind::HomogeneousPlus;
  else if (name == "minus") c.kind = CandidateKind::HomogeneousMinus;
  else if (name == "exact") {
    c.kind = CandidateKind::ExactPrimitive;
    c.zeta = contact_zeta(sys);
  } else if (name == "nonexact") c = nonexact_candidate(sys);
  else c.kind = CandidateKind::ClosedTorus;
  return c;
}

int cmd_contact(Run& r) {
  const MagneticSystem& sys = r.sys;
  const double s = r.s();
  const ContactCandidate cand = pick_candidate(r);
  const ContactCertificate cert = contact_candidate_min(sys, s, cand, r.sm_grid());
  r.summary["verdict"] = verdict_name(cert.verdict);
  r.summary["s"] = s;
  r.summary["min_value"] = cert.min_value;
  r.summary["max_value"] = cert.max_value;
  r.summary["witness"] = cert.witness;
  r.summary["d_ratio"] = cert.d_ratio;
  // candidate along the fibre over the seed point
  {
    std::ofstream out(r.dir / "fiber.csv");
    out << "phi,value\n" << std::setprecision(17);
    const int n = 256;
    for (int i = 0; i <= n; ++i) {
      const double phi = 2 * std::numbers::pi * i / n;
      out << phi << ',' << candidate_on_flow(sys, s, cand, {r.seed_point(), phi}) << '\n';
    }
    r.plot("fiber.gp", "set output 'fiber.png'\nset key off\nset xlabel 'phi'\nset ylabel 'tau(X_s)'\n"
                       "plot 'fiber.csv' using 1:2 with lines\n");
  }
  const StructuralResiduals sr =
      structural_relations_check(sys.surface(), r.cfg.solver.structural_h, 64, r.cfg.run.rng_seed);
  r.summary["structural"] = {{"h", r.cfg.solver.structural_h},
                             {"d_alpha", sr.d_alpha},
                             {"d_psi", sr.d_psi},
                             {"d_beta", sr.d_beta}};
  if (sys.surface().compact()) {
    const LiouvilleAction L = liouville_action(sys, s, r.sm_grid());
    r.summary["liouville"] = {{"volume", L.volume},
                              {"closed_form_action", L.closed_form_action},
                              {"quadrature_action", L.quadrature_action},
                              {"flip_integral", L.flip_integral}};
    const RotationVector rv = rotation_vector_liouville(sys, s, r.sm_grid());
    json rot{{"fiber", rv.fiber}};
    if (rv.torus) {
      rot["m"] = rv.m;
      rot["n"] = rv.n;
    }
    r.summary["rotation"] = rot;
  }
  return 0;
}

int dispatch(Run& r, const std::string& cmd);

int cmd_sweep(Run& r) {
  const RunSpec& ru = r.cfg.run;
  if (ru.sweep.empty()) throw ConfigError("sweep needs run.sweep values");
  const int n = static_cast<int>(ru.sweep.size());
  std::vector<std::string> lines(n);
  std::vector<int> codes(n);
  parallel_for(n, [&](int i) {
    RunConfig sub = r.cfg;
    const double x = ru.sweep[i];
    sub.run.k = ru.sweep_in_s ? energy_of_s(x) : x;
    sub.run.s = ru.sweep_in_s ? x : s_of_energy(x);
    sub.run.sweep.clear();
    sub.run.output = r.dir / ("run_" + std::to_string(i));
    std::ostringstream line;
    codes[i] = execute(sub, ru.sweep_command, line);
    lines[i] = line.str();
  });
  std::ofstream csv(r.dir / "sweep.csv");
  csv << "index,k,s,exit_code,period\n" << std::setprecision(17);
  json runs = json::array();
  int worst = 0;
  for (int i = 0; i < n; ++i) {
    json one = json::parse(lines[i]);
    const double x = ru.sweep[i];
    const double k = ru.sweep_in_s ? energy_of_s(x) : x;
    csv << i << ',' << k << ',' << s_of_energy(k) << ',' << codes[i] << ',';
    if (one.contains("period")) csv << one["period"].get<double>();
    csv << '\n';
    runs.push_back({{"k", k}, {"s", s_of_energy(k)}, {"exit_code", codes[i]}, {"summary", one}});
    worst = std::max(worst, codes[i]);
  }
  r.plot("sweep.gp", "set output 'sweep.png'\nset key off\nset xlabel 's'\nset ylabel 'period'\n"
                     "plot 'sweep.csv' using 3:5 with linespoints\n");
  r.summary["command"] = ru.sweep_command;
  r.summary["runs"] = runs;
  return worst;
}

int dispatch(Run& r, const std::string& cmd) {
  if (cmd == "simulate") return cmd_simulate(r);
  if (cmd == "orbit-shoot") return cmd_orbit_shoot(r);
  if (cmd == "orbit-descend") return cmd_orbit_descend(r);
  if (cmd == "oracle") return cmd_oracle(r);
  if (cmd == "taimanov") return cmd_taimanov(r);
  if (cmd == "critical") return cmd_critical(r);
  if (cmd == "contact-check") return cmd_contact(r);
  if (cmd == "sweep") return cmd_sweep(r);
  throw ConfigError("unknown subcommand '" + cmd + "'");
}

int fail(json& j, const char* outcome, const std::exception& e, int code) {
  j["outcome"] = outcome;
  j["error"] = e.what();
  return code;
}

}  // namespace

int execute(const RunConfig& cfg, const std::string& subcommand, std::ostream& out) {
  json summary;
  int code = 0;
  std::optional<fs::path> dir;
  try {
    Run r{cfg, build_system(cfg), cfg.run.output};
    fs::create_directories(r.dir);
    dir = r.dir;
    try {
      code = dispatch(r, subcommand);
      summary = std::move(r.summary);
    } catch (...) {
      summary = std::move(r.summary);
      throw;
    }
  } catch (const NoReturn& e) {
    code = fail(summary, "no-return", e, 1);
  } catch (const NoConvergence& e) {
    code = fail(summary, "no-convergence", e, 1);
  } catch (const NoBracket& e) {
    code = fail(summary, "no-bracket", e, 1);
  } catch (const std::exception& e) {
    code = fail(summary, "error", e, 2);
  }
  if (dir) {
    std::ofstream json_file(*dir / "summary.json");
    json_file << summary.dump(2) << '\n';
  }
  out << summary.dump() << std::endl;
  return code;
}

}  // namespace magflow

#include "tracelab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "tracelab/capacity.hpp"
#include "tracelab/errors.hpp"
#include "tracelab/io.hpp"
#include "tracelab/quadrature.hpp"

namespace tracelab::experiments {

using geometry::BoundarySet;
using geometry::FractalParams;
using geometry::FractalRule;
using geometry::RectDomain;

void ExperimentReport::add_scalar(std::string key, double value, double tol) {
  scalars.push_back({std::move(key), value, tol});
}

void ExperimentReport::add_clause(std::string key, bool ok, std::string detail) {
  clauses.push_back({std::move(key), ok, std::move(detail)});
}

const ReportClause& ExperimentReport::clause(const std::string& key) const {
  for (const auto& c : clauses) {
    if (c.name == key) return c;
  }
  throw ParameterError("no clause named " + key);
}

double ExperimentReport::scalar(const std::string& key) const {
  for (const auto& s : scalars) {
    if (s.name == key) return s.value;
  }
  throw ParameterError("no scalar named " + key);
}

bool ExperimentReport::passed() const {
  return !clauses.empty() &&
         std::all_of(clauses.begin(), clauses.end(), [](const auto& c) { return c.passed; });
}

json ExperimentReport::to_json() const {
  json sc = json::array();
  for (const auto& s : scalars) {
    sc.push_back({{"name", s.name},
                  {"value", std::isfinite(s.value) ? json(s.value) : json(io::format_double(s.value))},
                  {"tol", s.tol}});
  }
  json cl = json::array();
  for (const auto& c : clauses) cl.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  json se = json::array();
  for (const auto& s : series) se.push_back(name + "_" + s.name + ".csv");
  return json{{"name", name},      {"parameters", parameters}, {"scalars", sc},
              {"clauses", cl},     {"series", se},             {"passed", passed()}};
}

void ExperimentReport::write(const std::filesystem::path& dir) const {
  io::write_text(dir / (name + ".json"), to_json().dump(2) + "\n");
  for (const auto& s : series) io::write_text(dir / (name + "_" + s.name + ".csv"), s.csv);
}

double example1_approximant(int j, Point y) {
  if (j < 0) throw ParameterError("example1_approximant: j must be >= 0");
  const double lo = std::ldexp(1.0, -j - 1) + std::ldexp(1.0, -j - 3);
  const double hi = std::ldexp(1.0, -j) - std::ldexp(1.0, -j - 2);
  if (y.y < lo) return 0.0;
  if (y.y > hi) return 1.0;
  return std::ldexp(1.0, j + 3) * y.y - 5.0;
}

namespace {

Rect band(const RectDomain& dom, double y0, double y1) {
  const Rect& b = dom.bbox();
  return Rect::from_corners(b.x0(), y0, b.x1(), y1);
}

double ramp_area(const RectDomain& dom, int j) {
  const double s = std::ldexp(1.0, -j);
  return quadrature::area_in_box(dom, band(dom, 0.625 * s, 0.75 * s));
}

}  // namespace

double approximant_gradient_energy(const RectDomain& dom, int j, double p) {
  if (j < 0) throw ParameterError("approximant_gradient_energy: j must be >= 0");
  return std::pow(2.0, (j + 3) * p) * ramp_area(dom, j);
}

double approximant_distance(const RectDomain& dom, int j, double p) {
  const double s = std::ldexp(1.0, -j);
  const Rect& b = dom.bbox();
  const double below = b.y0() < 0.625 * s ? quadrature::area_in_box(dom, band(dom, b.y0(), 0.625 * s)) : 0.0;
  const double lower = below + ramp_area(dom, j) / (p + 1.0);
  return std::pow(lower + approximant_gradient_energy(dom, j, p), 1.0 / p);
}

std::vector<Point> default_sample_points() {
  std::vector<Point> pts;
  for (int k = 0; k <= 8; ++k) pts.push_back({k / 8.0, 0.0});
  return pts;
}

std::vector<double> dyadic_radii(int from, int to) {
  std::vector<double> r;
  for (int k = from; k <= to; ++k) r.push_back(std::ldexp(1.0, -k));
  return r;
}

namespace {

std::string point_label(Point x) {
  return "(" + io::format_double(x.x) + "," + io::format_double(x.y) + ")";
}

json points_json(std::span<const Point> pts) {
  json a = json::array();
  for (Point x : pts) a.push_back(json::array({x.x, x.y}));
  return a;
}

json settings_json(const MembershipSettings& m) {
  return json{{"enabled", m.enabled},       {"depth", m.depth},
              {"grid_level", m.grid_level}, {"deltas", m.deltas},
              {"tol", m.tol},               {"iteration_cap", m.iteration_cap}};
}

std::vector<membership::DistanceReport> run_sweep(const FractalParams& prm,
                                                  const MembershipSettings& m,
                                                  const analysis::ScalarField& u) {
  const double h = std::ldexp(1.0, -m.grid_level);
  for (double d : m.deltas) {
    if (h > 0.25 * d * (1.0 + 1e-12)) {
      throw ParameterError("membership: grid h must be <= delta/4");
    }
  }
  const RectDomain dom = geometry::build_fractal_domain(prm);
  membership::MembershipProblem prob{dom, geometry::fractal_dirichlet_part(),
                                     GridFunction::sample(GridSpec::covering(dom.bbox(), h), dom, u),
                                     prm.p, m.deltas.front(), m.tol, m.iteration_cap};
  return membership::membership_sweep(prob, m.deltas);
}

void add_sweep(ExperimentReport& rep, const std::vector<membership::DistanceReport>& sweep,
               double tol) {
  for (const auto& r : sweep) rep.add_scalar("distance@delta=" + io::format_double(r.delta), r.distance, tol);
  rep.series.push_back({"membership", io::sweep_csv(sweep)});
}

}  // namespace

ExperimentReport verify_example1(const Example1Config& cfg) {
  if (!(cfg.p > 1.0)) throw ParameterError("verify_example1: p must be > 1");
  ExperimentReport rep;
  rep.name = "example1";
  rep.parameters = {{"p", cfg.p},     {"depth", cfg.depth},
                    {"radii", cfg.radii}, {"points", points_json(cfg.points)},
                    {"tol", cfg.tol}, {"energy_from", cfg.energy_from},
                    {"membership", settings_json(cfg.membership)}};
  const FractalParams prm{cfg.p, cfg.depth, FractalRule::Example1, {}, {}};
  const RectDomain dom = geometry::build_fractal_domain(prm);
  const analysis::ScalarField abs_u = [&](Point y) { return std::abs(cfg.u(y)); };

  // (a) density floor
  const double floor = 1.0 / (32.0 * std::numbers::pi);
  double smallest = std::numeric_limits<double>::infinity();
  std::string worst;
  std::string csv = "x,y,r,value,err\n";
  for (Point x : cfg.points) {
    const auto s = analysis::average_series(dom, abs_u, x, cfg.radii, cfg.tol);
    for (const auto& e : s.entries) {
      csv += io::format_double(x.x) + "," + io::format_double(x.y) + "," + io::format_double(e.r) +
             "," + io::format_double(e.value) + "," + io::format_double(e.err) + "\n";
      if (e.value < smallest) {
        smallest = e.value;
        worst = point_label(x) + " r=" + io::format_double(e.r);
      }
    }
  }
  rep.series.push_back({"averages", csv});
  rep.add_scalar("smallest_average", smallest, cfg.tol);
  rep.add_clause("density_floor", smallest >= floor - cfg.tol,
                 "smallest average " + io::format_double(smallest) + " at " + worst +
                     ", floor 1/(32 pi) = " + io::format_double(floor));

  // (b) approximant energies
  std::string ecsv = "j,energy,ratio\n";
  bool ratios_ok = cfg.depth - 2 > cfg.energy_from;
  double prev = 0.0;
  for (int j = cfg.energy_from; j <= cfg.depth - 1; ++j) {
    const double e = approximant_gradient_energy(dom, j, cfg.p);
    const double ratio = j > cfg.energy_from ? e / prev : std::nan("");
    ecsv += std::to_string(j) + "," + io::format_double(e) + "," + io::format_double(ratio) + "\n";
    if (j > cfg.energy_from) {
      rep.add_scalar("energy_ratio@j=" + std::to_string(j - 1), ratio, 0.0);
      if (!(ratio >= 0.3 && ratio <= 0.7)) ratios_ok = false;
    }
    prev = e;
  }
  rep.series.push_back({"energies", ecsv});
  rep.add_clause("energy_decay", ratios_ok, "value(j+1)/value(j) in [0.3, 0.7] for j = " +
                                               std::to_string(cfg.energy_from) + ".." +
                                               std::to_string(cfg.depth - 2));

  // (c) membership distances decrease
  if (cfg.membership.enabled) {
    const FractalParams mprm{cfg.p, cfg.membership.depth, FractalRule::Example1, {}, {}};
    const auto sweep = run_sweep(mprm, cfg.membership, cfg.u);
    add_sweep(rep, sweep, cfg.membership.tol);
    bool decreasing = sweep.size() >= 2;
    bool converged = true;
    for (std::size_t k = 0; k < sweep.size(); ++k) {
      converged = converged && sweep[k].converged;
      if (k > 0 && !(sweep[k].distance < sweep[k - 1].distance)) decreasing = false;
    }
    const double ratio = sweep.empty() || sweep.front().distance == 0.0
                             ? std::nan("")
                             : sweep.back().distance / sweep.front().distance;
    rep.add_scalar("membership_final_over_initial", ratio, cfg.membership.tol);
    rep.add_clause("membership_decreasing", decreasing && converged,
                   "final/initial = " + io::format_double(ratio) +
                       (converged ? "" : ", some solves did not converge"));
  }
  return rep;
}

ExperimentReport verify_example2(const Example2Config& cfg) {
  if (!(cfg.p > 4.0)) throw ParameterError("verify_example2: needs p > 4");
  ExperimentReport rep;
  rep.name = "example2";
  rep.parameters = {{"p", cfg.p},         {"depth", cfg.depth},
                    {"radii", cfg.radii}, {"points", points_json(cfg.points)},
                    {"tol", cfg.tol},     {"slope_min", cfg.slope_min},
                    {"floor_factor", cfg.floor_factor},
                    {"membership", settings_json(cfg.membership)}};
  const FractalParams prm{cfg.p, cfg.depth, FractalRule::Example2, {}, {}};
  const RectDomain dom = geometry::build_fractal_domain(prm);
  const analysis::ScalarField one = [](Point) { return 1.0; };

  // (a) averages decay like r
  double worst_slope = std::numeric_limits<double>::infinity();
  std::string worst;
  std::string csv = "x,y,r,value,err\n";
  for (Point x : cfg.points) {
    // averages scale like r, so the quadrature tolerance does too
    analysis::AverageSeries s{x, {}};
    for (double r : cfg.radii) {
      const auto e = analysis::interior_average(dom, one, x, r, cfg.tol * r);
      s.entries.push_back({r, e.value, e.err});
    }
    s.validate();
    for (const auto& e : s.entries) {
      csv += io::format_double(x.x) + "," + io::format_double(x.y) + "," + io::format_double(e.r) +
             "," + io::format_double(e.value) + "," + io::format_double(e.err) + "\n";
    }
    const auto v = analysis::trace_verdict(s, cfg.tol, cfg.slope_min);
    rep.add_scalar("slope@" + point_label(x), v.slope, 0.0);
    if (v.slope < worst_slope) {
      worst_slope = v.slope;
      worst = point_label(x);
    }
  }
  rep.series.push_back({"averages", csv});
  rep.add_clause("average_decay", worst_slope >= cfg.slope_min,
                 "smallest slope " + io::format_double(worst_slope) + " at " + worst);

  // (b) membership floor
  if (cfg.membership.enabled) {
    const FractalParams mprm{cfg.p, cfg.membership.depth, FractalRule::Example2, {}, {}};
    const auto sweep = run_sweep(mprm, cfg.membership, one);
    add_sweep(rep, sweep, cfg.membership.tol);
    bool converged = !sweep.empty();
    for (const auto& r : sweep) converged = converged && r.converged;
    const double ratio = sweep.empty() || sweep.front().distance == 0.0
                             ? std::nan("")
                             : sweep.back().distance / sweep.front().distance;
    rep.add_scalar("membership_final_over_initial", ratio, cfg.membership.tol);
    rep.add_clause("membership_floor", converged && ratio >= cfg.floor_factor,
                   "final/initial = " + io::format_double(ratio) +
                       (converged ? "" : ", some solves did not converge"));
  }
  return rep;
}

SlicedRectangle sliced_rectangle() {
  RectDomain dom({Rect::from_corners(-2, -4, 0, 4), Rect::from_corners(0, -4, 2, 4),
                  Rect::from_corners(-2, -4, 2, -2), Rect::from_corners(-2, 2, 2, 4)});
  BoundarySet d({geometry::Segment{{0, -2}, {0, 2}}});
  analysis::ScalarField v = [](Point y) {
    const double t = std::abs(y.y);
    const double phi = t <= 1.0 ? 1.0 : (t >= 2.0 ? 0.0 : 2.0 - t);
    const double sign = y.x > 0 ? 1.0 : (y.x < 0 ? -1.0 : 0.0);
    return sign * phi;
  };
  return {std::move(dom), std::move(d), std::move(v)};
}

ExperimentReport verify_sliced_rectangle(const SlicedConfig& cfg) {
  ExperimentReport rep;
  rep.name = "sliced_rectangle";
  rep.parameters = {{"p", cfg.p},
                    {"radii", cfg.radii},
                    {"points", points_json(cfg.points)},
                    {"tol", cfg.tol},
                    {"grid_h", cfg.grid_h},
                    {"capacity_hs", cfg.capacity_hs},
                    {"cloud_half_count", cfg.cloud_half_count},
                    {"capacity_floor", cfg.capacity_floor},
                    {"capacity_spread", cfg.capacity_spread}};
  const SlicedRectangle sr = sliced_rectangle();
  const GridFunction vg = GridFunction::sample(GridSpec::covering(sr.dom.bbox(), cfg.grid_h), sr.dom, sr.v);
  const analysis::ScalarField abs_v = [&](Point y) { return std::abs(sr.v(y)); };

  double worst_signed = 0.0, worst_unsigned = 0.0;
  std::string csv = "x,y,r,signed,unsigned,unsigned_err\n";
  for (Point x : cfg.points) {
    for (double r : cfg.radii) {
      const double s = analysis::full_ball_average(vg, x, r, true).value;
      const auto u = analysis::interior_average(sr.dom, abs_v, x, r, cfg.tol);
      csv += io::format_double(x.x) + "," + io::format_double(x.y) + "," + io::format_double(r) + "," +
             io::format_double(s) + "," + io::format_double(u.value) + "," + io::format_double(u.err) + "\n";
      worst_signed = std::max(worst_signed, std::abs(s));
      worst_unsigned = std::max(worst_unsigned, std::abs(u.value - 1.0));
    }
  }
  rep.series.push_back({"averages", csv});
  rep.add_scalar("max_abs_signed_average", worst_signed, cfg.tol);
  rep.add_scalar("max_unsigned_deviation", worst_unsigned, cfg.tol);
  rep.add_clause("signed_averages_vanish", worst_signed <= cfg.tol,
                 "max |signed average| = " + io::format_double(worst_signed));
  rep.add_clause("unsigned_averages_one", worst_unsigned <= cfg.tol,
                 "max |unsigned average - 1| = " + io::format_double(worst_unsigned));

  const auto est = capacity::capacity_of_segment_refinement_study(cfg.p, cfg.capacity_hs,
                                                                   cfg.cloud_half_count, cfg.tol);
  std::string ccsv = "h,value,lower_bound,residual,iterations\n";
  bool positive = !est.empty(), stable = true;
  for (std::size_t k = 0; k < est.size(); ++k) {
    ccsv += io::format_double(cfg.capacity_hs[k]) + "," + io::format_double(est[k].value) + "," +
            io::format_double(est[k].lower_bound) + "," + io::format_double(est[k].residual) + "," +
            std::to_string(est[k].iterations) + "\n";
    rep.add_scalar("capacity@h=" + io::format_double(cfg.capacity_hs[k]), est[k].value,
                   cfg.tol * est[k].value);
    positive = positive && est[k].value >= cfg.capacity_floor;
    stable = stable && std::abs(est[k].value - est[0].value) <= cfg.capacity_spread * est[0].value;
  }
  rep.series.push_back({"capacity", ccsv});
  rep.add_clause("capacity_positive_and_stable", positive && stable,
                 std::string(positive ? "" : "below floor; ") + (stable ? "stable" : "unstable") +
                     " across grids");
  return rep;
}

std::string sweep_verdict(std::span<const membership::DistanceReport> sweep, double vanish_factor,
                          double floor_factor) {
  if (sweep.empty()) throw ParameterError("sweep_verdict: empty sweep");
  const double first = sweep.front().distance, last = sweep.back().distance;
  if (first <= 1e-12) return last <= 1e-12 ? "zero" : "inconclusive";
  if (last <= vanish_factor * first) return "vanishing";
  if (last >= floor_factor * first) return "floored";
  return "inconclusive";
}

ExperimentReport truncation_check(const GridFunction& u, const RectDomain& dom, const BoundarySet& d,
                                  double p, const TruncationConfig& cfg) {
  if (cfg.deltas.empty()) throw ParameterError("truncation_check: no gaps");
  ExperimentReport rep;
  rep.name = "truncation";
  rep.parameters = {{"p", p},
                    {"h", u.grid.h},
                    {"deltas", cfg.deltas},
                    {"tol", cfg.tol},
                    {"vanish_factor", cfg.vanish_factor},
                    {"floor_factor", cfg.floor_factor}};
  membership::MembershipProblem prob{dom, d, u, p, cfg.deltas.front(), cfg.tol, cfg.iteration_cap};
  const auto su = membership::membership_sweep(prob, cfg.deltas);
  prob.u = u.abs();
  const auto sa = membership::membership_sweep(prob, cfg.deltas);
  rep.series.push_back({"u", io::sweep_csv(su)});
  rep.series.push_back({"abs_u", io::sweep_csv(sa)});
  const std::string vu = sweep_verdict(su, cfg.vanish_factor, cfg.floor_factor);
  const std::string va = sweep_verdict(sa, cfg.vanish_factor, cfg.floor_factor);
  rep.parameters["verdict_u"] = vu;
  rep.parameters["verdict_abs_u"] = va;
  rep.add_scalar("final_distance_u", su.back().distance, cfg.tol);
  rep.add_scalar("final_distance_abs_u", sa.back().distance, cfg.tol);
  rep.add_clause("same_verdict", vu == va && vu != "inconclusive", "u: " + vu + ", |u|: " + va);
  return rep;
}

std::vector<analysis::HardyResult> hardy_partial_sums(const FractalParams& base, int from, int to,
                                                      const analysis::HardyOptions& opt) {
  if (from < 0 || to < from) throw ParameterError("hardy_partial_sums: need 0 <= from <= to");
  std::vector<analysis::HardyResult> out;
  const BoundarySet d = geometry::fractal_dirichlet_part();
  const analysis::ScalarField one = [](Point) { return 1.0; };
  for (int j = from; j <= to; ++j) {
    FractalParams prm = base;
    prm.depth = j;
    out.push_back(analysis::hardy_functional(geometry::build_fractal_domain(prm), d, one, base.p, opt));
  }
  return out;
}

}  // namespace tracelab::experiments

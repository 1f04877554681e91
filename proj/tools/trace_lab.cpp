// trace_lab: command-line front end for the trace-condition experiments.

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tracelab/analysis.hpp"
#include "tracelab/capacity.hpp"
#include "tracelab/errors.hpp"
#include "tracelab/experiments.hpp"
#include "tracelab/geometry.hpp"
#include "tracelab/io.hpp"
#include "tracelab/membership.hpp"
#include "tracelab/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tracelab;
using geometry::BoundarySet;
using geometry::FractalParams;
using geometry::FractalRule;
using geometry::RectDomain;

namespace {

struct Globals {
  std::string config;
  std::string out = "out";
  int threads = 0;
  std::optional<double> tol;
};

// Value from the command line, else from the config file, else the default.
class Params {
 public:
  explicit Params(json cfg) : cfg_(std::move(cfg)) {}

  template <class T>
  T get(const std::string& key, const std::optional<T>& cli, T fallback) const {
    if (cli) return *cli;
    if (cfg_.contains(key)) {
      try {
        return cfg_.at(key).get<T>();
      } catch (const json::exception& e) {
        throw ParameterError("config key '" + key + "': " + e.what());
      }
    }
    return fallback;
  }

 private:
  json cfg_;
};

json load_config(const std::string& path, const std::string& section) {
  if (path.empty()) return json::object();
  const std::string text = io::read_text(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) line += text[i] == '\n';
    throw ParseError("config file: " + std::string(e.what()), line);
  }
  if (!j.is_object()) throw ParseError("config file: top level must be an object", 1);
  // a section named after the subcommand overrides top-level keys; other
  // sections are dropped
  json merged = json::object();
  for (const auto& [key, value] : j.items()) {
    if (!value.is_object()) merged[key] = value;
  }
  if (j.contains(section) && j[section].is_object()) merged.update(j[section]);
  return merged;
}

FractalRule parse_rule(const std::string& s) {
  if (s == "ex1") return FractalRule::Example1;
  if (s == "ex2") return FractalRule::Example2;
  throw ParameterError("unknown fractal rule '" + s + "' (ex1 or ex2)");
}

struct Setting {
  RectDomain dom;
  BoundarySet dirichlet;
};

// Domain from a file, the sliced rectangle, or a fractal rule.
Setting load_setting(const std::string& domain_file, const std::string& rule, int depth, double p) {
  if (!domain_file.empty()) {
    auto f = io::read_domain(domain_file);
    return {std::move(f.dom), std::move(f.dirichlet)};
  }
  if (rule == "slice") {
    auto sr = experiments::sliced_rectangle();
    return {std::move(sr.dom), std::move(sr.dirichlet)};
  }
  FractalParams prm{p, depth, parse_rule(rule), {}, {}};
  return {geometry::build_fractal_domain(prm), geometry::fractal_dirichlet_part()};
}

// "one", "zero", "slice", "abs-slice" or "approximant:J".
analysis::ScalarField parse_function(const std::string& spec) {
  if (spec == "one") return [](Point) { return 1.0; };
  if (spec == "zero") return [](Point) { return 0.0; };
  if (spec == "slice") return experiments::sliced_rectangle().v;
  if (spec == "abs-slice") {
    auto v = experiments::sliced_rectangle().v;
    return [v](Point y) { return std::abs(v(y)); };
  }
  const std::string prefix = "approximant:";
  if (spec.rfind(prefix, 0) == 0) {
    const int j = std::stoi(spec.substr(prefix.size()));
    if (j < 0) throw ParameterError("approximant level must be >= 0");
    return [j](Point y) { return experiments::example1_approximant(j, y); };
  }
  throw ParameterError("unknown function '" + spec + "'");
}

Point parse_point(const std::vector<double>& v) {
  if (v.size() != 2) throw ParameterError("a point needs two coordinates");
  return {v[0], v[1]};
}

void write_json(const fs::path& path, const json& j) { io::write_text(path, j.dump(2) + "\n"); }

void write_meta(const fs::path& dir, const std::string& name, double seconds) {
  const std::time_t now = std::time(nullptr);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  write_json(dir / (name + ".meta.json"),
             json{{"timestamp", stamp}, {"elapsed_seconds", seconds}, {"threads", parallel::threads()}});
}

std::vector<double> decreasing(std::vector<double> r, const char* what) {
  if (r.empty()) throw ParameterError(std::string(what) + " must not be empty");
  for (std::size_t k = 1; k < r.size(); ++k) {
    if (!(r[k] < r[k - 1])) throw ParameterError(std::string(what) + " must be strictly decreasing");
  }
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for trace conditions on rectilinear planar domains"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON config; keys match option names")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "output directory");
  app.add_option("--threads", g.threads, "worker threads (0: runtime default)");
  app.add_option("--tol", g.tol, "tolerance");

  // common per-command options
  struct Common {
    std::optional<std::string> domain, rule, function;
    std::optional<int> depth;
    std::optional<double> p;
  };
  auto add_common = [](CLI::App* sub, Common& c) {
    sub->add_option("--domain", c.domain, "domain JSON file");
    sub->add_option("--rule", c.rule, "ex1, ex2 or slice when no domain file is given");
    sub->add_option("--depth", c.depth, "fractal depth");
    sub->add_option("--p", c.p, "exponent");
    sub->add_option("--function", c.function, "one, zero, slice, abs-slice or approximant:J");
  };

  // fractal
  auto* fractal = app.add_subcommand("fractal", "write a fractal domain file");
  Common fc;
  std::optional<std::string> fractal_file;
  add_common(fractal, fc);
  fractal->add_option("--file", fractal_file, "output file name inside --out");

  // trace
  auto* trace = app.add_subcommand("trace", "ball averages and trace verdict at a point");
  Common tc;
  std::optional<std::vector<double>> trace_x, trace_radii;
  std::optional<double> slope_min, value_tol;
  add_common(trace, tc);
  trace->add_option("--x", trace_x, "boundary point x y")->expected(2);
  trace->add_option("--radii", trace_radii, "decreasing radii");
  trace->add_option("--slope-min", slope_min, "slope threshold of the verdict");
  trace->add_option("--value-tol", value_tol, "value threshold of the verdict");

  // hardy
  auto* hardy = app.add_subcommand("hardy", "Hardy functional, or partial sums over fractal depths");
  Common hc;
  std::optional<int> level_from, level_to;
  std::optional<double> ceiling;
  add_common(hardy, hc);
  hardy->add_option("--from", level_from, "first depth of a partial-sum study");
  hardy->add_option("--to", level_to, "last depth of a partial-sum study");
  hardy->add_option("--ceiling", ceiling, "divergence ceiling");

  // capacity
  auto* cap = app.add_subcommand("capacity", "discrete Bessel capacity of a point set");
  std::optional<double> cap_p, cap_h, cap_margin;
  std::optional<int> cap_cloud;
  std::optional<std::string> cap_points;
  bool kernel_table = false;
  cap->add_option("--p", cap_p, "exponent");
  cap->add_option("--spacing", cap_h, "grid spacing h");
  cap->add_option("--margin", cap_margin, "grid margin around E (>= 1)");
  cap->add_option("--cloud", cap_cloud, "segment cloud with 2n+1 points on {0} x [-1, 1]");
  cap->add_option("--points", cap_points, "JSON file with an array of [x, y] points");
  cap->add_flag("--kernel-table", kernel_table, "also write the kernel table CSV");

  // membership
  auto* mem = app.add_subcommand("membership", "distance to functions vanishing near D");
  Common mc;
  std::optional<int> grid_level, iteration_cap;
  std::optional<std::vector<double>> deltas;
  add_common(mem, mc);
  mem->add_option("--grid-level", grid_level, "grid spacing 2^-level");
  mem->add_option("--deltas", deltas, "decreasing support gaps");
  mem->add_option("--iteration-cap", iteration_cap, "Newton iteration cap");

  // reproduce
  auto* rep = app.add_subcommand("reproduce", "run a canned experiment and check its clauses");
  std::string which;
  rep->add_option("which", which, "ex1, ex2 or slice")->required()->check(CLI::IsMember({"ex1", "ex2", "slice"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  parallel::set_threads(g.threads);
  const fs::path out = g.out;
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const std::string name = app.get_subcommands().front()->get_name();

  try {
    const Params cfg(load_config(g.config, name));
    const std::optional<double> cli_tol = g.tol;

    if (fractal->parsed()) {
      const std::string rule = cfg.get<std::string>("rule", fc.rule, "ex1");
      FractalParams prm{cfg.get("p", fc.p, 2.0), cfg.get("depth", fc.depth, 2), parse_rule(rule), {}, {}};
      const RectDomain dom = geometry::build_fractal_domain(prm);
      const std::string file =
          cfg.get<std::string>("file", fractal_file, "fractal_" + rule + "_J" + std::to_string(prm.depth) + ".json");
      io::write_domain(out / file, dom, geometry::fractal_dirichlet_part());
      write_meta(out, "fractal", elapsed());
      std::cout << "wrote " << (out / file).string() << " (" << dom.size() << " rects)\n";
      return 0;
    }

    if (trace->parsed()) {
      const double p = cfg.get("p", tc.p, 2.0);
      const Setting s = load_setting(cfg.get<std::string>("domain", tc.domain, ""),
                                     cfg.get<std::string>("rule", tc.rule, "ex1"), cfg.get("depth", tc.depth, 12), p);
      const auto u = parse_function(cfg.get<std::string>("function", tc.function, "one"));
      const Point x = parse_point(cfg.get("x", trace_x, std::vector<double>{0.5, 0.0}));
      const auto radii = decreasing(cfg.get("radii", trace_radii, experiments::dyadic_radii(3, 8)), "radii");
      const double tol = cfg.get("tol", cli_tol, 1e-3);
      const auto series = analysis::average_series(s.dom, u, x, radii, tol);
      const auto verdict = analysis::trace_verdict(series, cfg.get("value_tol", value_tol, tol),
                                                   cfg.get("slope_min", slope_min, 0.9));
      io::write_text(out / "trace_series.csv", io::series_csv(series));
      json j = io::to_json(verdict);
      j["x"] = {x.x, x.y};
      write_json(out / "trace_verdict.json", j);
      write_meta(out, "trace", elapsed());
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (hardy->parsed()) {
      const double p = cfg.get("p", hc.p, 2.0);
      analysis::HardyOptions opt;
      opt.tol = cfg.get("tol", cli_tol, 1e-3);
      opt.ceiling = cfg.get("ceiling", ceiling, std::numeric_limits<double>::infinity());
      const std::string rule = cfg.get<std::string>("rule", hc.rule, "ex1");
      json j;
      if (level_from || level_to || cfg.get<int>("from", std::nullopt, -1) >= 0) {
        const int from = cfg.get("from", level_from, 4), to = cfg.get("to", level_to, 9);
        const auto sums = experiments::hardy_partial_sums(FractalParams{p, 0, parse_rule(rule), {}, {}}, from, to, opt);
        json levels = json::array();
        for (std::size_t k = 0; k < sums.size(); ++k) {
          json e = io::to_json(sums[k]);
          e["depth"] = from + static_cast<int>(k);
          if (k > 0) e["growth"] = sums[k].value / sums[k - 1].value;
          levels.push_back(e);
        }
        j = {{"p", p}, {"rule", rule}, {"levels", levels}};
      } else {
        const Setting s = load_setting(cfg.get<std::string>("domain", hc.domain, ""), rule,
                                       cfg.get("depth", hc.depth, 6), p);
        const auto u = parse_function(cfg.get<std::string>("function", hc.function, "one"));
        j = io::to_json(analysis::hardy_functional(s.dom, s.dirichlet, u, p, opt));
        j["p"] = p;
      }
      write_json(out / "hardy.json", j);
      write_meta(out, "hardy", elapsed());
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (cap->parsed()) {
      const double p = cfg.get("p", cap_p, 2.0);
      std::vector<Point> pts;
      const std::string points_file = cfg.get<std::string>("points", cap_points, "");
      if (!points_file.empty()) {
        const json pj = json::parse(io::read_text(points_file));
        for (const auto& e : pj) pts.push_back({e.at(0).get<double>(), e.at(1).get<double>()});
      } else {
        pts = capacity::segment_cloud(cfg.get("cloud", cap_cloud, 16));
      }
      const auto prob = capacity::CapacityProblem::around(pts, cfg.get("spacing", cap_h, 1.0 / 16), p,
                                                          cfg.get("margin", cap_margin, 4.0),
                                                          cfg.get("tol", cli_tol, 1e-3));
      const auto est = capacity::estimate_capacity(prob);
      json j = io::to_json(est);
      j["p"] = p;
      j["h"] = prob.grid.h;
      j["points"] = pts.size();
      write_json(out / "capacity.json", j);
      if (kernel_table) {
        std::ostringstream os;
        capacity::BesselKernelTable::standard().write_csv(os);
        io::write_text(out / "kernel_table.csv", os.str());
      }
      write_meta(out, "capacity", elapsed());
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (mem->parsed()) {
      const double p = cfg.get("p", mc.p, 2.0);
      const Setting s = load_setting(cfg.get<std::string>("domain", mc.domain, ""),
                                     cfg.get<std::string>("rule", mc.rule, "ex1"), cfg.get("depth", mc.depth, 10), p);
      const auto u = parse_function(cfg.get<std::string>("function", mc.function, "one"));
      const double h = std::ldexp(1.0, -cfg.get("grid_level", grid_level, 8));
      const auto ds = decreasing(cfg.get("deltas", deltas, experiments::dyadic_radii(3, 6)), "deltas");
      if (h > 0.25 * ds.back()) throw ParameterError("grid spacing must be <= delta/4 for every delta");
      membership::MembershipProblem prob{s.dom, s.dirichlet,
                                         GridFunction::sample(GridSpec::covering(s.dom.bbox(), h), s.dom, u),
                                         p, ds.front(), cfg.get("tol", cli_tol, 1e-6),
                                         cfg.get("iteration_cap", iteration_cap, 60)};
      const auto sweep = membership::membership_sweep(prob, ds);
      io::write_text(out / "membership.csv", io::sweep_csv(sweep));
      json arr = json::array();
      for (const auto& r : sweep) arr.push_back(io::to_json(r));
      const json j{{"p", p}, {"h", h}, {"sweep", arr}};
      write_json(out / "membership.json", j);
      write_meta(out, "membership", elapsed());
      std::cout << j.dump(2) << "\n";
      return 0;
    }

    if (rep->parsed()) {
      experiments::ExperimentReport report;
      if (which == "ex1") {
        experiments::Example1Config c;
        c.p = cfg.get("p", std::optional<double>{}, c.p);
        c.depth = cfg.get("depth", std::optional<int>{}, c.depth);
        c.radii = decreasing(cfg.get("radii", std::optional<std::vector<double>>{}, c.radii), "radii");
        c.tol = cfg.get("tol", cli_tol, c.tol);
        c.membership.enabled = cfg.get("membership", std::optional<bool>{}, true);
        c.membership.grid_level = cfg.get("grid_level", std::optional<int>{}, c.membership.grid_level);
        c.membership.depth = cfg.get("membership_depth", std::optional<int>{}, c.membership.depth);
        c.membership.deltas = decreasing(cfg.get("deltas", std::optional<std::vector<double>>{}, c.membership.deltas), "deltas");
        report = experiments::verify_example1(c);
      } else if (which == "ex2") {
        experiments::Example2Config c;
        c.p = cfg.get("p", std::optional<double>{}, c.p);
        c.depth = cfg.get("depth", std::optional<int>{}, c.depth);
        c.radii = decreasing(cfg.get("radii", std::optional<std::vector<double>>{}, c.radii), "radii");
        c.tol = cfg.get("tol", cli_tol, c.tol);
        c.membership.enabled = cfg.get("membership", std::optional<bool>{}, true);
        c.membership.grid_level = cfg.get("grid_level", std::optional<int>{}, c.membership.grid_level);
        c.membership.depth = cfg.get("membership_depth", std::optional<int>{}, c.membership.depth);
        c.membership.deltas = decreasing(cfg.get("deltas", std::optional<std::vector<double>>{}, c.membership.deltas), "deltas");
        report = experiments::verify_example2(c);
      } else {
        experiments::SlicedConfig c;
        c.p = cfg.get("p", std::optional<double>{}, c.p);
        c.tol = cfg.get("tol", cli_tol, c.tol);
        c.radii = decreasing(cfg.get("radii", std::optional<std::vector<double>>{}, c.radii), "radii");
        c.capacity_hs = cfg.get("capacity_hs", std::optional<std::vector<double>>{}, c.capacity_hs);
        report = experiments::verify_sliced_rectangle(c);
      }
      report.write(out);
      write_meta(out, report.name, elapsed());
      for (const auto& c : report.clauses) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
      }
      return report.passed() ? 0 : 1;
    }
  } catch (const ParseError& e) {
    std::cerr << "error (line " << e.line() << "): " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << " best value " << e.best_value() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

#include "tracelab/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "tracelab/errors.hpp"
#include "tracelab/parallel.hpp"
#include "tracelab/quadrature.hpp"
#include "tracelab/sobolev.hpp"

namespace tracelab::analysis {

namespace {

void check_ball(double r, double tol) {
  if (!(r > 0.0) || !std::isfinite(r)) throw ParameterError("radius must be positive");
  if (!(tol > 0.0)) throw ParameterError("tolerance must be positive");
}

void check_radii(std::span<const double> radii) {
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(radii[k] > 0.0)) throw ParameterError("radii must be positive");
    if (k > 0 && !(radii[k] < radii[k - 1])) {
      throw ParameterError("radii must be strictly decreasing");
    }
  }
}

// Gauss-Legendre nodes and weights on [-1, 1].
constexpr std::array<double, 3> kG3x = {-0.7745966692414834, 0.0, 0.7745966692414834};
constexpr std::array<double, 3> kG3w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
constexpr std::array<double, 5> kG5x = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                        0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kG5w = {0.2369268850561891, 0.4786286704993665,
                                        0.5688888888888889, 0.4786286704993665,
                                        0.2369268850561891};

struct Leaf {
  Rect box;
  double est = 0.0;
  double err = 0.0;
  double err_x = 0.0;  // part of err attributed to variation along x
  double err_y = 0.0;
  double lower = 0.0;
};

class HardyIntegrator {
 public:
  HardyIntegrator(const geometry::RectDomain& dom, const geometry::BoundarySet& d,
                  const ScalarField& u, double p)
      : dom_(dom), d_(d), u_(u), pw_(p) {}

  // Returns false when Ω does not meet the box.
  bool evaluate(const Rect& box, Leaf& leaf) const {
    leaf = Leaf{box};
    std::vector<Rect> pieces;
    if (!quadrature::disjoint_pieces(dom_, box, pieces)) {
      leaf.err = leaf.err_x = leaf.err_y = std::numeric_limits<double>::infinity();
      return true;
    }
    if (pieces.empty()) return false;
    for (const Rect& piece : pieces) add_piece(piece, leaf);
    leaf.err = leaf.err_x + leaf.err_y;
    return true;
  }

 private:
  double integrand(Point y, double& umin) const {
    const double uv = std::abs(u_(y));
    umin = std::min(umin, uv);
    if (uv == 0.0) return 0.0;
    const double dist = d_.distance(y);
    return dist > 0.0 ? pw_(uv / dist) : std::numeric_limits<double>::infinity();
  }

  template <std::size_t NX, std::size_t NY>
  double gauss(const Rect& r, const std::array<double, NX>& xs, const std::array<double, NX>& wx,
               const std::array<double, NY>& ys, const std::array<double, NY>& wy,
               double& umin) const {
    const Point c = r.center();
    const double hx = 0.5 * r.size.x, hy = 0.5 * r.size.y;
    double sum = 0.0;
    for (std::size_t i = 0; i < NX; ++i)
      for (std::size_t j = 0; j < NY; ++j)
        sum += wx[i] * wy[j] * integrand({c.x + hx * xs[i], c.y + hy * ys[j]}, umin);
    return sum * hx * hy;
  }

  void add_piece(const Rect& piece, Leaf& leaf) const {
    double umin = std::numeric_limits<double>::infinity();
    const double fine = gauss(piece, kG5x, kG5w, kG5x, kG5w, umin);
    // Dropping the order in one direction at a time attributes the error.
    const double coarse_x = gauss(piece, kG3x, kG3w, kG5x, kG5w, umin);
    const double coarse_y = gauss(piece, kG5x, kG5w, kG3x, kG3w, umin);
    leaf.est += fine;
    if (std::isfinite(fine)) {
      leaf.err_x += std::abs(fine - coarse_x);
      leaf.err_y += std::abs(fine - coarse_y);
    } else {
      leaf.err_x = leaf.err_y = fine;
    }
    const double dmax = d_.max_distance(piece);
    if (dmax > 0.0 && umin > 0.0) leaf.lower += piece.area() * pw_(umin / dmax);
  }

  const geometry::RectDomain& dom_;
  const geometry::BoundarySet& d_;
  const ScalarField& u_;
  sobolev::Power pw_;
};

// Halves the box across the directions that carry the error.
std::vector<Rect> split_box(const Leaf& l) {
  const Rect& b = l.box;
  const bool along_x = !(l.err_y > 4.0 * l.err_x);
  const bool along_y = !(l.err_x > 4.0 * l.err_y);
  const int nx = along_x ? 2 : 1, ny = along_y ? 2 : 1;
  const double sx = b.size.x / nx, sy = b.size.y / ny;
  std::vector<Rect> out;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) out.push_back(Rect{{b.lo.x + i * sx, b.lo.y + j * sy}, {sx, sy}});
  return out;
}

HardyResult integrate_hardy(const HardyIntegrator& integ, const std::vector<Rect>& roots,
                            const HardyOptions& opt) {
  if (!(opt.tol > 0.0)) throw ParameterError("tolerance must be positive");
  std::vector<Leaf> leaves;
  {
    std::vector<Leaf> eval(roots.size());
    std::vector<std::uint8_t> keep(roots.size(), 0);
    parallel::for_each_index(roots.size(),
                             [&](std::size_t i) { keep[i] = integ.evaluate(roots[i], eval[i]); });
    for (std::size_t i = 0; i < roots.size(); ++i) {
      if (keep[i]) leaves.push_back(eval[i]);
    }
  }
  HardyResult res;
  res.cells = roots.size();
  while (true) {
    double value = 0.0, err = 0.0, lower = 0.0;
    for (const Leaf& l : leaves) {
      value += l.est;
      err += l.err;
      lower += l.lower;
    }
    res.value = value;
    res.err = err;
    res.lower_bound = lower;
    if (lower > opt.ceiling) {
      res.diverging = true;
      return res;
    }
    if (std::isfinite(value) && (err <= opt.tol * value || (err == 0.0 && value == 0.0))) {
      return res;
    }

    const double threshold = std::isfinite(value)
                                 ? 0.5 * opt.tol * value / static_cast<double>(leaves.size())
                                 : 0.0;
    std::vector<Rect> children;
    std::vector<Leaf> next;
    for (const Leaf& l : leaves) {
      if (l.err > threshold) {
        for (const Rect& c : split_box(l)) children.push_back(c);
      } else {
        next.push_back(l);
      }
    }
    if (res.cells + children.size() > opt.cell_budget) {
      throw PrecisionError("hardy quadrature exceeded its cell budget",
                           value > 0.0 ? err / value : err);
    }
    std::vector<Leaf> eval(children.size());
    std::vector<std::uint8_t> keep(children.size(), 0);
    parallel::for_each_index(children.size(),
                             [&](std::size_t k) { keep[k] = integ.evaluate(children[k], eval[k]); });
    res.cells += children.size();
    for (std::size_t k = 0; k < children.size(); ++k) {
      if (keep[k]) next.push_back(eval[k]);
    }
    leaves = std::move(next);
  }
}

}  // namespace

void AverageSeries::validate() const {
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const AverageEntry& e = entries[k];
    if (!(e.r > 0.0)) throw ParameterError("series radii must be positive");
    if (k > 0 && !(e.r < entries[k - 1].r)) {
      throw ParameterError("series radii must be strictly decreasing");
    }
    if (!(e.value >= 0.0) || !(e.err >= 0.0)) {
      throw ParameterError("series values and errors must be nonnegative");
    }
  }
}

Estimate interior_average(const geometry::RectDomain& dom, const ScalarField& u, Point x,
                          double r, double tol, std::size_t cell_budget) {
  check_ball(r, tol);
  const double ball = std::numbers::pi * r * r;
  const quadrature::ScalarField absu = [&](Point y) { return std::abs(u(y)); };
  const auto q = quadrature::integrate_over_ball(dom, x, r, &absu, tol * ball, cell_budget);
  return {q.value / ball, q.err / ball};
}

Estimate interior_average(const geometry::RectDomain& dom, const GridFunction& u, Point x,
                          double r, double tol, std::size_t cell_budget) {
  check_ball(r, tol);
  u.validate();
  const GridSpec& g = u.grid;
  const double ball = std::numbers::pi * r * r;
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (u.values[i] == 0.0) continue;
    const Rect c = g.cell(i % g.nx, i / g.nx);
    if (quadrature::min_distance(c, x) < r) cells.push_back(i);
  }
  double weight = 0.0;
  for (std::size_t i : cells) weight += std::abs(u.values[i]);
  if (cells.empty()) return {};
  // Each cell gets an equal share of the area error, scaled by its |value|.
  const double area_tol = tol * ball / weight;
  std::vector<Estimate> part(cells.size());
  parallel::for_each_index(cells.size(), [&](std::size_t k) {
    const std::size_t i = cells[k];
    const Rect c = g.cell(i % g.nx, i / g.nx);
    const auto q = quadrature::integrate_over_ball(dom, x, r, nullptr, area_tol, cell_budget, &c);
    const double v = std::abs(u.values[i]);
    part[k] = {v * q.value, v * q.err};
  });
  Estimate out;
  for (const Estimate& e : part) {
    out.value += e.value;
    out.err += e.err;
  }
  out.value /= ball;
  out.err /= ball;
  return out;
}

Estimate full_ball_average(const GridFunction& v, Point x, double r, bool signed_average) {
  if (!(r > 0.0) || !std::isfinite(r)) throw ParameterError("radius must be positive");
  v.validate();
  const GridSpec& g = v.grid;
  const Rect ext = g.extent();
  if (x.x - r < ext.x0() || x.x + r > ext.x1() || x.y - r < ext.y0() || x.y + r > ext.y1()) {
    throw CoverageError("ball leaves the grid function's coverage");
  }
  const auto ix0 = static_cast<std::size_t>(std::max(0.0, std::floor((x.x - r - ext.x0()) / g.h)));
  const auto iy0 = static_cast<std::size_t>(std::max(0.0, std::floor((x.y - r - ext.y0()) / g.h)));
  const std::size_t ix1 =
      std::min(g.nx, static_cast<std::size_t>(std::ceil((x.x + r - ext.x0()) / g.h)));
  const std::size_t iy1 =
      std::min(g.ny, static_cast<std::size_t>(std::ceil((x.y + r - ext.y0()) / g.h)));
  double sum = 0.0;
  for (std::size_t iy = iy0; iy < iy1; ++iy) {
    for (std::size_t ix = ix0; ix < ix1; ++ix) {
      const double val = v.values[g.index(ix, iy)];
      if (val == 0.0) continue;
      const double a = quadrature::disk_rect_area(g.cell(ix, iy), x, r);
      sum += (signed_average ? val : std::abs(val)) * a;
    }
  }
  return {sum / (std::numbers::pi * r * r), 0.0};
}

AverageSeries average_series(const geometry::RectDomain& dom, const ScalarField& u, Point x,
                             std::span<const double> radii, double tol) {
  check_radii(radii);
  AverageSeries s{x, {}};
  for (double r : radii) {
    const Estimate e = interior_average(dom, u, x, r, tol);
    s.entries.push_back({r, e.value, e.err});
  }
  return s;
}

AverageSeries average_series(const geometry::RectDomain& dom, const GridFunction& u, Point x,
                             std::span<const double> radii, double tol) {
  check_radii(radii);
  AverageSeries s{x, {}};
  for (double r : radii) {
    const Estimate e = interior_average(dom, u, x, r, tol);
    s.entries.push_back({r, e.value, e.err});
  }
  return s;
}

TraceVerdict trace_verdict(const AverageSeries& series, double tol_value, double slope_min) {
  series.validate();
  if (series.entries.size() < 4) throw ParameterError("a verdict needs at least 4 radii");
  TraceVerdict v;
  v.smallest_value = std::numeric_limits<double>::infinity();
  for (const AverageEntry& e : series.entries) v.smallest_value = std::min(v.smallest_value, e.value);
  if (v.smallest_value == 0.0) {
    v.slope = std::numeric_limits<double>::infinity();
    v.slope_is_sentinel = true;
    v.vanishing = true;
    return v;
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const auto n = static_cast<double>(series.entries.size());
  for (const AverageEntry& e : series.entries) {
    const double lx = std::log(e.r), ly = std::log(e.value);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  v.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  v.vanishing = v.slope >= slope_min && v.smallest_value < tol_value;
  return v;
}

HardyResult hardy_functional(const geometry::RectDomain& dom, const geometry::BoundarySet& d,
                             const ScalarField& u, double p, const HardyOptions& opt) {
  if (!(p > 1.0) || !std::isfinite(p)) throw ParameterError("exponent p must lie in (1, inf)");
  if (d.empty()) throw DomainError("hardy functional needs a nonempty boundary part");
  const HardyIntegrator integ(dom, d, u, p);
  return integrate_hardy(integ, {dom.bbox()}, opt);
}

HardyResult hardy_functional(const geometry::RectDomain& dom, const geometry::BoundarySet& d,
                             const GridFunction& u, double p, const HardyOptions& opt) {
  if (!(p > 1.0) || !std::isfinite(p)) throw ParameterError("exponent p must lie in (1, inf)");
  if (d.empty()) throw DomainError("hardy functional needs a nonempty boundary part");
  u.validate();
  std::vector<Rect> roots;
  for (std::size_t i = 0; i < u.grid.size(); ++i) {
    if (u.values[i] != 0.0) roots.push_back(u.grid.cell(i % u.grid.nx, i / u.grid.nx));
  }
  const ScalarField f = [&](Point y) { return u(y); };
  const HardyIntegrator integ(dom, d, f, p);
  return integrate_hardy(integ, roots, opt);
}

namespace {

template <class Field>
HardyRatio ratio_with(const geometry::RectDomain& dom, const geometry::BoundarySet& d,
                      const Field& u, const GridFunction& samples, double p,
                      const HardyOptions& opt) {
  if (!(p > 1.0) || !std::isfinite(p)) throw ParameterError("exponent p must lie in (1, inf)");
  samples.validate();
  const auto wt = sobolev::build_weights(dom, d, samples.grid);
  HardyRatio out;
  out.denominator = sobolev::energy(wt, samples.values, p).total();
  if (!(out.denominator > 0.0)) throw DomainError("hardy ratio undefined: u has zero norm");
  out.numerator = hardy_functional(dom, d, u, p, opt);
  out.value = out.numerator.diverging ? std::numeric_limits<double>::infinity()
                                      : out.numerator.value / out.denominator;
  return out;
}

}  // namespace

HardyRatio hardy_ratio(const geometry::RectDomain& dom, const geometry::BoundarySet& d,
                       const GridFunction& u, double p, const HardyOptions& opt) {
  return ratio_with(dom, d, u, u, p, opt);
}

HardyRatio hardy_ratio(const geometry::RectDomain& dom, const geometry::BoundarySet& d,
                       const ScalarField& u, const GridSpec& grid, double p,
                       const HardyOptions& opt) {
  return ratio_with(dom, d, u, GridFunction::sample(grid, dom, u), p, opt);
}

}  // namespace tracelab::analysis

#include "tracelab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <string>

#include "tracelab/errors.hpp"
#include "tracelab/quadrature.hpp"

namespace tracelab::geometry {

namespace {

constexpr std::uint32_t kLeafSize = 4;

Rect bounding(std::span<const Rect> rects) {
  double x0 = rects[0].x0(), y0 = rects[0].y0(), x1 = rects[0].x1(), y1 = rects[0].y1();
  for (const Rect& r : rects) {
    x0 = std::min(x0, r.x0());
    y0 = std::min(y0, r.y0());
    x1 = std::max(x1, r.x1());
    y1 = std::max(y1, r.y1());
  }
  return Rect::from_corners(x0, y0, x1, y1);
}

bool closed_contains(const Rect& r, Point p) {
  return p.x >= r.x0() && p.x <= r.x1() && p.y >= r.y0() && p.y <= r.y1();
}

// Segment pieces are closed boxes (possibly degenerate).
Rect piece_box(const Segment& s) {
  return Rect::from_corners(std::min(s.a.x, s.b.x), std::min(s.a.y, s.b.y),
                            std::max(s.a.x, s.b.x), std::max(s.a.y, s.b.y));
}

double box_gap(double lo0, double hi0, double lo1, double hi1) {
  if (hi0 < lo1) return lo1 - hi0;
  if (hi1 < lo0) return lo0 - hi1;
  return 0.0;
}

}  // namespace

void validate(const Rect& r) {
  if (!std::isfinite(r.lo.x) || !std::isfinite(r.lo.y) || !std::isfinite(r.size.x) ||
      !std::isfinite(r.size.y)) {
    throw ParameterError("rectangle has non-finite coordinates");
  }
  if (!(r.size.x > 0.0) || !(r.size.y > 0.0)) {
    throw ParameterError("rectangle side lengths must be positive");
  }
}

RectDomain::RectDomain(std::vector<Rect> rects) : rects_(std::move(rects)) {
  if (rects_.empty()) throw ParameterError("domain needs at least one rectangle");
  for (const Rect& r : rects_) validate(r);
  bbox_ = bounding(rects_);
  order_.resize(rects_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  nodes_.reserve(2 * rects_.size() / kLeafSize + 2);
  build(0, static_cast<std::uint32_t>(rects_.size()));
}

std::uint32_t RectDomain::build(std::uint32_t first, std::uint32_t count) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back({});
  std::span<const std::uint32_t> ids(order_.data() + first, count);
  double x0 = rects_[ids[0]].x0(), y0 = rects_[ids[0]].y0();
  double x1 = rects_[ids[0]].x1(), y1 = rects_[ids[0]].y1();
  double cx0 = 1e300, cx1 = -1e300, cy0 = 1e300, cy1 = -1e300;
  for (std::uint32_t i : ids) {
    const Rect& r = rects_[i];
    x0 = std::min(x0, r.x0());
    y0 = std::min(y0, r.y0());
    x1 = std::max(x1, r.x1());
    y1 = std::max(y1, r.y1());
    const Point c = r.center();
    cx0 = std::min(cx0, c.x);
    cx1 = std::max(cx1, c.x);
    cy0 = std::min(cy0, c.y);
    cy1 = std::max(cy1, c.y);
  }
  nodes_[id].box = Rect::from_corners(x0, y0, x1, y1);
  if (count <= kLeafSize) {
    nodes_[id].first = first;
    nodes_[id].count = count;
    return id;
  }
  const bool split_x = (cx1 - cx0) >= (cy1 - cy0);
  const std::uint32_t half = count / 2;
  auto* begin = order_.data() + first;
  std::nth_element(begin, begin + half, begin + count,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const Point ca = rects_[a].center();
                     const Point cb = rects_[b].center();
                     return split_x ? ca.x < cb.x : ca.y < cb.y;
                   });
  const std::uint32_t left = build(first, half);
  const std::uint32_t right = build(first + half, count - half);
  nodes_[id].first = left;
  nodes_[id].right = right;
  nodes_[id].count = 0;
  return id;
}

bool RectDomain::contains(Point y) const {
  std::uint32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    if (!closed_contains(n.box, y)) continue;
    if (n.count > 0) {
      for (std::uint32_t i = n.first; i < n.first + n.count; ++i) {
        if (rects_[order_[i]].contains_open(y)) return true;
      }
    } else {
      stack[top++] = n.first;
      stack[top++] = n.right;
    }
  }
  return false;
}

void RectDomain::candidates(const Rect& box, std::vector<std::uint32_t>& out) const {
  out.clear();
  std::uint32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& n = nodes_[stack[--top]];
    if (!n.box.overlaps_open(box)) continue;
    if (n.count > 0) {
      for (std::uint32_t i = n.first; i < n.first + n.count; ++i) {
        if (rects_[order_[i]].overlaps_open(box)) out.push_back(order_[i]);
      }
    } else {
      stack[top++] = n.first;
      stack[top++] = n.right;
    }
  }
  std::sort(out.begin(), out.end());
}

std::vector<std::uint32_t> RectDomain::candidates(const Rect& box) const {
  std::vector<std::uint32_t> out;
  candidates(box, out);
  return out;
}

double RectDomain::area() const { return quadrature::area_in_box(*this, bbox_); }

BoundarySet::BoundarySet(std::vector<Segment> segments) : segments_(std::move(segments)) {
  for (const Segment& s : segments_) {
    if (!std::isfinite(s.a.x) || !std::isfinite(s.a.y) || !std::isfinite(s.b.x) ||
        !std::isfinite(s.b.y)) {
      throw ParameterError("boundary segment has non-finite coordinates");
    }
  }
}

double BoundarySet::distance(Point y) const {
  if (segments_.empty()) throw DomainError("distance to an empty boundary set");
  double best = std::numeric_limits<double>::infinity();
  for (const Segment& s : segments_) {
    const Rect b = piece_box(s);
    const double dx = box_gap(y.x, y.x, b.x0(), b.x1());
    const double dy = box_gap(y.y, y.y, b.y0(), b.y1());
    best = std::min(best, std::hypot(dx, dy));
  }
  return best;
}

double BoundarySet::min_distance(const Rect& box) const {
  if (segments_.empty()) throw DomainError("distance to an empty boundary set");
  double best = std::numeric_limits<double>::infinity();
  for (const Segment& s : segments_) {
    const Rect b = piece_box(s);
    const double dx = box_gap(box.x0(), box.x1(), b.x0(), b.x1());
    const double dy = box_gap(box.y0(), box.y1(), b.y0(), b.y1());
    best = std::min(best, std::hypot(dx, dy));
  }
  return best;
}

double BoundarySet::max_distance(const Rect& box) const {
  if (segments_.empty()) throw DomainError("distance to an empty boundary set");
  double best = std::numeric_limits<double>::infinity();
  for (const Segment& s : segments_) {
    // Distance to one convex piece is convex, so its maximum sits at a corner.
    const Rect b = piece_box(s);
    const double dx = std::max(box_gap(box.x0(), box.x0(), b.x0(), b.x1()),
                               box_gap(box.x1(), box.x1(), b.x0(), b.x1()));
    const double dy = std::max(box_gap(box.y0(), box.y0(), b.y0(), b.y1()),
                               box_gap(box.y1(), box.y1(), b.y0(), b.y1()));
    best = std::min(best, std::hypot(dx, dy));
  }
  return best;
}

bool BoundarySet::intersects_segment(Point p, Point q) const {
  for (const Segment& s : segments_) {
    const Rect b = piece_box(s);
    // Liang-Barsky clipping of pq against the closed box.
    double t0 = 0.0, t1 = 1.0;
    const double d[2] = {q.x - p.x, q.y - p.y};
    const double o[2] = {p.x, p.y};
    const double lo[2] = {b.x0(), b.y0()};
    const double hi[2] = {b.x1(), b.y1()};
    bool hit = true;
    for (int k = 0; k < 2 && hit; ++k) {
      if (d[k] == 0.0) {
        if (o[k] < lo[k] || o[k] > hi[k]) hit = false;
        continue;
      }
      double ta = (lo[k] - o[k]) / d[k];
      double tb = (hi[k] - o[k]) / d[k];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) hit = false;
    }
    if (hit) return true;
  }
  return false;
}

double FractalParams::a(int j) const {
  switch (rule) {
    case FractalRule::Example1:
      return std::ldexp(1.0, -j - 2);
    case FractalRule::Example2:
      return std::pow(4.0, -j - 1);
    case FractalRule::Custom:
      return custom_a.at(static_cast<std::size_t>(j));
  }
  return 0.0;
}

double FractalParams::b(int j) const {
  switch (rule) {
    case FractalRule::Example1:
      // 2^{-(1+p)j} equals 1 at level 0, which breaks the overlap condition;
      // level 0 reuses the level-1 width.
      return std::pow(2.0, -(1.0 + p) * std::max(j, 1));
    case FractalRule::Example2:
      return std::pow(4.0, -j - 1);
    case FractalRule::Custom:
      return custom_b.at(static_cast<std::size_t>(j));
  }
  return 0.0;
}

void FractalParams::validate() const {
  if (!(p > 1.0) || !std::isfinite(p)) throw ParameterError("exponent p must lie in (1, inf)");
  if (depth < 0 || depth > 24) throw ParameterError("depth must lie in [0, 24]");
  if (rule == FractalRule::Custom) {
    const auto need = static_cast<std::size_t>(depth) + 1;
    if (custom_a.size() < need || custom_b.size() < need) {
      throw ParameterError("custom rule needs a_j and b_j for every level up to depth");
    }
  }
  for (int j = 0; j <= depth; ++j) {
    const double cap = std::ldexp(1.0, -j - 1);
    const double aj = a(j), bj = b(j);
    if (!(aj > 0.0 && aj < cap) || !(bj > 0.0 && bj < cap)) {
      throw ParameterError("level " + std::to_string(j) +
                           ": blow-up widths must satisfy 0 < a_j, b_j < 2^{-j-1}");
    }
  }
}

std::size_t fractal_rect_count(int depth) {
  std::size_t n = 0;
  for (int j = 0; j <= depth; ++j) n += (std::size_t{2} << j) + 1;
  return n;
}

RectDomain build_fractal_domain(const FractalParams& params) {
  params.validate();
  std::vector<Rect> rects;
  rects.reserve(fractal_rect_count(params.depth));
  for (int j = 0; j <= params.depth; ++j) {
    const double s = std::ldexp(1.0, -j);
    const double aj = params.a(j), bj = params.b(j);
    const long n = 1L << j;
    for (long k = 0; k < n; ++k) {
      rects.push_back(Rect::from_corners(k * s - aj, s - aj, (k + 1) * s + aj, s + aj));
    }
    for (long k = 0; k <= n; ++k) {
      rects.push_back(Rect::from_corners(k * s - bj, s - bj, k * s + bj, 2 * s + bj));
    }
  }
  return RectDomain(std::move(rects));
}

BoundarySet fractal_dirichlet_part() {
  return BoundarySet({Segment{{0.0, 0.0}, {1.0, 0.0}}});
}

std::size_t default_cell_budget() {
  if (const char* env = std::getenv("TRACE_LAB_CELL_BUDGET")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return 1'000'000;
}

AreaEstimate ball_domain_area(const RectDomain& dom, Point x, double r, double tol,
                              std::size_t cell_budget) {
  if (!(r > 0.0)) throw ParameterError("radius must be positive");
  if (!(tol > 0.0)) throw ParameterError("tolerance must be positive");
  const auto q = quadrature::integrate_over_ball(dom, x, r, nullptr, tol, cell_budget);
  return {q.value, q.err, q.cells};
}

AreaEstimate density(const RectDomain& dom, Point x, double r, double tol,
                     std::size_t cell_budget) {
  const double ball = std::numbers::pi * r * r;
  AreaEstimate a = ball_domain_area(dom, x, r, tol * ball, cell_budget);
  a.value = std::clamp(a.value / ball, 0.0, 1.0);
  a.err /= ball;
  return a;
}

double dist_to_boundary_set(const BoundarySet& d, Point y) { return d.distance(y); }

double hausdorff_measure_on_segments(const BoundarySet& d, Point x, double r, double l) {
  if (l != 1.0) throw UnsupportedError("only the 1-dimensional measure is supported");
  if (!(r > 0.0)) throw ParameterError("radius must be positive");
  double total = 0.0;
  for (const Segment& s : d.segments()) {
    if (s.is_box()) throw UnsupportedError("Hausdorff measure needs a union of segments");
    const double dx = s.b.x - s.a.x, dy = s.b.y - s.a.y;
    const double len2 = dx * dx + dy * dy;
    if (len2 == 0.0) continue;
    // |a + t(b-a) - x|^2 <= r^2 for t in [0,1]
    const double fx = s.a.x - x.x, fy = s.a.y - x.y;
    const double bq = 2.0 * (fx * dx + fy * dy);
    const double cq = fx * fx + fy * fy - r * r;
    const double disc = bq * bq - 4.0 * len2 * cq;
    if (disc <= 0.0) continue;
    const double sq = std::sqrt(disc);
    const double t0 = std::max(0.0, (-bq - sq) / (2.0 * len2));
    const double t1 = std::min(1.0, (-bq + sq) / (2.0 * len2));
    if (t1 > t0) total += (t1 - t0) * std::sqrt(len2);
  }
  return total;
}

}  // namespace tracelab::geometry

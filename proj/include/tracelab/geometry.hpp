#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tracelab::geometry {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Axis-aligned rectangle given by its lower-left corner and side lengths.
/// Used both for the open pieces of a domain and for quadrature cells.
struct Rect {
  Point lo;
  Point size;

  static Rect from_corners(double x0, double y0, double x1, double y1) {
    return Rect{{x0, y0}, {x1 - x0, y1 - y0}};
  }

  double x0() const { return lo.x; }
  double y0() const { return lo.y; }
  double x1() const { return lo.x + size.x; }
  double y1() const { return lo.y + size.y; }
  double area() const { return size.x * size.y; }
  Point center() const { return {lo.x + 0.5 * size.x, lo.y + 0.5 * size.y}; }

  /// Strict containment (open rectangle).
  bool contains_open(Point p) const {
    return p.x > x0() && p.x < x1() && p.y > y0() && p.y < y1();
  }
  /// True iff the interiors of both rectangles meet.
  bool overlaps_open(const Rect& o) const {
    return x0() < o.x1() && o.x0() < x1() && y0() < o.y1() && o.y0() < y1();
  }
  /// True iff `inner` lies in the closure of this rectangle.
  bool covers(const Rect& inner) const {
    return x0() <= inner.x0() && inner.x1() <= x1() && y0() <= inner.y0() &&
           inner.y1() <= y1();
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Throws ParameterError unless both sides are positive and all coordinates finite.
void validate(const Rect& r);

/// Bounded open set given as a finite union of open rectangles. Rectangles may
/// overlap; every query uses union semantics.
class RectDomain {
 public:
  explicit RectDomain(std::vector<Rect> rects);

  std::span<const Rect> rects() const { return rects_; }
  const Rect& bbox() const { return bbox_; }
  std::size_t size() const { return rects_.size(); }

  bool contains(Point y) const;

  /// Indices of the rectangles whose interior meets the interior of `box`.
  void candidates(const Rect& box, std::vector<std::uint32_t>& out) const;
  std::vector<std::uint32_t> candidates(const Rect& box) const;

  /// Exact Lebesgue measure of the union.
  double area() const;

 private:
  struct Node {
    Rect box;
    std::uint32_t first = 0;  // leaf: range into order_; inner: left child
    std::uint32_t count = 0;  // 0 for inner nodes
    std::uint32_t right = 0;
  };
  std::uint32_t build(std::uint32_t first, std::uint32_t count);

  std::vector<Rect> rects_;
  Rect bbox_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Closed axis-aligned segment from `a` to `b`. When both coordinates differ
/// the piece is the closed solid box spanned by the two corners.
struct Segment {
  Point a;
  Point b;

  bool is_box() const { return a.x != b.x && a.y != b.y; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Closed bounded set D given as a finite union of segments or boxes.
class BoundarySet {
 public:
  BoundarySet() = default;
  explicit BoundarySet(std::vector<Segment> segments);

  std::span<const Segment> segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }

  /// Euclidean distance to the set. Throws DomainError when empty.
  double distance(Point y) const;
  /// Minimum distance from any point of the closed box to the set.
  double min_distance(const Rect& box) const;
  /// Upper bound for the distance from points of the closed box to the set,
  /// exact for a single piece.
  double max_distance(const Rect& box) const;
  /// True iff the closed segment pq meets the set.
  bool intersects_segment(Point p, Point q) const;

 private:
  std::vector<Segment> segments_;
};

enum class FractalRule { Example1, Example2, Custom };

/// Parameters of the dyadic skeleton domain: blow-up half-widths a_j of the
/// horizontal edges and b_j of the vertical edges for levels 0..depth.
struct FractalParams {
  double p = 2.0;
  int depth = 0;
  FractalRule rule = FractalRule::Example1;
  std::vector<double> custom_a;
  std::vector<double> custom_b;

  double a(int j) const;
  double b(int j) const;
  /// Throws ParameterError unless 0 < a_j, b_j < 2^{-j-1} for all j <= depth.
  void validate() const;
};

RectDomain build_fractal_domain(const FractalParams& params);

/// The Dirichlet part [0,1] x {0} under the skeleton domains.
BoundarySet fractal_dirichlet_part();

/// Number of rectangles emitted for a given depth: sum_j (2^j + 2^j + 1).
std::size_t fractal_rect_count(int depth);

struct AreaEstimate {
  double value = 0.0;
  double err = 0.0;
  std::size_t cells = 0;
};

/// Quadtree cell cap: 10^6 unless TRACE_LAB_CELL_BUDGET is set.
std::size_t default_cell_budget();

/// |B(x,r) ∩ Ω| with absolute error at most `tol`.
AreaEstimate ball_domain_area(const RectDomain& dom, Point x, double r, double tol,
                              std::size_t cell_budget = default_cell_budget());

/// |B(x,r) ∩ Ω| / (π r²), error scaled accordingly.
AreaEstimate density(const RectDomain& dom, Point x, double r, double tol,
                     std::size_t cell_budget = default_cell_budget());

double dist_to_boundary_set(const BoundarySet& d, Point y);

/// Exact l-dimensional Hausdorff measure of D ∩ B(x,r); only l = 1 on
/// segment sets is supported.
double hausdorff_measure_on_segments(const BoundarySet& d, Point x, double r, double l);

}  // namespace tracelab::geometry

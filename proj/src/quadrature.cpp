#include "tracelab/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <utility>

#include "tracelab/errors.hpp"
#include "tracelab/parallel.hpp"

namespace tracelab::quadrature {

namespace {

constexpr std::size_t kMaxUnionCandidates = 48;

// ∫ max(0, sqrt(r²-t²) - h) dt over [x0, x1], for 0 <= h.
double cap_strip_area(double x0, double x1, double h, double r) {
  if (h >= r) return 0.0;
  const double s = std::sqrt((r - h) * (r + h));
  const double a = std::clamp(x0, -s, s);
  const double b = std::clamp(x1, -s, s);
  if (b <= a) return 0.0;
  auto g = [&](double t) {
    // atan2 with the factored root stays accurate as t approaches ±r.
    const double q = std::sqrt(std::max(0.0, (r - t) * (r + t)));
    return 0.5 * (t * q + r * r * std::atan2(t, q)) - h * t;
  };
  return g(b) - g(a);
}

// Area of the origin-centered disk within [x0,x1] x [y0,y1] with 0 <= y0 <= y1.
double upper_box_area(double x0, double x1, double y0, double y1, double r) {
  return cap_strip_area(x0, x1, y0, r) - cap_strip_area(x0, x1, y1, r);
}

Rect clip(const Rect& a, const Rect& b) {
  return Rect::from_corners(std::max(a.x0(), b.x0()), std::max(a.y0(), b.y0()),
                            std::min(a.x1(), b.x1()), std::min(a.y1(), b.y1()));
}

void filter(std::span<const Rect> rects, std::span<const std::uint32_t> in, const Rect& box,
            std::vector<std::uint32_t>& out) {
  out.clear();
  for (std::uint32_t i : in) {
    if (rects[i].overlaps_open(box)) out.push_back(i);
  }
}

bool any_covers(std::span<const Rect> rects, std::span<const std::uint32_t> idx,
                const Rect& box) {
  return std::any_of(idx.begin(), idx.end(),
                     [&](std::uint32_t i) { return rects[i].covers(box); });
}

double area_in_box_rec(std::span<const Rect> rects, std::span<const std::uint32_t> idx,
                       const Rect& box) {
  if (idx.empty()) return 0.0;
  if (any_covers(rects, idx, box)) return box.area();
  if (idx.size() <= kMaxUnionCandidates) return union_area(rects, idx, box);
  Rect lhs = box, rhs = box;
  if (box.size.x >= box.size.y) {
    lhs.size.x = 0.5 * box.size.x;
    rhs.lo.x = box.lo.x + lhs.size.x;
    rhs.size.x = box.x1() - rhs.lo.x;
  } else {
    lhs.size.y = 0.5 * box.size.y;
    rhs.lo.y = box.lo.y + lhs.size.y;
    rhs.size.y = box.y1() - rhs.lo.y;
  }
  std::vector<std::uint32_t> sub;
  filter(rects, idx, lhs, sub);
  const double a = area_in_box_rec(rects, sub, lhs);
  filter(rects, idx, rhs, sub);
  return a + area_in_box_rec(rects, sub, rhs);
}

// Disjoint rectangles covering the union of rects[idx] within box.
void slab_pieces(std::span<const Rect> rects, std::span<const std::uint32_t> idx,
                 const Rect& box, std::vector<Rect>& out) {
  out.clear();
  std::vector<Rect> parts;
  for (std::uint32_t i : idx) {
    const Rect c = clip(rects[i], box);
    if (c.size.x > 0.0 && c.size.y > 0.0) parts.push_back(c);
  }
  if (parts.size() <= 1) {
    out = std::move(parts);
    return;
  }
  std::vector<double> xs;
  for (const Rect& r : parts) {
    xs.push_back(r.x0());
    xs.push_back(r.x1());
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<std::pair<double, double>> spans;
  for (std::size_t s = 0; s + 1 < xs.size(); ++s) {
    const double xa = xs[s], xb = xs[s + 1];
    spans.clear();
    for (const Rect& r : parts) {
      if (r.x0() <= xa && r.x1() >= xb) spans.emplace_back(r.y0(), r.y1());
    }
    if (spans.empty()) continue;
    std::sort(spans.begin(), spans.end());
    double lo = spans[0].first, hi = spans[0].second;
    for (std::size_t k = 1; k <= spans.size(); ++k) {
      if (k == spans.size() || spans[k].first > hi) {
        out.push_back(Rect::from_corners(xa, lo, xb, hi));
        if (k == spans.size()) break;
        lo = spans[k].first;
        hi = spans[k].second;
      } else {
        hi = std::max(hi, spans[k].second);
      }
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

template <std::size_t N>
double tensor_gauss(const Rect& r, const ScalarField& f, const std::array<double, N>& xs,
                    const std::array<double, N>& ws) {
  const Point c = r.center();
  const double hx = 0.5 * r.size.x, hy = 0.5 * r.size.y;
  double sum = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j) sum += ws[i] * ws[j] * f({c.x + hx * xs[i], c.y + hy * xs[j]});
  return sum * hx * hy;
}

struct Pending {
  Rect box;
  std::vector<std::uint32_t> cand;
};

struct Outcome {
  double value = 0.0;
  double err = 0.0;
  bool split = false;
};

}  // namespace

double disk_rect_area(const Rect& box, Point c, double radius) {
  if (!(radius > 0.0)) return 0.0;
  const double x0 = box.x0() - c.x, x1 = box.x1() - c.x;
  const double y0 = box.y0() - c.y, y1 = box.y1() - c.y;
  if (x1 <= x0 || y1 <= y0) return 0.0;
  if (y0 >= 0.0) return upper_box_area(x0, x1, y0, y1, radius);
  if (y1 <= 0.0) return upper_box_area(x0, x1, -y1, -y0, radius);
  return upper_box_area(x0, x1, 0.0, -y0, radius) + upper_box_area(x0, x1, 0.0, y1, radius);
}

double union_area(std::span<const Rect> rects, std::span<const std::uint32_t> idx,
                  const Rect& clip_box) {
  std::vector<Rect> parts;
  parts.reserve(idx.size());
  for (std::uint32_t i : idx) {
    const Rect c = clip(rects[i], clip_box);
    if (c.size.x > 0.0 && c.size.y > 0.0) parts.push_back(c);
  }
  if (parts.empty()) return 0.0;
  if (parts.size() == 1) return parts[0].area();
  std::vector<double> xs;
  xs.reserve(2 * parts.size());
  for (const Rect& r : parts) {
    xs.push_back(r.x0());
    xs.push_back(r.x1());
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<std::pair<double, double>> spans;
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < xs.size(); ++s) {
    const double xa = xs[s], xb = xs[s + 1];
    spans.clear();
    for (const Rect& r : parts) {
      if (r.x0() <= xa && r.x1() >= xb) spans.emplace_back(r.y0(), r.y1());
    }
    if (spans.empty()) continue;
    std::sort(spans.begin(), spans.end());
    double covered = 0.0;
    double lo = spans[0].first, hi = spans[0].second;
    for (std::size_t k = 1; k < spans.size(); ++k) {
      if (spans[k].first > hi) {
        covered += hi - lo;
        lo = spans[k].first;
        hi = spans[k].second;
      } else {
        hi = std::max(hi, spans[k].second);
      }
    }
    covered += hi - lo;
    total += covered * (xb - xa);
  }
  return total;
}

double area_in_box(const geometry::RectDomain& dom, const Rect& box) {
  const auto idx = dom.candidates(box);
  return area_in_box_rec(dom.rects(), idx, box);
}

bool disjoint_pieces(const geometry::RectDomain& dom, const Rect& box, std::vector<Rect>& out,
                     std::size_t max_candidates) {
  out.clear();
  const auto idx = dom.candidates(box);
  if (any_covers(dom.rects(), idx, box)) {
    out.push_back(box);
    return true;
  }
  if (idx.size() > max_candidates) return false;
  slab_pieces(dom.rects(), idx, box, out);
  return true;
}

double fiber_area(const geometry::RectDomain& dom, const Rect& box, bool vertical) {
  const auto idx = dom.candidates(box);
  const auto& rects = dom.rects();
  if (any_covers(rects, idx, box)) return box.area();
  // Work in coordinates where the fibers run along the second axis.
  auto lo_t = [&](const Rect& r) { return vertical ? r.x0() : r.y0(); };
  auto hi_t = [&](const Rect& r) { return vertical ? r.x1() : r.y1(); };
  auto lo_f = [&](const Rect& r) { return vertical ? r.y0() : r.x0(); };
  auto hi_f = [&](const Rect& r) { return vertical ? r.y1() : r.x1(); };
  std::vector<Rect> parts;
  for (std::uint32_t i : idx) {
    const Rect c = clip(rects[i], box);
    if (c.size.x > 0.0 && c.size.y > 0.0) parts.push_back(c);
  }
  if (parts.empty()) return 0.0;
  const double f0 = lo_f(box), f1 = hi_f(box);
  std::vector<double> ts;
  for (const Rect& r : parts) {
    ts.push_back(lo_t(r));
    ts.push_back(hi_t(r));
  }
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::vector<std::pair<double, double>> spans;
  double covered = 0.0;
  for (std::size_t s = 0; s + 1 < ts.size(); ++s) {
    const double ta = ts[s], tb = ts[s + 1];
    spans.clear();
    for (const Rect& r : parts) {
      if (lo_t(r) <= ta && hi_t(r) >= tb) spans.emplace_back(lo_f(r), hi_f(r));
    }
    if (spans.empty()) continue;
    std::sort(spans.begin(), spans.end());
    double reach = f0;
    for (const auto& [a, b] : spans) {
      if (a > reach) break;
      reach = std::max(reach, b);
    }
    if (reach >= f1) covered += tb - ta;
  }
  return covered * (f1 - f0);
}

double min_distance(const Rect& box, Point c) {
  const double dx = std::max({box.x0() - c.x, 0.0, c.x - box.x1()});
  const double dy = std::max({box.y0() - c.y, 0.0, c.y - box.y1()});
  return std::hypot(dx, dy);
}

double max_distance(const Rect& box, Point c) {
  const double dx = std::max(std::abs(box.x0() - c.x), std::abs(box.x1() - c.x));
  const double dy = std::max(std::abs(box.y0() - c.y), std::abs(box.y1() - c.y));
  return std::hypot(dx, dy);
}

QuadratureResult integrate_over_ball(const geometry::RectDomain& dom, Point c, double r,
                                     const ScalarField* f, double tol,
                                     std::size_t cell_budget, const Rect* clip_box) {
  QuadratureResult result;
  const Rect& bb = dom.bbox();
  double x0 = std::max(c.x - r, bb.x0()), y0 = std::max(c.y - r, bb.y0());
  double x1 = std::min(c.x + r, bb.x1()), y1 = std::min(c.y + r, bb.y1());
  if (clip_box != nullptr) {
    x0 = std::max(x0, clip_box->x0());
    y0 = std::max(y0, clip_box->y0());
    x1 = std::min(x1, clip_box->x1());
    y1 = std::min(y1, clip_box->y1());
  }
  if (!(x1 > x0 && y1 > y0)) return result;
  const Rect root = Rect::from_corners(x0, y0, x1, y1);
  const auto rects = dom.rects();

  // Resolves one cell. Cells whose value is exact are retired; the others
  // stay as leaves carrying an error estimate.
  auto evaluate = [&](const Pending& cell, Outcome& o) {
    o = Outcome{};
    const Rect& box = cell.box;
    if (cell.cand.empty() || min_distance(box, c) >= r) return;
    const bool inside_disk = max_distance(box, c) <= r;
    const double disk_part = inside_disk ? box.area() : disk_rect_area(box, c, r);
    if (disk_part <= 0.0) return;

    std::vector<Rect> pieces;
    bool known = true;
    if (any_covers(rects, cell.cand, box)) {
      pieces.push_back(box);
    } else if (cell.cand.size() == 1) {
      pieces.push_back(clip(rects[cell.cand[0]], box));
    } else if (inside_disk && cell.cand.size() <= kMaxUnionCandidates) {
      slab_pieces(rects, cell.cand, box, pieces);
    } else {
      known = false;
    }

    if (known && inside_disk) {
      for (const Rect& piece : pieces) {
        if (f == nullptr) {
          o.value += piece.area();
          continue;
        }
        const double fine = tensor_gauss(piece, *f, kG5x, kG5w);
        o.value += fine;
        o.err += std::abs(fine - tensor_gauss(piece, *f, kG3x, kG3w));
      }
      o.split = o.err > 0.0;
      return;
    }

    // Straddling or unresolved: bound f by samples over the cell.
    double fc = 1.0, fmax = 1.0, osc = 0.0;
    if (f != nullptr) {
      const Rect& s_box = known ? pieces[0] : box;
      const Point s[5] = {s_box.center(), s_box.lo, {s_box.x1(), s_box.y0()},
                          {s_box.x0(), s_box.y1()}, {s_box.x1(), s_box.y1()}};
      fc = (*f)(s[0]);
      double lo = fc, hi = fc;
      for (int k = 1; k < 5; ++k) {
        const double v = (*f)(s[k]);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      osc = hi - lo;
      fmax = std::max(std::abs(lo), std::abs(hi));
    }
    if (known) {
      const double area = disk_rect_area(pieces[0], c, r);
      o.value = area * fc;
      o.err = area * osc;
    } else {
      o.value = 0.5 * disk_part * fc;
      o.err = 0.5 * disk_part * fmax + disk_part * osc;
    }
    o.split = o.err > 0.0;
  };

  std::vector<Pending> leaves(1);
  leaves[0].box = root;
  dom.candidates(root, leaves[0].cand);
  std::vector<Outcome> out(1);
  evaluate(leaves[0], out[0]);
  std::size_t used = 1;
  double retired = 0.0;

  while (true) {
    // Retire exact cells.
    std::vector<Pending> keep;
    std::vector<Outcome> keep_out;
    double err = 0.0;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (!out[i].split) {
        retired += out[i].value;
      } else {
        err += out[i].err;
        keep.push_back(std::move(leaves[i]));
        keep_out.push_back(out[i]);
      }
    }
    leaves = std::move(keep);
    out = std::move(keep_out);
    if (err <= tol) {
      result.value = retired;
      for (const Outcome& o : out) result.value += o.value;
      result.err = err;
      break;
    }
    const double threshold = 0.5 * tol / static_cast<double>(leaves.size());
    std::vector<std::size_t> split;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (out[i].err > threshold) split.push_back(i);
    }
    if (used + 4 * split.size() > cell_budget) {
      throw PrecisionError("ball quadrature exceeded its cell budget", err);
    }
    std::vector<Pending> next(4 * split.size());
    std::vector<Outcome> next_out(next.size());
    parallel::for_each_index(split.size(), [&](std::size_t k) {
      const Pending& parent = leaves[split[k]];
      const Rect& b = parent.box;
      const double hx = 0.5 * b.size.x, hy = 0.5 * b.size.y;
      for (std::size_t q = 0; q < 4; ++q) {
        Pending& child = next[4 * k + q];
        child.box = Rect{{b.lo.x + static_cast<double>(q & 1) * hx,
                          b.lo.y + static_cast<double>(q >> 1) * hy},
                         {hx, hy}};
        filter(rects, parent.cand, child.box, child.cand);
        evaluate(child, next_out[4 * k + q]);
      }
    });
    used += next.size();
    // Unsplit leaves stay; split parents are replaced by their children.
    std::vector<std::uint8_t> is_split(leaves.size(), 0);
    for (std::size_t i : split) is_split[i] = 1;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (!is_split[i]) {
        next.push_back(std::move(leaves[i]));
        next_out.push_back(out[i]);
      }
    }
    leaves = std::move(next);
    out = std::move(next_out);
  }
  result.cells = used;
  return result;
}

std::vector<double> coverage_raster(const geometry::RectDomain& dom, Point origin, double h,
                                    std::size_t nx, std::size_t ny) {
  std::vector<double> area(nx * ny, 0.0);
  const auto rects = dom.rects();
  constexpr std::size_t kTile = 32;
  const std::size_t tx = (nx + kTile - 1) / kTile;
  const std::size_t ty = (ny + kTile - 1) / kTile;

  struct Block {
    std::size_t ix0, iy0, ix1, iy1;
  };
  auto block_box = [&](const Block& b) {
    return Rect::from_corners(origin.x + h * b.ix0, origin.y + h * b.iy0, origin.x + h * b.ix1,
                              origin.y + h * b.iy1);
  };

  parallel::for_each_index(tx * ty, [&](std::size_t t) {
    const Block tile{(t % tx) * kTile, (t / tx) * kTile, std::min(nx, (t % tx + 1) * kTile),
                     std::min(ny, (t / tx + 1) * kTile)};
    std::vector<std::uint32_t> cand;
    dom.candidates(block_box(tile), cand);
    // Depth-first over index blocks, each carrying its filtered candidates.
    std::vector<std::pair<Block, std::vector<std::uint32_t>>> stack;
    stack.emplace_back(tile, std::move(cand));
    while (!stack.empty()) {
      auto [b, idx] = std::move(stack.back());
      stack.pop_back();
      if (idx.empty()) continue;
      const Rect box = block_box(b);
      const std::size_t wx = b.ix1 - b.ix0, wy = b.iy1 - b.iy0;
      if (any_covers(rects, idx, box)) {
        for (std::size_t iy = b.iy0; iy < b.iy1; ++iy)
          for (std::size_t ix = b.ix0; ix < b.ix1; ++ix) area[iy * nx + ix] = h * h;
        continue;
      }
      if (wx == 1 && wy == 1) {
        area[b.iy0 * nx + b.ix0] = idx.size() <= kMaxUnionCandidates
                                       ? union_area(rects, idx, box)
                                       : area_in_box_rec(rects, idx, box);
        continue;
      }
      if (idx.size() == 1) {
        const Rect& only = rects[idx[0]];
        for (std::size_t iy = b.iy0; iy < b.iy1; ++iy)
          for (std::size_t ix = b.ix0; ix < b.ix1; ++ix) {
            const Rect cell{{origin.x + h * ix, origin.y + h * iy}, {h, h}};
            const Rect piece = clip(only, cell);
            area[iy * nx + ix] =
                (piece.size.x > 0.0 && piece.size.y > 0.0) ? piece.area() : 0.0;
          }
        continue;
      }
      Block lhs = b, rhs = b;
      if (wx >= wy) {
        lhs.ix1 = rhs.ix0 = b.ix0 + wx / 2;
      } else {
        lhs.iy1 = rhs.iy0 = b.iy0 + wy / 2;
      }
      std::vector<std::uint32_t> l, r;
      filter(rects, idx, block_box(lhs), l);
      filter(rects, idx, block_box(rhs), r);
      stack.emplace_back(lhs, std::move(l));
      stack.emplace_back(rhs, std::move(r));
    }
  });
  return area;
}

std::vector<double> coverage_raster_serial(const geometry::RectDomain& dom, Point origin,
                                           double h, std::size_t nx, std::size_t ny) {
  std::vector<double> area(nx * ny, 0.0);
  const auto rects = dom.rects();
  std::vector<std::uint32_t> all(rects.size());
  for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<std::uint32_t> idx;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const Rect cell{{origin.x + h * ix, origin.y + h * iy}, {h, h}};
      filter(rects, all, cell, idx);
      area[iy * nx + ix] = union_area(rects, idx, cell);
    }
  }
  return area;
}

}  // namespace tracelab::quadrature

#pragma once

// Independent reference computations used only by the test suites. Nothing
// here calls into the quadtree, BVH, or solver code paths under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

#include "tracelab/geometry.hpp"

namespace oracle {

using tracelab::geometry::FractalParams;
using tracelab::geometry::Point;
using tracelab::geometry::Rect;

/// Membership in the skeleton domain by per-level rectangle arithmetic.
inline bool fractal_contains(const FractalParams& prm, Point y) {
  for (int j = 0; j <= prm.depth; ++j) {
    const double s = std::ldexp(1.0, -j);
    const double a = prm.a(j), b = prm.b(j);
    if (std::abs(y.y - s) < a && y.x > -a && y.x < 1.0 + a) return true;
    if (std::abs(y.y - 1.5 * s) < 0.5 * s + b) {
      const double k = std::round(y.x / s);
      if (k >= 0.0 && k <= std::ldexp(1.0, j) && std::abs(y.x - k * s) < b) return true;
    }
  }
  return false;
}

/// Radical inverse in base `b` (Halton component).
inline double radical_inverse(std::uint64_t i, std::uint32_t b) {
  double inv = 1.0 / b, f = inv, v = 0.0;
  while (i > 0) {
    v += f * static_cast<double>(i % b);
    i /= b;
    f *= inv;
  }
  return v;
}

struct McEstimate {
  double value;
  double stderr_;
};

/// Quasi-Monte-Carlo estimate of |B(c,r) ∩ {inside}| over n Halton points in
/// the bounding square, with the binomial standard error of a plain MC run.
inline McEstimate qmc_ball_area(const std::function<bool(Point)>& inside, Point c, double r,
                                std::uint64_t n) {
  std::uint64_t hits = 0;
  for (std::uint64_t i = 1; i <= n; ++i) {
    const double u = radical_inverse(i, 2), v = radical_inverse(i, 3);
    const Point y{c.x + r * (2.0 * u - 1.0), c.y + r * (2.0 * v - 1.0)};
    const double dx = y.x - c.x, dy = y.y - c.y;
    if (dx * dx + dy * dy <= r * r && inside(y)) ++hits;
  }
  const double box = 4.0 * r * r;
  const double frac = static_cast<double>(hits) / static_cast<double>(n);
  return {frac * box, box * std::sqrt(frac * (1.0 - frac) / static_cast<double>(n))};
}

/// Composite Simpson rule on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Disk-rectangle intersection by integrating chord lengths.
inline double disk_rect_area_simpson(double x0, double y0, double x1, double y1, Point c,
                                     double r) {
  auto chord = [&](double x) {
    const double dx = x - c.x;
    if (std::abs(dx) >= r) return 0.0;
    const double s = std::sqrt(r * r - dx * dx);
    return std::max(0.0, std::min(y1, c.y + s) - std::max(y0, c.y - s));
  };
  const double a = std::max(x0, c.x - r), b = std::min(x1, c.x + r);
  if (b <= a) return 0.0;
  return simpson(chord, a, b, 20000);
}

/// ∫ y^{-p} dy over [y0, y1], 0 < y0 < y1.
inline double inverse_power_integral(double y0, double y1, double p) {
  return (std::pow(y0, 1.0 - p) - std::pow(y1, 1.0 - p)) / (p - 1.0);
}

/// ∫∫ (x² + y²)^{-p/2} over [x0,x1] x [y0,y1] with 0 <= x0 and 0 < y0, by
/// 2-D Simpson.
inline double corner_power_integral(double x0, double x1, double y0, double y1, double p) {
  if (x1 <= x0) return 0.0;
  return simpson(
      [&](double x) {
        return simpson([&](double y) { return std::pow(x * x + y * y, -0.5 * p); }, y0, y1, 400);
      },
      x0, x1, 400);
}

/// ∫∫ dist(y, [0,1] x {0})^{-p} over a rectangle lying above the x-axis.
inline double rect_hardy(double x0, double x1, double y0, double y1, double p) {
  double sum = 0.0;
  const double m0 = std::max(x0, 0.0), m1 = std::min(x1, 1.0);
  if (m1 > m0) sum += (m1 - m0) * inverse_power_integral(y0, y1, p);
  if (x0 < 0.0) sum += corner_power_integral(std::max(0.0, -x1), -x0, y0, y1, p);
  if (x1 > 1.0) sum += corner_power_integral(std::max(0.0, x0 - 1.0), x1 - 1.0, y0, y1, p);
  return sum;
}

/// Hardy integral of u ≡ 1 over the skeleton domain of depth J against
/// D = [0,1] x {0}, by inclusion-exclusion over the level rectangles. The
/// only overlaps are vertical pieces with the horizontal strips at their two
/// ends (pairs of vertical pieces meet only inside a strip).
inline double hardy_union_sum(const FractalParams& prm, int J) {
  double sum = 0.0;
  for (int j = 0; j <= J; ++j) {
    const double s = std::ldexp(1.0, -j);
    const double a = prm.a(j), b = prm.b(j);
    sum += rect_hardy(-a, 1.0 + a, s - a, s + a, prm.p);
    for (int k = 0; k <= (1 << j); ++k) {
      const double x = k * s;
      sum += rect_hardy(x - b, x + b, s - b, 2.0 * s + b, prm.p);
      sum -= rect_hardy(x - b, x + b, s - b, s + a, prm.p);
      if (j > 0) sum -= rect_hardy(x - b, x + b, 2.0 * s - prm.a(j - 1), 2.0 * s + b, prm.p);
    }
  }
  return sum;
}

/// e^{-r} / (2π r).
inline double bessel_g1_closed(double r) { return std::exp(-r) / (2.0 * std::numbers::pi * r); }

/// ∫_cell e^{-|y-e|}/(2π|y-e|) dy: polar Simpson with the closed-form radial
/// mass (1 - e^{-ρ})/(2π) when e is close, 8x8 tensor Simpson otherwise.
inline double bessel_cell_integral(Point e, const Rect& cell) {
  const double pi = std::numbers::pi;
  const double gap_x = std::max({cell.x0() - e.x, 0.0, e.x - cell.x1()});
  const double gap_y = std::max({cell.y0() - e.y, 0.0, e.y - cell.y1()});
  if (std::hypot(gap_x, gap_y) > cell.size.x) {
    return simpson(
        [&](double x) {
          return simpson([&](double y) { return bessel_g1_closed(std::hypot(x - e.x, y - e.y)); },
                         cell.y0(), cell.y1(), 8);
        },
        cell.x0(), cell.x1(), 8);
  }
  // integrate over ψ the radial mass out to the cell boundary
  const auto exit_radius = [&](double psi) {
    const double c = std::cos(psi), s = std::sin(psi);
    double t = 1e300;
    if (c > 0) t = std::min(t, (cell.x1() - e.x) / c);
    if (c < 0) t = std::min(t, (cell.x0() - e.x) / c);
    if (s > 0) t = std::min(t, (cell.y1() - e.y) / s);
    if (s < 0) t = std::min(t, (cell.y0() - e.y) / s);
    double t0 = 0.0;
    if (c > 0) t0 = std::max(t0, (cell.x0() - e.x) / c);
    if (c < 0) t0 = std::max(t0, (cell.x1() - e.x) / c);
    if (s > 0) t0 = std::max(t0, (cell.y0() - e.y) / s);
    if (s < 0) t0 = std::max(t0, (cell.y1() - e.y) / s);
    return std::pair{t0, t};
  };
  const auto mass = [&](double rho) { return -std::expm1(-rho) / (2.0 * pi); };
  // split the angle range at the corner directions so each piece is smooth
  std::vector<double> cuts{-pi, pi};
  for (double cx : {cell.x0(), cell.x1()}) {
    for (double cy : {cell.y0(), cell.y1()}) cuts.push_back(std::atan2(cy - e.y, cx - e.x));
  }
  cuts.push_back(0.0);
  cuts.push_back(0.5 * pi);
  cuts.push_back(-0.5 * pi);
  std::sort(cuts.begin(), cuts.end());
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    if (cuts[k + 1] - cuts[k] < 1e-15) continue;
    const double a = cuts[k], b = cuts[k + 1], nudge = 1e-12 * (b - a);
    sum += simpson(
        [&](double psi) {
          // one-sided limits at the piece ends
          const auto [t0, t1] = exit_radius(std::clamp(psi, a + nudge, b - nudge));
          return t1 > t0 ? mass(t1) - mass(t0) : 0.0;
        },
        a, b, 400);
  }
  return sum;
}

/// Minimum of h² Σ f_i² subject to K f >= 1 for the kernel rows K (f is
/// free of sign constraints since K >= 0): Hildreth coordinate ascent on
/// the dual quadratic program. Returns the dual optimum.
inline double hildreth_capacity(const std::vector<std::vector<double>>& k, double h,
                                int sweeps = 20000) {
  const std::size_t m = k.size();
  std::vector<double> q(m * m, 0.0);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) {
      double s = 0.0;
      for (std::size_t i = 0; i < k[a].size(); ++i) s += k[a][i] * k[b][i];
      q[a * m + b] = s / (2.0 * h * h);
    }
  }
  std::vector<double> lambda(m, 0.0);
  for (int it = 0; it < sweeps; ++it) {
    double change = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double ql = 0.0;
      for (std::size_t b = 0; b < m; ++b) ql += q[j * m + b] * lambda[b];
      const double next = std::max(0.0, lambda[j] + (1.0 - ql) / q[j * m + j]);
      change = std::max(change, std::abs(next - lambda[j]));
      lambda[j] = next;
    }
    if (change < 1e-14) break;
  }
  double value = 0.0, quad = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    value += lambda[a];
    for (std::size_t b = 0; b < m; ++b) quad += lambda[a] * q[a * m + b] * lambda[b];
  }
  return value - 0.5 * quad;
}

/// Gradient energy of the Example 1 approximant u_j from the rectangle
/// dimensions: the ramp band [5/8, 6/8]·2^{-j} lies inside the 2^{j+1} + 1
/// level-(j+1) vertical pieces of half-width 2^{-(1+p)(j+1)}.
inline double example1_ramp_energy(int j, double p) {
  const double half_width = std::pow(2.0, -(1.0 + p) * (j + 1));
  const double band = std::ldexp(1.0, -j - 3);
  const double pieces = std::ldexp(1.0, j + 1) + 1.0;
  return std::pow(2.0, (j + 3) * p) * pieces * 2.0 * half_width * band;
}

/// Quadratic distance on the unit square with D the bottom edge, u ≡ 1 and the
/// first `zone_rows` rows forced to w = 1. The minimizer depends on the row
/// only, so each column solves the same tridiagonal system by Thomas' method.
inline double strip_membership_energy(int n, int zone_rows) {
  const double h = 1.0 / n;
  const int m = zone_rows;
  const int f = n - m;
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  if (f > 0) {
    std::vector<double> a(f, -1.0), b(f, h * h + 2.0), c(f, -1.0), d(f, 0.0);
    b[f - 1] = h * h + 1.0;
    d[0] = m > 0 ? 1.0 : 0.0;
    if (m == 0) b[0] = h * h + 1.0;
    for (int k = 1; k < f; ++k) {
      const double q = a[k] / b[k - 1];
      b[k] -= q * c[k - 1];
      d[k] -= q * d[k - 1];
    }
    std::vector<double> x(f);
    x[f - 1] = d[f - 1] / b[f - 1];
    for (int k = f - 2; k >= 0; --k) x[k] = (d[k] - c[k] * x[k + 1]) / b[k];
    for (int k = 0; k < f; ++k) w[m + k] = x[k];
  }
  double col = 0.0;
  for (int k = 0; k < n; ++k) col += h * h * w[k] * w[k];
  for (int k = 0; k + 1 < n; ++k) col += (w[k + 1] - w[k]) * (w[k + 1] - w[k]);
  return n * col;
}

}  // namespace oracle

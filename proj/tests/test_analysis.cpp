#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "tracelab/analysis.hpp"
#include "tracelab/errors.hpp"
#include "tracelab/geometry.hpp"

using namespace tracelab;
using namespace tracelab::geometry;
using namespace tracelab::analysis;

namespace {

FractalParams ex1(int depth, double p = 2.0) {
  return FractalParams{p, depth, FractalRule::Example1, {}, {}};
}
FractalParams ex2(int depth, double p = 5.0) {
  return FractalParams{p, depth, FractalRule::Example2, {}, {}};
}
RectDomain unit_square() { return RectDomain({Rect{{0, 0}, {1, 1}}}); }
BoundarySet bottom_edge() { return BoundarySet({Segment{{0, 0}, {1, 0}}}); }

const ScalarField kOne = [](Point) { return 1.0; };
const ScalarField kZero = [](Point) { return 0.0; };

AverageSeries make_series(std::vector<double> r, std::vector<double> v) {
  AverageSeries s{{0.5, 0.0}, {}};
  for (std::size_t k = 0; k < r.size(); ++k) s.entries.push_back({r[k], v[k], 0.0});
  return s;
}

}  // namespace

TEST_CASE("interior average of trivial functions") {
  const auto sq = unit_square();
  CHECK(interior_average(sq, kZero, {0.5, 0.5}, 0.2, 1e-6).value == 0.0);
  const auto e = interior_average(sq, kOne, {0.5, 0.5}, 0.2, 1e-6);
  CHECK(e.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e.err <= 1e-6);
  // Boundary point: the full-ball normalizer halves the value.
  CHECK(interior_average(sq, kOne, {0.5, 0.0}, 0.2, 1e-6).value ==
        doctest::Approx(0.5).epsilon(1e-6));
  CHECK_THROWS_AS(interior_average(sq, kOne, {0.5, 0.5}, 0.0, 1e-6), ParameterError);
}

TEST_CASE("interior average matches the quasi-Monte-Carlo oracle for a smooth function") {
  const auto dom = build_fractal_domain(ex2(4));
  const ScalarField f = [](Point y) { return std::sin(3.0 * y.x) + 2.0 * y.y; };
  const Point x{0.3, 0.1};
  const double r = 0.3;
  const auto e = interior_average(dom, f, x, r, 1e-5);
  // Weighted QMC: integrate |f| over the ball against the membership oracle.
  const std::uint64_t n = 2'000'000;
  double sum = 0.0;
  for (std::uint64_t i = 1; i <= n; ++i) {
    const Point y{x.x + r * (2 * oracle::radical_inverse(i, 2) - 1),
                  x.y + r * (2 * oracle::radical_inverse(i, 3) - 1)};
    const double dx = y.x - x.x, dy = y.y - x.y;
    if (dx * dx + dy * dy <= r * r && oracle::fractal_contains(ex2(4), y)) sum += std::abs(f(y));
  }
  const double qmc = sum / n * 4 * r * r / (std::numbers::pi * r * r);
  CHECK(e.value == doctest::Approx(qmc).epsilon(2e-3));
}

TEST_CASE("interior average properties") {
  const auto dom = build_fractal_domain(ex1(6));
  const ScalarField u = [](Point y) { return 1.0 + y.x * y.y; };
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(0.0, 1.0), ur(0.02, 0.4);
  for (int t = 0; t < 10; ++t) {
    const Point x{ux(rng), 0.0};
    const double r = ur(rng);
    const auto base = interior_average(dom, u, x, r, 1e-5);
    // Homogeneity.
    const ScalarField cu = [&](Point y) { return -3.0 * u(y); };
    const auto scaled = interior_average(dom, cu, x, r, 3e-5);
    CHECK(std::abs(scaled.value - 3.0 * base.value) <= scaled.err + 3.0 * base.err + 1e-12);
    // Domination by sup|u| times density.
    const auto dens = density(dom, x, r, 1e-6);
    double sup = 0.0;
    for (double sx : {x.x - r, x.x + r})
      for (double sy : {0.0, r}) sup = std::max(sup, std::abs(u({sx, sy})));
    CHECK(base.value <= sup * dens.value + base.err + dens.err + 1e-12);
    // Monotone domination: 1 <= u pointwise.
    const auto one = interior_average(dom, kOne, x, r, 1e-5);
    CHECK(one.value <= base.value + one.err + base.err);
  }
}

TEST_CASE("example 1 floor at the midpoint") {
  const auto dom = build_fractal_domain(ex1(12));
  for (int k = 3; k <= 8; ++k) {
    const double r = std::ldexp(1.0, -k);
    const auto e = interior_average(dom, kOne, {0.5, 0.0}, r, 1e-3);
    CHECK(e.value - e.err >= 1.0 / (32.0 * std::numbers::pi));
  }
}

TEST_CASE("grid function interior average is exact per cell") {
  const auto sq = unit_square();
  const GridSpec g = GridSpec::covering(Rect{{0, 0}, {1, 1}}, 1.0 / 16);
  const auto u = GridFunction::sample(g, sq, [](Point y) { return y.x - 2.0 * y.y; });
  const Point x{0.4, 0.55};
  const double r = 0.27;
  const auto e = interior_average(sq, u, x, r, 1e-8);
  double expect = 0.0;
  for (std::size_t iy = 0; iy < g.ny; ++iy)
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
      const Rect c = g.cell(ix, iy);
      expect += std::abs(u.values[g.index(ix, iy)]) *
                oracle::disk_rect_area_simpson(c.x0(), c.y0(), c.x1(), c.y1(), x, r);
    }
  expect /= std::numbers::pi * r * r;
  CHECK(e.value == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("full ball average") {
  const GridSpec g = GridSpec::covering(Rect{{-1, -1}, {2, 2}}, 1.0 / 32);
  const auto c = GridFunction::sample(g, [](Point) { return 2.5; });
  CHECK(full_ball_average(c, {0.1, -0.2}, 0.5, true).value == doctest::Approx(2.5).epsilon(1e-12));
  const auto odd = GridFunction::sample(g, [](Point y) { return y.x > 0 ? 1.0 : -1.0; });
  const auto s = full_ball_average(odd, {0.0, 0.0}, 0.5, true);
  const auto a = full_ball_average(odd, {0.0, 0.0}, 0.5, false);
  CHECK(std::abs(s.value) < 1e-12);
  CHECK(a.value == doctest::Approx(1.0).epsilon(1e-12));
  const auto tilt = GridFunction::sample(g, [](Point y) { return y.x + 0.3 * y.y - 0.1; });
  for (double r : {0.1, 0.3, 0.6}) {
    CHECK(std::abs(full_ball_average(tilt, {0.2, 0.1}, r, true).value) <=
          full_ball_average(tilt, {0.2, 0.1}, r, false).value + 1e-14);
  }
  CHECK_THROWS_AS(full_ball_average(c, {0.8, 0.0}, 0.5, true), CoverageError);
}

TEST_CASE("average series") {
  const auto sq = unit_square();
  const std::vector<double> radii = {0.4, 0.2, 0.1, 0.05};
  const auto zero = average_series(sq, kZero, {0.5, 0.0}, radii, 1e-6);
  for (const auto& e : zero.entries) CHECK(e.value == 0.0);
  const std::vector<double> bad = {0.1, 0.2};
  CHECK_THROWS_AS(average_series(sq, kOne, {0.5, 0.0}, bad, 1e-6), ParameterError);
}

TEST_CASE("trace verdict") {
  auto v = trace_verdict(make_series({0.8, 0.4, 0.2, 0.1}, {0.2, 0.1, 0.05, 0.025}), 0.03, 0.5);
  CHECK(v.vanishing);
  CHECK(v.slope == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v.smallest_value == doctest::Approx(0.025));
  v = trace_verdict(make_series({0.8, 0.4, 0.2, 0.1}, {0.02, 0.02, 0.02, 0.02}), 0.01, 0.5);
  CHECK_FALSE(v.vanishing);
  CHECK(std::abs(v.slope) < 1e-12);
  v = trace_verdict(make_series({0.8, 0.4, 0.2, 0.1}, {0.02, 0.01, 0.0, 0.0}), 0.01, 0.5);
  CHECK(v.vanishing);
  CHECK(v.slope_is_sentinel);
  CHECK(std::isinf(v.slope));
  CHECK_THROWS_AS(trace_verdict(make_series({0.8, 0.4, 0.2}, {1, 1, 1}), 0.1, 0.5),
                  ParameterError);
}

TEST_CASE("example 1 average series does not vanish") {
  const auto dom = build_fractal_domain(ex1(10));
  std::vector<double> radii;
  for (int k = 2; k <= 8; ++k) radii.push_back(std::ldexp(1.0, -k));
  const auto s = average_series(dom, kOne, {0.5, 0.0}, radii, 1e-4);
  for (const auto& e : s.entries) CHECK(e.value >= 1.0 / (32.0 * std::numbers::pi));
  CHECK_FALSE(trace_verdict(s, 1e-3, 0.9).vanishing);
}

TEST_CASE("example 2 averages decay like r") {
  const auto dom = build_fractal_domain(ex2(10));
  std::vector<double> radii;
  for (int k = 2; k <= 7; ++k) radii.push_back(std::ldexp(1.0, -k));
  const auto s = average_series(dom, kOne, {0.5, 0.0}, radii, 1e-5);
  const auto v = trace_verdict(s, 1.0, 0.9);
  CHECK(v.slope >= 0.9);
}

TEST_CASE("hardy functional trivial cases") {
  const auto sq = unit_square();
  const auto d = bottom_edge();
  CHECK(hardy_functional(sq, d, kZero, 2.0).value == 0.0);
  const ScalarField dist = [&](Point y) { return d.distance(y); };
  for (double p : {1.5, 2.0, 5.0}) {
    const auto h = hardy_functional(sq, d, dist, p);
    CHECK(h.value == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_FALSE(h.diverging);
  }
  CHECK_THROWS_AS(hardy_functional(sq, BoundarySet(), kOne, 2.0), DomainError);
  CHECK_THROWS_AS(hardy_functional(sq, d, kOne, 1.0), ParameterError);
}

TEST_CASE("hardy functional against a closed form away from D") {
  // Ω = (0,1) x (1/4, 1) over D = [-10, 10] x {0}: ∫ y^{-p} closed form.
  const RectDomain dom({Rect{{0, 0.25}, {1, 0.75}}});
  const BoundarySet d({Segment{{-10, 0}, {10, 0}}});
  for (double p : {2.0, 3.5}) {
    const auto h = hardy_functional(dom, d, kOne, p, {1e-8});
    CHECK(h.value == doctest::Approx(oracle::inverse_power_integral(0.25, 1.0, p)).epsilon(1e-7));
    CHECK(h.lower_bound <= h.value);
  }
}

TEST_CASE("hardy divergence is certified by the ceiling") {
  const auto sq = unit_square();
  HardyOptions opt;
  opt.ceiling = 1e3;
  const auto h = hardy_functional(sq, bottom_edge(), kOne, 2.0, opt);
  CHECK(h.diverging);
  CHECK(h.lower_bound > 1e3);
  opt.ceiling = std::numeric_limits<double>::infinity();
  opt.cell_budget = 2000;
  CHECK_THROWS_AS(hardy_functional(sq, bottom_edge(), kOne, 2.0, opt), PrecisionError);
}

TEST_CASE("hardy functional is monotone under domain growth") {
  const auto d = bottom_edge();
  const ScalarField u = [](Point y) { return y.y * (1.0 + y.x); };
  const RectDomain small({Rect{{0, 0}, {1, 0.5}}});
  const RectDomain big({Rect{{0, 0}, {1, 0.5}}, Rect{{0.5, 0.4}, {0.5, 0.5}}});
  const auto a = hardy_functional(small, d, u, 3.0, {1e-6});
  const auto b = hardy_functional(big, d, u, 3.0, {1e-6});
  CHECK(a.value <= b.value + a.err + b.err);
}

TEST_CASE("example 1 hardy partial sums follow the level-sum oracle") {
  const double p = 2.0;
  double prev = 0.0;
  for (int J = 4; J <= 9; ++J) {
    const auto dom = build_fractal_domain(ex1(J, p));
    const auto h = hardy_functional(dom, fractal_dirichlet_part(), kOne, p, {1e-5});
    CHECK(h.value == doctest::Approx(oracle::hardy_union_sum(ex1(J, p), J)).epsilon(1e-4));
    if (J > 4) CHECK(h.value / prev == doctest::Approx(std::pow(2.0, p - 1)).epsilon(0.25));
    prev = h.value;
  }
}

TEST_CASE("hardy ratio") {
  const auto sq = unit_square();
  const auto d = bottom_edge();
  const GridSpec g = GridSpec::covering(Rect{{0, 0}, {1, 1}}, 1.0 / 32);
  const auto zero = GridFunction::sample(g, sq, [](Point) { return 0.0; });
  CHECK_THROWS_AS(hardy_ratio(sq, d, zero, 2.0), DomainError);
  const ScalarField dist = [](Point y) { return y.y; };
  const auto r = hardy_ratio(sq, d, dist, g, 2.0);
  CHECK(std::isfinite(r.value));
  CHECK(r.numerator.value == doctest::Approx(1.0).epsilon(1e-9));
  const auto samples = GridFunction::sample(g, sq, dist);
  double lp = 0.0;
  for (double v : samples.values) lp += v * v * g.h * g.h;
  CHECK(r.value <= sq.area() / lp);
  // A piecewise-constant u does not vanish on D, so its numerator diverges.
  HardyOptions cap;
  cap.ceiling = 1e4;
  CHECK(hardy_ratio(sq, d, samples, 2.0, cap).numerator.diverging);
  const auto one = GridFunction::sample(g, sq, [](Point) { return 1.0; });
  HardyOptions opt;
  opt.ceiling = 1e4;
  const auto div = hardy_ratio(sq, d, one, 2.0, opt);
  CHECK(div.numerator.diverging);
  CHECK(std::isinf(div.value));
  CHECK(div.denominator == doctest::Approx(1.0).epsilon(1e-9));
}

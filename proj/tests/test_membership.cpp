#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tracelab/errors.hpp"
#include "tracelab/membership.hpp"
#include "tracelab/parallel.hpp"
#include "tracelab/sobolev.hpp"

using namespace tracelab;
using namespace tracelab::geometry;
using namespace tracelab::membership;

namespace {

RectDomain unit_square() { return RectDomain({Rect{{0, 0}, {1, 1}}}); }
BoundarySet bottom_edge() { return BoundarySet({Segment{{0, 0}, {1, 0}}}); }

MembershipProblem strip_problem(int n, double delta, double p = 2.0) {
  const RectDomain dom = unit_square();
  const GridSpec grid = GridSpec::covering(dom.bbox(), 1.0 / n);
  MembershipProblem prob{dom, bottom_edge(), GridFunction::sample(grid, dom, [](Point) { return 1.0; }),
                         p, delta, 1e-10, 80};
  return prob;
}

FractalParams ex1(int depth, double p = 2.0) {
  return FractalParams{p, depth, FractalRule::Example1, {}, {}};
}

}  // namespace

TEST_CASE("weights of a full square") {
  const auto wt = sobolev::build_weights(unit_square(), BoundarySet{}, GridSpec::covering(unit_square().bbox(), 0.25));
  REQUIRE(wt.grid.nx == 4);
  REQUIRE(wt.grid.ny == 4);
  double cells = 0.0, ex = 0.0, ey = 0.0;
  for (double c : wt.cell) cells += c;
  for (double e : wt.edge_x) ex += e;
  for (double e : wt.edge_y) ey += e;
  CHECK(cells == doctest::Approx(1.0));
  CHECK(ex == doctest::Approx(12 * 0.0625));
  CHECK(ey == doctest::Approx(12 * 0.0625));
}

TEST_CASE("a cut removes the edges that cross it") {
  const BoundarySet cut({Segment{{0.5, 0.0}, {0.5, 1.0}}});
  const auto wt = sobolev::build_weights(unit_square(), cut, GridSpec::covering(unit_square().bbox(), 0.25));
  for (std::size_t iy = 0; iy < 4; ++iy) {
    CHECK(wt.edge_x[wt.grid.index(1, iy)] == 0.0);
    CHECK(wt.edge_x[wt.grid.index(0, iy)] > 0.0);
  }
}

TEST_CASE("power helper") {
  const sobolev::Power p2(2.0), p3(3.0), p25(2.5);
  CHECK(p2(-3.0) == 9.0);
  CHECK(p3(-2.0) == 8.0);
  CHECK(p25(4.0) == doctest::Approx(32.0));
  CHECK(p3.derivative(-2.0) == doctest::Approx(-12.0));
  CHECK(p25.derivative(4.0) == doctest::Approx(2.5 * 8.0));
}

TEST_CASE("energy and gradient: parallel kernels match serial references") {
  const RectDomain dom = build_fractal_domain(ex1(7));
  const GridSpec grid = GridSpec::covering(dom.bbox(), std::ldexp(1.0, -7));
  const auto wt = sobolev::build_weights(dom, fractal_dirichlet_part(), grid);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> w(grid.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = wt.active(i) ? unif(rng) : 0.0;
  for (double p : {2.0, 3.0, 2.5}) {
    const auto a = sobolev::energy(wt, w, p);
    const auto b = sobolev::energy_serial(wt, w, p);
    CHECK(a.zero_order == doctest::Approx(b.zero_order).epsilon(1e-12));
    CHECK(a.gradient == doctest::Approx(b.gradient).epsilon(1e-12));
    std::vector<double> ga(w.size()), gb(w.size());
    sobolev::gradient(wt, w, p, ga);
    sobolev::gradient_serial(wt, w, p, gb);
    double diff = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
      diff = std::max(diff, std::abs(ga[i] - gb[i]));
      scale = std::max(scale, std::abs(gb[i]));
    }
    CHECK(diff <= 1e-12 * scale);
  }
}

TEST_CASE("gradient matches finite differences") {
  const RectDomain dom = build_fractal_domain(ex1(3));
  const GridSpec grid = GridSpec::covering(dom.bbox(), 0.125);
  const auto wt = sobolev::build_weights(dom, fractal_dirichlet_part(), grid);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<double> w(grid.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = wt.active(i) ? unif(rng) : 0.0;
  std::vector<double> g(w.size());
  sobolev::gradient(wt, w, 3.0, g);
  for (std::size_t i = 0; i < w.size(); i += 3) {
    if (!wt.active(i)) continue;
    auto wp = w, wm = w;
    const double e = 1e-6;
    wp[i] += e;
    wm[i] -= e;
    const double fd = (sobolev::energy(wt, wp, 3.0).total() - sobolev::energy(wt, wm, 3.0).total()) / (2 * e);
    CHECK(g[i] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("quadratic distance on a strip matches the tridiagonal oracle") {
  for (auto [delta, rows] : {std::pair{0.07, 4}, std::pair{0.1, 6}, std::pair{0.26, 17}, std::pair{0.5, 32}}) {
    const auto rep = distance_to_test_space(strip_problem(64, delta));
    CHECK(rep.converged);
    CHECK(rep.energy == doctest::Approx(oracle::strip_membership_energy(64, rows)).epsilon(1e-8));
    CHECK(rep.distance == doctest::Approx(std::sqrt(rep.energy)));
  }
}

TEST_CASE("distance is zero when u vanishes near D or the zone is empty") {
  auto prob = strip_problem(64, 0.2);
  prob.u = GridFunction::sample(prob.u.grid, prob.dom, [](Point y) { return y.y > 0.5 ? 1.0 : 0.0; });
  CHECK(distance_to_test_space(prob).distance == 0.0);

  auto far = strip_problem(64, 0.2);
  far.dirichlet = BoundarySet({Segment{{5, 5}, {6, 5}}});
  CHECK(distance_to_test_space(far).distance == 0.0);

  auto zero = strip_problem(64, 0.2);
  zero.u = zero.u.scaled(0.0);
  CHECK(distance_to_test_space(zero).distance == 0.0);
}

TEST_CASE("distance is bounded by the norm of u and grows with the gap") {
  for (double p : {2.0, 3.0}) {
    double prev = 0.0;
    for (double delta : {0.07, 0.1, 0.2, 0.4}) {
      const auto rep = distance_to_test_space(strip_problem(64, delta, p));
      CHECK(rep.converged);
      CHECK(rep.distance <= 1.0 + 1e-9);  // ‖u‖ = |Ω|^{1/p} = 1
      CHECK(rep.distance >= prev - 1e-8);
      prev = rep.distance;
    }
  }
}

TEST_CASE("solution does not depend on the starting point") {
  const RectDomain dom = build_fractal_domain(ex1(5, 3.0));
  const GridSpec grid = GridSpec::covering(dom.bbox(), std::ldexp(1.0, -6));
  const auto u = GridFunction::sample(grid, dom, [](Point y) { return 1.0 + y.x; });
  const MembershipSolver solver(dom, fractal_dirichlet_part(), u, 3.0, 1e-10, 80);
  const auto cold = solver.solve(0.0625);
  std::vector<double> start(grid.size());
  const auto zone = solver.zone(0.0625);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (std::size_t i = 0; i < start.size(); ++i) {
    if (!u.mask[i]) continue;
    start[i] = zone[i] ? u.values[i] : unif(rng);
  }
  const auto warm = solver.solve(0.0625, &start);
  CHECK(cold.converged);
  CHECK(warm.converged);
  CHECK(warm.distance == doctest::Approx(cold.distance).epsilon(5e-6));
}

TEST_CASE("energy_of agrees with the reported minimum") {
  const auto prob = strip_problem(64, 0.1, 3.0);
  const MembershipSolver solver(prob.dom, prob.dirichlet, prob.u, 3.0, 1e-10, 80);
  std::vector<double> w;
  const auto rep = solver.solve(0.1, &w);
  std::vector<double> v(w.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = prob.u.values[i] - w[i];
  CHECK(solver.energy_of(v) == doctest::Approx(rep.energy).epsilon(1e-10));
  CHECK(solver.energy_of(std::vector<double>(w.size(), 0.0)) == doctest::Approx(1.0));
}

TEST_CASE("sweep is nested and thread count does not change it") {
  const RectDomain dom = build_fractal_domain(ex1(6));
  const GridSpec grid = GridSpec::covering(dom.bbox(), std::ldexp(1.0, -7));
  MembershipProblem prob{dom, fractal_dirichlet_part(), GridFunction::sample(grid, dom, [](Point) { return 1.0; }),
                         2.0, 0.125, 1e-8, 60};
  const std::vector<double> deltas{0.125, 0.0625, 0.03125};
  const auto a = membership_sweep(prob, deltas);
  REQUIRE(a.size() == 3);
  for (std::size_t k = 1; k < a.size(); ++k) CHECK(a[k].distance <= a[k - 1].distance + 2e-8);
  parallel::set_threads(1);
  const auto b = membership_sweep(prob, deltas);
  parallel::set_threads(0);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].distance == doctest::Approx(b[k].distance).epsilon(1e-9));
}

TEST_CASE("membership preconditions") {
  auto prob = strip_problem(64, 0.1);
  prob.delta = 0.0;
  CHECK_THROWS_AS(distance_to_test_space(prob), ParameterError);
  prob = strip_problem(64, 0.1);
  prob.p = 1.0;
  CHECK_THROWS_AS(distance_to_test_space(prob), ParameterError);
}

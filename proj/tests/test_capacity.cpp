#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <limits>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "tracelab/capacity.hpp"
#include "tracelab/errors.hpp"
#include "tracelab/parallel.hpp"

using namespace tracelab;
using namespace tracelab::capacity;

namespace {

double solve(std::vector<Point> pts, const GridSpec& grid, double p, double tol = 1e-4) {
  CapacityProblem prob;
  prob.points = std::move(pts);
  prob.grid = grid;
  prob.p = p;
  prob.tol = tol;
  return estimate_capacity(prob).value;
}

}  // namespace

TEST_CASE("G1 matches e^-r / (2 pi r)") {
  for (double lr = -4.0; lr <= std::log10(20.0); lr += 0.05) {
    const double r = std::pow(10.0, lr);
    CHECK(bessel_g1(r) == doctest::Approx(oracle::bessel_g1_closed(r)).epsilon(1e-6));
  }
  CHECK(bessel_g1(Point{0.3, 0.4}) == doctest::Approx(oracle::bessel_g1_closed(0.5)).epsilon(1e-6));
  CHECK_THROWS_AS(bessel_g1(0.0), DomainError);
  CHECK_THROWS_AS(bessel_g1(Point{0.0, 0.0}), DomainError);
}

TEST_CASE("radial mass matches (1 - e^-rho) / (2 pi)") {
  for (double rho : {1e-5, 1e-3, 0.1, 1.0, 5.0, 30.0}) {
    const double expect = -std::expm1(-rho) / (2.0 * std::numbers::pi);
    CHECK(bessel_radial_mass(rho) == doctest::Approx(expect).epsilon(1e-8));
  }
  CHECK(bessel_radial_mass(0.0) == 0.0);
}

TEST_CASE("kernel table") {
  const auto& t = BesselKernelTable::standard();
  CHECK(t.total_mass() == doctest::Approx(1.0).epsilon(1e-3));
  const auto g = t.values();
  for (std::size_t i = 1; i < g.size(); ++i) REQUIRE(g[i] < g[i - 1]);
  for (double r : {1e-6, 1e-3, 0.37, 2.0, 17.0}) {
    CHECK(t.g(r) == doctest::Approx(oracle::bessel_g1_closed(r)).epsilon(1e-8));
  }
  CHECK_THROWS_AS(t.g(100.0), ParameterError);
  CHECK_THROWS_AS(BesselKernelTable(1.0, 0.5, 10), ParameterError);

  const BesselKernelTable small(0.01, 10.0, 5);
  std::ostringstream os;
  small.write_csv(os);
  const std::string csv = os.str();
  CHECK(csv.rfind("r,g1,radial_mass\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}

TEST_CASE("cell kernel against polar and tensor references") {
  const double h = 1.0 / 16;
  const Rect cell{{0.0, 0.0}, {h, h}};
  for (Point e : {Point{0.0, 0.0}, Point{0.5 * h, 0.5 * h}, Point{0.0, 0.3 * h},
                  Point{-0.2 * h, 0.7 * h}, Point{1.5 * h, -0.5 * h}, Point{2.5 * h, 2.0 * h},
                  Point{4.0 * h, 0.1 * h}, Point{-9.0 * h, 3.0 * h}}) {
    CHECK(cell_kernel(e, cell) == doctest::Approx(oracle::bessel_cell_integral(e, cell)).epsilon(1e-6));
  }
}

TEST_CASE("kernel integrates to one over the plane") {
  const GridSpec grid = GridSpec::covering(Rect{{0, 0}, {0, 0}}, 1.0 / 8, 12.0);
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    s += cell_kernel({0.01, -0.02}, grid.cell(i % grid.nx, i / grid.nx));
  }
  CHECK(s == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(s < 1.0);
}

TEST_CASE("segment cloud at h = 1/16 against a dense dual solver") {
  const auto pts = segment_cloud(16);
  REQUIRE(pts.size() == 33);
  const auto prob = CapacityProblem::around(pts, 1.0 / 16, 2.0, 4.0, 1e-6);
  std::vector<std::vector<double>> k(pts.size(), std::vector<double>(prob.grid.size()));
  for (std::size_t j = 0; j < pts.size(); ++j) {
    for (std::size_t i = 0; i < prob.grid.size(); ++i) {
      k[j][i] = oracle::bessel_cell_integral(pts[j], prob.grid.cell(i % prob.grid.nx, i / prob.grid.nx));
    }
  }
  const double expect = oracle::hildreth_capacity(k, prob.grid.h);
  const auto est = estimate_capacity(prob);
  CHECK(est.value == doctest::Approx(expect).epsilon(1e-3));
  CHECK(est.lower_bound <= est.value);
  CHECK(est.residual <= 1e-6);
  CHECK(est.gap <= 1e-6 * est.value);
  CHECK(est.f.size() == prob.grid.size());
}

TEST_CASE("monotone and subadditive on random small sets") {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  const GridSpec grid = GridSpec::covering(Rect{{-0.5, -0.5}, {1.0, 1.0}}, 1.0 / 8, 1.0);
  const double tol = 1e-4;
  for (int trial = 0; trial < 50; ++trial) {
    const double p = trial % 2 ? 3.0 : 2.0;
    std::vector<Point> a, b;
    const int na = 1 + trial % 3, nb = 1 + (trial / 3) % 3;
    for (int i = 0; i < na; ++i) a.push_back({u(rng), u(rng)});
    for (int i = 0; i < nb; ++i) b.push_back({u(rng), u(rng)});
    std::vector<Point> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    const double ca = solve(a, grid, p, tol);
    const double cb = solve(b, grid, p, tol);
    const double cab = solve(ab, grid, p, tol);
    CHECK(ca <= cab * (1.0 + 2.0 * tol));
    CHECK(cb <= cab * (1.0 + 2.0 * tol));
    CHECK(cab <= (ca + cb) * (1.0 + 2.0 * tol));
  }
}

TEST_CASE("a single point loses capacity as the grid refines") {
  double prev = std::numeric_limits<double>::infinity();
  for (double h : {1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32}) {
    const double c = estimate_capacity(CapacityProblem::around({{0.0, 0.0}}, h, 2.0, 4.0)).value;
    CHECK(c < prev);
    prev = c;
  }
}

TEST_CASE("far-apart points add up") {
  const double h = 1.0 / 8;
  const double one = estimate_capacity(CapacityProblem::around({{0.0, 0.0}}, h, 2.0, 4.0, 1e-5)).value;
  const double two =
      estimate_capacity(CapacityProblem::around({{0.0, 0.0}, {12.0, 0.0}}, h, 2.0, 4.0, 1e-5)).value;
  CHECK(two == doctest::Approx(2.0 * one).epsilon(0.2));
}

TEST_CASE("segment cloud is stable under refinement") {
  const std::vector<double> hs{1.0 / 16, 1.0 / 32};
  for (double p : {2.0, 3.0}) {
    const auto est = capacity_of_segment_refinement_study(p, hs);
    REQUIRE(est.size() == 2);
    CHECK(est[0].value > 0.05);
    CHECK(est[1].value == doctest::Approx(est[0].value).epsilon(0.15));
  }
}

TEST_CASE("thread count does not change the estimate") {
  const auto prob = CapacityProblem::around(segment_cloud(4), 1.0 / 8, 3.0, 2.0, 1e-6);
  parallel::set_threads(1);
  const double serial = estimate_capacity(prob).value;
  parallel::set_threads(4);
  const double threaded = estimate_capacity(prob).value;
  parallel::set_threads(0);
  CHECK(serial == threaded);
}

TEST_CASE("invalid problems") {
  CHECK_THROWS_AS(CapacityProblem::around({}, 0.1, 2.0), DomainError);
  CHECK_THROWS_AS(CapacityProblem::around({{0, 0}}, 0.1, 2.0, 0.5), ParameterError);
  CHECK_THROWS_AS(CapacityProblem::around({{0, 0}}, 0.0, 2.0), ParameterError);
  auto prob = CapacityProblem::around({{0, 0}}, 0.25, 1.0);
  CHECK_THROWS_AS(estimate_capacity(prob), ParameterError);
  prob.p = 2.0;
  prob.tol = 0.0;
  CHECK_THROWS_AS(estimate_capacity(prob), ParameterError);
  CHECK_THROWS_AS(segment_cloud(0), ParameterError);
}

TEST_CASE("iteration cap reports the best value") {
  auto prob = CapacityProblem::around(segment_cloud(4), 1.0 / 8, 3.0, 2.0, 1e-12);
  prob.iteration_cap = 1;
  try {
    estimate_capacity(prob);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(std::isfinite(e.best_value()));
    CHECK(e.best_value() > 0.0);
  }
}

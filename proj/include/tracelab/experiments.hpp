#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tracelab/analysis.hpp"
#include "tracelab/geometry.hpp"
#include "tracelab/grid.hpp"
#include "tracelab/membership.hpp"

namespace tracelab::experiments {

using nlohmann::json;

struct ReportScalar {
  std::string name;
  double value = 0.0;
  double tol = 0.0;
};

struct ReportClause {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ReportSeries {
  std::string name;
  std::string csv;
};

struct ExperimentReport {
  std::string name;
  json parameters = json::object();
  std::vector<ReportScalar> scalars;
  std::vector<ReportSeries> series;
  std::vector<ReportClause> clauses;

  void add_scalar(std::string key, double value, double tol);
  void add_clause(std::string key, bool passed, std::string detail = {});
  /// Throws ParameterError for an unknown name.
  const ReportClause& clause(const std::string& key) const;
  double scalar(const std::string& key) const;
  /// True iff there is at least one clause and all passed.
  bool passed() const;

  json to_json() const;
  /// Writes <dir>/<name>.json and <dir>/<name>_<series>.csv per series.
  void write(const std::filesystem::path& dir) const;
};

/// Piecewise-affine cutoff in y₂: 0 below 2^{-j-1} + 2^{-j-3}, 1 above
/// 2^{-j} - 2^{-j-2}, 2^{j+3} y₂ - 5 between.
double example1_approximant(int j, Point y);

/// ∫_Ω |∇u_j|^p: the gradient is 2^{j+3} e₂ on the ramp strip, so this is
/// 2^{(j+3)p} |Ω ∩ strip| with the area computed exactly.
double approximant_gradient_energy(const geometry::RectDomain& dom, int j, double p);

/// (∫_Ω |1 - u_j|^p + |∇u_j|^p)^{1/p}, assuming Ω ∩ strip is a union of full-height
/// vertical pieces so that the ramp integrates to |Ω ∩ strip| / (p + 1).
double approximant_distance(const geometry::RectDomain& dom, int j, double p);

/// (k/8, 0) for k = 0..8.
std::vector<Point> default_sample_points();
/// 2^{-from}, ..., 2^{-to}.
std::vector<double> dyadic_radii(int from, int to);

struct MembershipSettings {
  bool enabled = true;
  int depth = 10;       // fractal depth of the membership domain
  int grid_level = 9;   // h = 2^{-grid_level}
  std::vector<double> deltas = dyadic_radii(3, 7);
  double tol = 1e-6;
  int iteration_cap = 60;
};

struct Example1Config {
  double p = 2.0;
  int depth = 12;
  std::vector<double> radii = dyadic_radii(3, 8);
  std::vector<Point> points = default_sample_points();
  double tol = 1e-3;
  analysis::ScalarField u = [](Point) { return 1.0; };
  int energy_from = 3;  // ratios for j = energy_from..depth-2
  MembershipSettings membership;
};

/// (a) averages of |u| >= 1/(32π) - tol at every sample point and radius;
/// (b) approximant energies halve per level, ratio in [0.3, 0.7];
/// (c) membership distances of u decrease along the gaps.
ExperimentReport verify_example1(const Example1Config& cfg);

struct Example2Config {
  double p = 5.0;
  int depth = 10;
  std::vector<double> radii = dyadic_radii(2, 7);
  std::vector<Point> points = default_sample_points();
  double tol = 1e-3;  // the average at radius r is computed to within tol * r
  double slope_min = 0.9;
  double floor_factor = 0.5;
  MembershipSettings membership;
};

/// (a) log-log slope of the averages >= slope_min at every sample point;
/// (b) final membership distance >= floor_factor x initial. Needs p > 4.
ExperimentReport verify_example2(const Example2Config& cfg);

struct SlicedRectangle {
  geometry::RectDomain dom;
  geometry::BoundarySet dirichlet;
  analysis::ScalarField v;  // sign(y₁) φ(y₂)
};

/// (-2,2) x (-4,4) cut along {0} x [-2,2], as two half rectangles joined by
/// two bridges.
SlicedRectangle sliced_rectangle();

struct SlicedConfig {
  double p = 2.0;
  std::vector<double> radii{0.5, 0.25, 0.125, 0.0625};
  std::vector<Point> points{{0, -0.5}, {0, -0.25}, {0, 0}, {0, 0.25}, {0, 0.5}};
  double tol = 1e-3;
  double grid_h = 1.0 / 64;  // grid for the signed averages
  std::vector<double> capacity_hs{1.0 / 16, 1.0 / 32, 1.0 / 64};
  int cloud_half_count = 16;
  double capacity_floor = 0.05;
  double capacity_spread = 0.15;
};

/// (a) signed full-ball averages 0 ± tol; (b) unsigned interior averages
/// 1 ± tol; (c) segment-cloud capacity >= floor and within spread of the
/// coarsest value on every grid.
ExperimentReport verify_sliced_rectangle(const SlicedConfig& cfg);

struct TruncationConfig {
  std::vector<double> deltas;
  double tol = 1e-6;
  int iteration_cap = 60;
  double vanish_factor = 0.2;
  double floor_factor = 0.5;
};

/// "zero", "vanishing" (final <= vanish x initial), "floored" (final >=
/// floor x initial) or "inconclusive".
std::string sweep_verdict(std::span<const membership::DistanceReport> sweep,
                          double vanish_factor, double floor_factor);

/// Membership sweeps for u and |u|; passes iff both verdicts agree.
ExperimentReport truncation_check(const GridFunction& u, const geometry::RectDomain& dom,
                                  const geometry::BoundarySet& d, double p,
                                  const TruncationConfig& cfg);

/// Hardy functional of u ≡ 1 on the fractal domains of depth from..to.
std::vector<analysis::HardyResult> hardy_partial_sums(const geometry::FractalParams& base,
                                                      int from, int to,
                                                      const analysis::HardyOptions& opt = {});

}  // namespace tracelab::experiments

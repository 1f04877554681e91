#include "tracelab/capacity.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <string>

#include "tracelab/errors.hpp"
#include "tracelab/parallel.hpp"

namespace tracelab::capacity {

namespace {

constexpr double kPi = std::numbers::pi;
const double kSubordination = 1.0 / (4.0 * std::pow(kPi, 1.5));
constexpr double kStep = 0.05;  // trapezoid step in s = log t

// Trapezoid rule in s = log t for ∫ phi(e^s) ds, walking out from s0 until
// the terms fall below 1e-18 of the largest one.
template <class Phi>
double log_trapezoid(double s0, Phi&& phi) {
  double peak = phi(s0);
  double sum = peak;
  for (int dir : {-1, 1}) {
    for (int k = 1; k < 100000; ++k) {
      const double v = phi(s0 + dir * k * kStep);
      sum += v;
      peak = std::max(peak, v);
      if (v < 1e-18 * peak && k > 20) break;
    }
  }
  return sum * kStep;
}

double g1_quadrature(double r) {
  const double t_peak = 0.5 * (-0.5 + std::sqrt(0.25 + r * r));
  const double q = 0.25 * r * r;
  return kSubordination * log_trapezoid(std::log(t_peak), [q](double s) {
           const double t = std::exp(s);
           return std::exp(-t - q / t - 0.5 * s);
         });
}

double mass_quadrature(double rho) {
  if (rho <= 0.0) return 0.0;
  const double q = 0.25 * rho * rho;
  // integrand e^{-t} t^{1/2} (1 - e^{-q/t}) peaks near t = min(q, 1/2)
  const double s0 = std::log(std::min(q, 0.5));
  return 2.0 * kSubordination * log_trapezoid(s0, [q](double s) {
           const double t = std::exp(s);
           return std::exp(-t + 0.5 * s) * -std::expm1(-q / t);
         });
}

struct GaussRule {
  std::array<double, 16> x{};
  std::array<double, 16> w{};
};

GaussRule make_gauss16() {
  GaussRule g;
  constexpr int n = 16;
  for (int i = 0; i < n; ++i) {
    double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    g.x[static_cast<std::size_t>(i)] = z;
    g.w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return g;
}

const GaussRule& gauss16() {
  static const GaussRule g = make_gauss16();
  return g;
}

// Signed ∫ over the triangle (e, e+a, e+b) of G₁(|y - e|) dy.
double triangle_kernel(Point a, Point b, const BesselKernelTable& table) {
  const double cross = a.x * b.y - a.y * b.x;
  const Point ab{b.x - a.x, b.y - a.y};
  const double len2 = ab.x * ab.x + ab.y * ab.y;
  if (len2 == 0.0) return 0.0;
  const double d = std::abs(cross) / std::sqrt(len2);
  if (d < 1e-300) return 0.0;
  const double dot = a.x * b.x + a.y * b.y;
  const double span = std::atan2(cross, dot);
  const double t = -(a.x * ab.x + a.y * ab.y) / len2;
  const double psi_n = std::atan2(a.y + t * ab.y, a.x + t * ab.x);
  const double psi_a = std::atan2(a.y, a.x);
  const GaussRule& g = gauss16();
  double sum = 0.0;
  for (std::size_t k = 0; k < g.x.size(); ++k) {
    const double psi = psi_a + 0.5 * span * (1.0 + g.x[k]);
    const double c = std::cos(psi - psi_n);
    sum += g.w[k] * table.mass(d / std::max(c, 1e-300));
  }
  return 0.5 * span * sum;
}

double box_distance(Point e, const Rect& cell) {
  const double dx = std::max({cell.lo.x - e.x, 0.0, e.x - cell.x1()});
  const double dy = std::max({cell.lo.y - e.y, 0.0, e.y - cell.y1()});
  return std::hypot(dx, dy);
}

}  // namespace

double bessel_g1(double r) {
  if (!(r > 0.0)) throw DomainError("bessel_g1: r must be positive");
  return g1_quadrature(r);
}

double bessel_g1(Point x) { return bessel_g1(std::hypot(x.x, x.y)); }

double bessel_radial_mass(double rho) {
  if (rho < 0.0) throw ParameterError("bessel_radial_mass: rho must be >= 0");
  return mass_quadrature(rho);
}

BesselKernelTable::BesselKernelTable(double r_min, double r_max, std::size_t n) {
  if (!(r_min > 0.0) || !(r_max > r_min) || n < 4) {
    throw ParameterError("BesselKernelTable: need 0 < r_min < r_max and n >= 4");
  }
  log_r0_ = std::log(r_min);
  dlog_ = (std::log(r_max) - log_r0_) / static_cast<double>(n - 1);
  radii_.resize(n);
  g_.resize(n);
  m_.resize(n);
  log_g_.resize(n);
  log_m_.resize(n);
  parallel::for_each_index(n, [&](std::size_t i) {
    const double r = std::exp(log_r0_ + dlog_ * static_cast<double>(i));
    radii_[i] = r;
    g_[i] = g1_quadrature(r);
    m_[i] = mass_quadrature(r);
    log_g_[i] = std::log(g_[i]);
    log_m_[i] = std::log(m_[i]);
  });
  radii_.front() = r_min;
  radii_.back() = r_max;
}

const BesselKernelTable& BesselKernelTable::standard() {
  static const BesselKernelTable table(1e-7, 60.0, 6000);
  return table;
}

double BesselKernelTable::interpolate(const std::vector<double>& logv, double r) const {
  const double u = (std::log(r) - log_r0_) / dlog_;
  const auto n = static_cast<std::ptrdiff_t>(logv.size());
  auto i = static_cast<std::ptrdiff_t>(std::floor(u));
  i = std::clamp<std::ptrdiff_t>(i, 1, n - 3);
  const double s = u - static_cast<double>(i);
  const double p0 = logv[static_cast<std::size_t>(i - 1)];
  const double p1 = logv[static_cast<std::size_t>(i)];
  const double p2 = logv[static_cast<std::size_t>(i + 1)];
  const double p3 = logv[static_cast<std::size_t>(i + 2)];
  // cubic through four consecutive samples
  const double lagrange =
      -p0 * s * (s - 1) * (s - 2) / 6.0 + p1 * (s + 1) * (s - 1) * (s - 2) / 2.0 -
      p2 * (s + 1) * s * (s - 2) / 2.0 + p3 * (s + 1) * s * (s - 1) / 6.0;
  return std::exp(lagrange);
}

double BesselKernelTable::g(double r) const {
  if (!(r >= r_min() && r <= r_max())) {
    throw ParameterError("BesselKernelTable::g: radius outside the table");
  }
  return interpolate(log_g_, r);
}

double BesselKernelTable::mass(double rho) const {
  if (rho <= 0.0) return 0.0;
  if (rho < r_min()) return m_.front() * rho / r_min();
  if (rho >= r_max()) return m_.back();
  return interpolate(log_m_, rho);
}

double BesselKernelTable::total_mass() const {
  // ∫ G r dr = ∫ G r² d(log r)
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < radii_.size(); ++i) {
    const double a = g_[i] * radii_[i] * radii_[i];
    const double b = g_[i + 1] * radii_[i + 1] * radii_[i + 1];
    s += 0.5 * (a + b) * (std::log(radii_[i + 1]) - std::log(radii_[i]));
  }
  // G ~ 1/(2π r) below r_min
  s += g_.front() * radii_.front() * radii_.front();
  return 2.0 * kPi * s;
}

void BesselKernelTable::write_csv(std::ostream& os) const {
  os << "r,g1,radial_mass\n" << std::setprecision(17);
  for (std::size_t i = 0; i < radii_.size(); ++i) {
    os << radii_[i] << ',' << g_[i] << ',' << m_[i] << '\n';
  }
}

double cell_kernel(Point e, const Rect& cell) {
  const BesselKernelTable& table = BesselKernelTable::standard();
  const double side = std::max(cell.size.x, cell.size.y);
  if (box_distance(e, cell) > 3.0 * side) {
    constexpr double g = 0.28867513459481287;  // 1/(2√3)
    const Point c = cell.center();
    double sum = 0.0;
    for (double sx : {-g, g}) {
      for (double sy : {-g, g}) {
        const double r = std::hypot(c.x + sx * cell.size.x - e.x, c.y + sy * cell.size.y - e.y);
        sum += r >= table.r_max() ? 0.0 : table.g(r);
      }
    }
    return 0.25 * sum * cell.area();
  }
  const Point lo{cell.lo.x - e.x, cell.lo.y - e.y};
  const Point hi{cell.x1() - e.x, cell.y1() - e.y};
  const std::array<Point, 4> v{Point{lo.x, lo.y}, Point{hi.x, lo.y}, Point{hi.x, hi.y},
                               Point{lo.x, hi.y}};
  double sum = 0.0;
  for (std::size_t k = 0; k < 4; ++k) sum += triangle_kernel(v[k], v[(k + 1) % 4], table);
  return sum;
}

CapacityProblem CapacityProblem::around(std::vector<Point> points, double h, double p,
                                        double margin, double tol) {
  if (points.empty()) throw DomainError("CapacityProblem: E is empty");
  if (!(h > 0.0)) throw ParameterError("CapacityProblem: h must be positive");
  if (!(margin >= 1.0)) throw ParameterError("CapacityProblem: margin must be >= 1");
  double x0 = points.front().x, x1 = x0, y0 = points.front().y, y1 = y0;
  for (const Point& q : points) {
    x0 = std::min(x0, q.x);
    x1 = std::max(x1, q.x);
    y0 = std::min(y0, q.y);
    y1 = std::max(y1, q.y);
  }
  CapacityProblem prob;
  prob.points = std::move(points);
  prob.grid = GridSpec::covering(Rect{{x0, y0}, {x1 - x0, y1 - y0}}, h, margin);
  prob.p = p;
  prob.tol = tol;
  return prob;
}

void CapacityProblem::validate() const {
  if (points.empty()) throw DomainError("CapacityProblem: E is empty");
  if (!(p > 1.0) || !std::isfinite(p)) throw ParameterError("CapacityProblem: p must be in (1, inf)");
  if (!(tol > 0.0)) throw ParameterError("CapacityProblem: tol must be positive");
  if (!(grid.h > 0.0) || grid.size() == 0) throw ParameterError("CapacityProblem: empty grid");
  if (iteration_cap < 1) throw ParameterError("CapacityProblem: iteration_cap must be >= 1");
}

namespace {

struct Dual {
  const std::vector<double>& k;  // m x n, row-major
  std::size_t m, n;
  double p, h2;

  void primal(const std::vector<double>& lambda, std::vector<double>& z,
              std::vector<double>& f) const {
    parallel::for_each_index(n, [&](std::size_t i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += k[j * n + i] * lambda[j];
      z[i] = s;
      f[i] = s > 0.0 ? std::pow(s / (p * h2), 1.0 / (p - 1.0)) : 0.0;
    });
  }

  std::vector<double> apply(const std::vector<double>& f) const {
    std::vector<double> out(m);
    for (std::size_t j = 0; j < m; ++j) {
      out[j] = parallel::block_sum(n, [&](std::size_t i) { return k[j * n + i] * f[i]; });
    }
    return out;
  }

  double energy(const std::vector<double>& f) const {
    return h2 * parallel::block_sum(n, [&](std::size_t i) { return std::pow(f[i], p); });
  }

  double value(const std::vector<double>& lambda, const std::vector<double>& f) const {
    double s = 0.0;
    for (double l : lambda) s += l;
    return s - (p - 1.0) * energy(f);
  }
};

// Maximizes g·d - d·H d / 2 over d >= lower by cyclic coordinate ascent;
// H is dense symmetric positive semidefinite with a positive diagonal.
std::vector<double> box_qp(const std::vector<double>& hess, const std::vector<double>& grad,
                           const std::vector<double>& lower) {
  const std::size_t m = grad.size();
  std::vector<double> d(m, 0.0), hd(m, 0.0);
  double scale = 0.0;
  for (std::size_t j = 0; j < m; ++j) scale = std::max(scale, std::abs(grad[j]) / hess[j * m + j]);
  for (int sweep = 0; sweep < 20000; ++sweep) {
    double change = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double hjj = hess[j * m + j];
      const double next = std::max(lower[j], d[j] + (grad[j] - hd[j]) / hjj);
      const double delta = next - d[j];
      if (delta == 0.0) continue;
      d[j] = next;
      for (std::size_t i = 0; i < m; ++i) hd[i] += delta * hess[i * m + j];
      change = std::max(change, std::abs(delta));
    }
    if (change <= 1e-13 * scale) break;
  }
  return d;
}

}  // namespace

CapacityEstimate estimate_capacity(const CapacityProblem& prob) {
  prob.validate();
  const std::size_t m = prob.points.size();
  const std::size_t n = prob.grid.size();
  std::vector<double> k(m * n);
  parallel::for_each_index(n, [&](std::size_t i) {
    const Rect cell = prob.grid.cell(i % prob.grid.nx, i / prob.grid.nx);
    for (std::size_t j = 0; j < m; ++j) k[j * n + i] = cell_kernel(prob.points[j], cell);
  });
  const double h2 = prob.grid.h * prob.grid.h;
  const Dual dual{k, m, n, prob.p, h2};

  std::vector<double> z(n), f(n), lambda(m, 1.0);
  dual.primal(lambda, z, f);
  {
    // uniform multipliers scaled so that the least-covered constraint is active
    const std::vector<double> kf = dual.apply(f);
    const double least = *std::min_element(kf.begin(), kf.end());
    if (!(least > 0.0)) throw DomainError("estimate_capacity: E is not covered by the grid");
    const double c = std::pow(1.0 / least, prob.p - 1.0);
    for (double& l : lambda) l *= c;
    dual.primal(lambda, z, f);
  }

  CapacityEstimate best;
  best.value = std::numeric_limits<double>::infinity();
  double g_cur = dual.value(lambda, f);
  for (int it = 1; it <= prob.iteration_cap; ++it) {
    const std::vector<double> kf = dual.apply(f);
    std::vector<double> grad(m);
    double residual = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      grad[j] = 1.0 - kf[j];
      residual = std::max(residual, grad[j]);
    }
    const double least = *std::min_element(kf.begin(), kf.end());
    if (least > 0.0) {
      const double scale = 1.0 / least;
      const double value = std::pow(scale, prob.p) * dual.energy(f);
      if (value < best.value) {
        best.value = value;
        best.f = f;
        for (double& x : best.f) x *= scale;
      }
    }
    best.lower_bound = std::max(best.lower_bound, g_cur);
    best.gap = best.value - best.lower_bound;
    best.residual = residual;
    best.iterations = it;
    if (residual <= prob.tol && best.gap <= prob.tol * best.value) return best;

    // Newton direction from the bound-constrained quadratic model
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = z[i] > 0.0 ? f[i] / ((prob.p - 1.0) * z[i]) : 0.0;
    std::vector<double> hess(m * m, 0.0);
    parallel::for_each_index(m, [&](std::size_t a) {
      const double* ka = &k[a * n];
      for (std::size_t b = 0; b <= a; ++b) {
        const double* kb = &k[b * n];
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += ka[i] * kb[i] * w[i];
        hess[a * m + b] = s;
      }
    });
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) hess[a * m + b] = hess[b * m + a];
      hess[a * m + a] = std::max(hess[a * m + a], 1e-300);
    }
    std::vector<double> lower(m);
    for (std::size_t j = 0; j < m; ++j) lower[j] = -lambda[j];
    const std::vector<double> dir = box_qp(hess, grad, lower);

    // backtracking line search on the concave dual; λ + α d stays feasible
    double alpha = 1.0;
    bool accepted = false;
    std::vector<double> trial(m), zt(n), ft(n);
    for (int ls = 0; ls < 60; ++ls) {
      double lin = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        trial[j] = std::max(0.0, lambda[j] + alpha * dir[j]);  // rounding only
        lin += grad[j] * (trial[j] - lambda[j]);
      }
      dual.primal(trial, zt, ft);
      const double g_new = dual.value(trial, ft);
      if (g_new >= g_cur + 1e-4 * lin && g_new >= g_cur) {
        lambda.swap(trial);
        z.swap(zt);
        f.swap(ft);
        g_cur = g_new;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  throw ConvergenceError("estimate_capacity: iteration cap reached (best value " +
                             std::to_string(best.value) + ")",
                         best.value);
}

std::vector<Point> segment_cloud(int n) {
  if (n < 1) throw ParameterError("segment_cloud: n must be >= 1");
  std::vector<Point> pts;
  for (int k = -n; k <= n; ++k) pts.push_back({0.0, static_cast<double>(k) / n});
  return pts;
}

std::vector<CapacityEstimate> capacity_of_segment_refinement_study(double p,
                                                                   std::span<const double> hs,
                                                                   int cloud_half_count,
                                                                   double tol) {
  std::vector<CapacityEstimate> out;
  for (double h : hs) {
    out.push_back(estimate_capacity(
        CapacityProblem::around(segment_cloud(cloud_half_count), h, p, 4.0, tol)));
  }
  return out;
}

}  // namespace tracelab::capacity

#pragma once

// Optimisation of A(V) over balls |V|_{r(x)} <= R.
//
// The minimum is computed by alternating between the u-block (a Rayleigh
// minimisation for fixed V, warm-started from the previous u) and the
// V-block (the linear problem min int V w over the ball, with
// w = |u|^m / (m I(u)) the sensitivity of J_V(u) / I(u) to V). Each block
// step cannot increase the value, so the iteration is monotone. The maximum
// is a concave problem in V (an infimum of affine functions) and is
// approached by Frank-Wolfe steps with backtracking on the step length.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "nhe/eigensolve.hpp"
#include "nhe/error.hpp"
#include "nhe/functionals.hpp"
#include "nhe/lebesgue.hpp"
#include "nhe/roots.hpp"

namespace nhe {

struct BallSpec {
  double radius = 0.0;
  ExponentField r;

  BallSpec(double radius_, ExponentField r_) : radius(radius_), r(std::move(r_)) {
    if (!(radius >= 0.0) || !std::isfinite(radius)) throw ValidationError("ball radius must be finite and >= 0");
  }

  bool contains(const GridFunction& v, double tolerance = 1e-8) const {
    return luxemburg_norm(v, r) <= radius + tolerance;
  }
};

struct PotentialOptions {
  SolverOptions solver;
  int max_alternations = 100;
  /// Alternation stops once successive values differ by less than this
  /// (relative to max(1, |A|)).
  double stall_tolerance = 1e-9;
  double membership_tolerance = 1e-8;
  /// Zero radius accepted when |A_star(R0)| < zero_tolerance * A_star(0).
  double zero_tolerance = 1e-3;
  int max_bisections = 60;

  void validate() const {
    solver.validate();
    if (max_alternations < 1) throw ValidationError("max_alternations must be >= 1");
    if (!(stall_tolerance > 0.0)) throw ValidationError("stall_tolerance must be positive");
    if (!(zero_tolerance > 0.0)) throw ValidationError("zero_tolerance must be positive");
  }
};

struct PotentialResult {
  double value = 0.0;
  GridFunction potential;
  EigenResult eigen;
  int alternations = 0;
  bool converged = false;
  /// A after every completed u-step.
  std::vector<double> history;
};

struct SweepRow {
  double R = 0.0;
  double a_star = 0.0;
  GridFunction v_star;
  int iterations = 0;
  bool converged = false;
  double residual = 0.0;
};

namespace detail {

inline constexpr double kMultiplierTolerance = 1e-14;

// V = sign * R (kappa w / r)^{1/(r-1)} with kappa chosen so that the modular
// of V / R is 1. These are the KKT points of the linear objective on the ball
// for the nodal modular, which is convex, so they are exact optimisers.
inline GridFunction ball_linear_step(const GridFunction& w, const ExponentField& r, double radius, double sign) {
  require_same_grid(w.grid(), r.grid(), "ball_linear_step");
  for (double x : w.values()) {
    if (x < 0.0) throw ValidationError("ball weight must be non-negative");
  }
  if (radius == 0.0 || w.is_zero()) return GridFunction::zero(w.grid_ptr(), false);
  const auto& weights = w.grid().node_weights();
  auto shape = [&](std::size_t n, double kappa) { return std::pow(kappa * w[n] / r[n], 1.0 / (r[n] - 1.0)); };
  auto modular_at = [&](double kappa) {
    double s = 0.0;
    for (std::size_t n = 0; n < w.size(); ++n) {
      if (w[n] > 0.0) s += weights[n] * std::pow(shape(n, kappa), r[n]);
    }
    return s;
  };
  const auto b = roots::geometric_bisect(modular_at, 1.0, 1.0, 1.0, /*increasing=*/true, kMultiplierTolerance);
  std::vector<double> v(w.size(), 0.0);
  for (std::size_t n = 0; n < v.size(); ++n) {
    if (w[n] > 0.0) v[n] = sign * radius * shape(n, b.below);
  }
  return GridFunction(w.grid_ptr(), std::move(v), false);
}

/// w = |u|^m / (m I(u)), the derivative of J_V(u) / I(u) with respect to V.
inline GridFunction potential_sensitivity(const ProblemSpec& p, const GridFunction& u) {
  const double i = functional_I(p, u);
  if (!(i > 0.0)) throw ValidationError("sensitivity undefined at zero");
  std::vector<double> w(u.size());
  for (std::size_t n = 0; n < w.size(); ++n) w[n] = std::pow(std::abs(u[n]), p.m()[n]) / (p.m()[n] * i);
  return GridFunction(u.grid_ptr(), std::move(w), false);
}

inline double integrate_product(const GridFunction& a, const GridFunction& b) {
  const auto& w = a.grid().node_weights();
  double s = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) s += w[n] * a[n] * b[n];
  return s;
}

inline EigenResult solve_with_warm_start(const ProblemSpec& p, const SolverOptions& base,
                                         const std::optional<GridFunction>& u, bool full) {
  SolverOptions o = base;
  if (u) o.warm_starts.insert(o.warm_starts.begin(), *u);
  if (!full) o.restarts = 1;
  return minimize_rayleigh_A(p, o);
}

}  // namespace detail

/// argmin of int V w over |V|_r <= R.
inline GridFunction ball_linear_minimize(const GridFunction& w, const ExponentField& r, double radius) {
  return detail::ball_linear_step(w, r, radius, -1.0);
}

/// argmax of int V w over |V|_r <= R.
inline GridFunction ball_linear_maximize(const GridFunction& w, const ExponentField& r, double radius) {
  return detail::ball_linear_step(w, r, radius, 1.0);
}

/// inf of A(V) over the ball. `start` is an optional feasible initial potential
/// and `start_u` an optional initial eigenfunction guess.
inline PotentialResult a_star(const ProblemSpec& problem, const BallSpec& ball, const PotentialOptions& o,
                              const std::optional<GridFunction>& start = std::nullopt,
                              const std::optional<GridFunction>& start_u = std::nullopt) {
  o.validate();
  detail::require_same_grid(problem.grid(), ball.r.grid(), "ball exponent");
  PotentialResult out;
  GridFunction v = start ? *start : GridFunction::zero(problem.grid_ptr(), false);
  if (!ball.contains(v, o.membership_tolerance)) throw ValidationError("initial potential lies outside the ball");
  std::optional<GridFunction> u = start_u;
  double previous = std::numeric_limits<double>::infinity();
  for (int k = 0; k < o.max_alternations; ++k) {
    const ProblemSpec p = problem.with_potential(v);
    EigenResult res = detail::solve_with_warm_start(p, o.solver, u, k == 0);
    out.history.push_back(res.value);
    out.alternations = k + 1;
    out.value = res.value;
    out.potential = v;
    u = res.minimizer;
    out.eigen = std::move(res);
    if (std::abs(previous - out.value) < o.stall_tolerance * std::max(1.0, std::abs(out.value))) {
      out.converged = true;
      break;
    }
    previous = out.value;
    if (ball.radius == 0.0) {
      out.converged = true;
      break;
    }
    v = ball_linear_minimize(detail::potential_sensitivity(p, *u), ball.r, ball.radius);
  }
  out.converged = out.converged && out.eigen.converged;
  return out;
}

/// sup of A(V) over the ball by Frank-Wolfe on the concave map V -> A(V).
inline PotentialResult a_upper(const ProblemSpec& problem, const BallSpec& ball, const PotentialOptions& o) {
  o.validate();
  detail::require_same_grid(problem.grid(), ball.r.grid(), "ball exponent");
  PotentialResult out;
  GridFunction v = GridFunction::zero(problem.grid_ptr(), false);
  EigenResult current = minimize_rayleigh_A(problem.with_potential(v), o.solver);
  out.history.push_back(current.value);
  out.alternations = 1;
  if (ball.radius == 0.0) {
    out.value = current.value;
    out.potential = v;
    out.converged = current.converged;
    out.eigen = std::move(current);
    return out;
  }
  for (int k = 1; k < o.max_alternations; ++k) {
    const ProblemSpec p = problem.with_potential(v);
    const GridFunction w = detail::potential_sensitivity(p, current.minimizer);
    const GridFunction s = ball_linear_maximize(w, ball.r, ball.radius);
    // Duality gap bound of the linearisation.
    const double gap = detail::integrate_product(s, w) - detail::integrate_product(v, w);
    if (gap < o.stall_tolerance * std::max(1.0, std::abs(current.value))) {
      out.converged = true;
      break;
    }
    bool improved = false;
    for (double gamma : {1.0, 0.5, 0.25, 0.125}) {
      std::vector<double> trial(v.size());
      for (std::size_t n = 0; n < trial.size(); ++n) trial[n] = v[n] + gamma * (s[n] - v[n]);
      GridFunction tv(problem.grid_ptr(), std::move(trial), false);
      EigenResult r = detail::solve_with_warm_start(problem.with_potential(tv), o.solver, current.minimizer, true);
      if (r.value > current.value) {
        improved = r.value - current.value >= o.stall_tolerance * std::max(1.0, std::abs(current.value));
        v = std::move(tv);
        current = std::move(r);
        break;
      }
    }
    out.history.push_back(current.value);
    out.alternations = k + 1;
    if (!improved) {
      out.converged = true;
      break;
    }
  }
  out.value = current.value;
  out.potential = v;
  out.converged = out.converged && current.converged;
  out.eigen = std::move(current);
  return out;
}

/// a_star over ascending radii, each warm-started from the previous optimum.
inline std::vector<SweepRow> a_star_sweep(const ProblemSpec& problem, const ExponentField& r,
                                          const std::vector<double>& radii, const PotentialOptions& o) {
  for (std::size_t k = 1; k < radii.size(); ++k) {
    if (radii[k] < radii[k - 1]) throw ValidationError("sweep radii must be ascending");
  }
  std::vector<SweepRow> rows;
  std::optional<GridFunction> v;
  std::optional<GridFunction> u;
  for (double radius : radii) {
    const BallSpec ball(radius, r);
    PotentialResult res = a_star(problem, ball, o, v, u);
    rows.push_back({radius, res.value, res.potential, res.alternations, res.converged, res.eigen.residual});
    v = res.potential;
    u = res.eigen.minimizer;
  }
  return rows;
}

/// True when consecutive rows are non-increasing within `tolerance`.
inline bool sweep_is_monotone(const std::vector<SweepRow>& rows, double tolerance) {
  for (std::size_t k = 1; k < rows.size(); ++k) {
    if (rows[k].a_star > rows[k - 1].a_star + tolerance) return false;
  }
  return true;
}

/// Every row equals the minimum over rows with smaller or equal radius and the
/// maximum over rows with larger or equal radius, within `tolerance`.
inline bool sweep_is_envelope(const std::vector<SweepRow>& rows, double tolerance) {
  for (std::size_t k = 0; k < rows.size(); ++k) {
    double lower = std::numeric_limits<double>::infinity();
    double upper = -std::numeric_limits<double>::infinity();
    for (const auto& s : rows) {
      if (s.R <= rows[k].R) lower = std::min(lower, s.a_star);
      if (s.R >= rows[k].R) upper = std::max(upper, s.a_star);
    }
    if (std::abs(rows[k].a_star - lower) > tolerance || std::abs(rows[k].a_star - upper) > tolerance) return false;
  }
  return true;
}

struct ZeroRadius {
  double radius = 0.0;
  double value = 0.0;
  double value_at_zero = 0.0;
  int bisections = 0;
  bool converged = false;
};

/// Radius R0 in (0, R_max) with A_star(R0) = 0 by bisection on R.
inline ZeroRadius find_zero_radius(const ProblemSpec& problem, const ExponentField& r, double r_max,
                                   const PotentialOptions& o) {
  if (!(r_max > 0.0)) throw ValidationError("R_max must be positive");
  const PotentialResult at_zero = a_star(problem, BallSpec(0.0, r), o);
  if (!(at_zero.value > 0.0)) throw ValidationError("A_star(0) must be positive to bracket a zero radius");
  PotentialResult hi_res = a_star(problem, BallSpec(r_max, r), o, std::nullopt, at_zero.eigen.minimizer);
  if (!(hi_res.value < 0.0)) {
    throw ValidationError("A_star(R_max) is not negative; increase R_max");
  }
  ZeroRadius z;
  z.value_at_zero = at_zero.value;
  double lo = 0.0;
  double hi = r_max;
  GridFunction lo_v = at_zero.potential;
  GridFunction lo_u = at_zero.eigen.minimizer;
  z.radius = hi;
  z.value = hi_res.value;
  for (int k = 0; k < o.max_bisections; ++k) {
    const double mid = 0.5 * (lo + hi);
    const PotentialResult m = a_star(problem, BallSpec(mid, r), o, lo_v, lo_u);
    z.bisections = k + 1;
    z.radius = mid;
    z.value = m.value;
    if (std::abs(m.value) < o.zero_tolerance * at_zero.value) {
      z.converged = true;
      break;
    }
    if (m.value > 0.0) {
      lo = mid;
      lo_v = m.potential;
      lo_u = m.eigen.minimizer;
    } else {
      hi = mid;
    }
  }
  return z;
}

/// mu(ball_R minus ball_R0) = -A_star(R).
inline double mu_set_function(const ProblemSpec& problem, const ExponentField& r, double radius, double r0,
                              const PotentialOptions& o) {
  if (radius < r0) throw ValidationError("mu needs R >= R0");
  return -a_star(problem, BallSpec(radius, r), o).value;
}

struct ContinuityProbe {
  double radius = 0.0;
  std::vector<double> deltas;
  std::vector<double> differences;
  std::vector<double> ratios;
  bool consistent = false;
};

/// |A_star(R + delta) - A_star(R)| for delta = 0.1 R, 0.05 R, 0.025 R; the
/// probe is consistent when every successive ratio is below 1.
inline ContinuityProbe continuity_probe(const ProblemSpec& problem, const ExponentField& r, double radius,
                                        const PotentialOptions& o) {
  ContinuityProbe c;
  c.radius = radius;
  const PotentialResult base = a_star(problem, BallSpec(radius, r), o);
  for (double f : {0.1, 0.05, 0.025}) {
    const double d = f * radius;
    const PotentialResult s = a_star(problem, BallSpec(radius + d, r), o, base.potential, base.eigen.minimizer);
    c.deltas.push_back(d);
    c.differences.push_back(std::abs(s.value - base.value));
  }
  c.consistent = true;
  for (std::size_t k = 1; k < c.differences.size(); ++k) {
    const double ratio = c.differences[k - 1] > 0.0 ? c.differences[k] / c.differences[k - 1] : 0.0;
    c.ratios.push_back(ratio);
    c.consistent = c.consistent && ratio < 1.0;
  }
  return c;
}

}  // namespace nhe

#pragma once

// Multi-start descent for the Rayleigh-type quotients and for the energy
// J - lambda I.
//
// Iterates are full nodal vectors with zero boundary values. The descent
// direction is the gradient preconditioned by the discrete Dirichlet
// stiffness matrix (the H^1_0 Riesz map), the step is chosen by Armijo
// backtracking, and after every step the iterate is rescaled along its ray
// by a one-dimensional minimisation, since none of the objectives is
// homogeneous.

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nhe/conditions.hpp"
#include "nhe/error.hpp"
#include "nhe/functionals.hpp"
#include "nhe/grid.hpp"

namespace nhe {

enum class DescentMethod { steepest, lbfgs };

struct SolverOptions {
  DescentMethod method = DescentMethod::lbfgs;
  /// Correction pairs kept by the quasi-Newton direction.
  int memory = 8;
  int restarts = 8;
  int max_iterations = 4000;
  double armijo = 1e-4;
  double backtrack = 0.5;
  /// First trial step as a fraction of max|u| / max|direction|.
  double initial_step = 1.0;
  double gradient_tolerance = 1e-6;
  std::uint64_t seed = 0;
  /// A solution with max|u| below this is reported as trivial.
  double triviality_threshold = 1e-6;
  /// Tried before the bump and the random starts.
  std::vector<GridFunction> warm_starts;

  void validate() const {
    if (restarts < 1) throw ValidationError("restarts must be >= 1");
    if (max_iterations < 1) throw ValidationError("max_iterations must be >= 1");
    if (memory < 1) throw ValidationError("memory must be >= 1");
    if (!(armijo > 0.0 && armijo < 1.0)) throw ValidationError("armijo constant must lie in (0, 1)");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw ValidationError("backtracking factor must lie in (0, 1)");
    if (!(initial_step > 0.0)) throw ValidationError("initial_step must be positive");
    if (!(gradient_tolerance > 0.0)) throw ValidationError("gradient_tolerance must be positive");
    if (!(triviality_threshold > 0.0)) throw ValidationError("triviality_threshold must be positive");
  }
};

struct RestartRecord {
  double value = 0.0;
  double residual = 0.0;
  double max_abs = 0.0;
  int iterations = 0;
  bool converged = false;
  bool trivial = false;
};

struct EigenResult {
  double value = 0.0;
  GridFunction minimizer;
  double residual = 0.0;
  bool converged = false;
  bool trivial = false;
  int restarts_used = 0;
  int best_restart = 0;
  int iterations = 0;
  std::vector<RestartRecord> restarts;
  ConditionReport report;
};

/// Dirichlet stiffness matrix on the interior nodes, factorised once.
class StiffnessPreconditioner {
 public:
  explicit StiffnessPreconditioner(const Grid& g) : interior_(g.interior_nodes()) {
    std::vector<int> slot(g.node_count(), -1);
    for (std::size_t k = 0; k < interior_.size(); ++k) slot[interior_[k]] = static_cast<int>(k);
    std::vector<Eigen::Triplet<double>> trips;
    const double vol = g.cell_volume();
    for (std::size_t b : g.cell_base_nodes()) {
      for (int a = 0; a < g.dimension(); ++a) {
        const double k = vol / (g.spacing(a) * g.spacing(a));
        const int i = slot[b];
        const int j = slot[b + g.stride(a)];
        if (i >= 0) trips.emplace_back(i, i, k);
        if (j >= 0) trips.emplace_back(j, j, k);
        if (i >= 0 && j >= 0) {
          trips.emplace_back(i, j, -k);
          trips.emplace_back(j, i, -k);
        }
      }
    }
    const auto n = static_cast<Eigen::Index>(interior_.size());
    Eigen::SparseMatrix<double> k(n, n);
    k.setFromTriplets(trips.begin(), trips.end());
    solver_.compute(k);
    if (solver_.info() != Eigen::Success) throw Error("stiffness factorisation failed");
  }

  /// Returns K^{-1} r restricted to the interior, scattered into a nodal vector.
  std::vector<double> apply(std::span<const double> r) const {
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(interior_.size()));
    for (std::size_t k = 0; k < interior_.size(); ++k) rhs[static_cast<Eigen::Index>(k)] = r[interior_[k]];
    const Eigen::VectorXd sol = solver_.solve(rhs);
    std::vector<double> out(r.size(), 0.0);
    for (std::size_t k = 0; k < interior_.size(); ++k) out[interior_[k]] = sol[static_cast<Eigen::Index>(k)];
    return out;
  }

 private:
  std::vector<std::size_t> interior_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver_;
};

namespace detail {

inline double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

inline std::uint64_t restart_seed(std::uint64_t seed, std::uint64_t k) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (k + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Evaluation {
  double value = 0.0;
  double residual = 0.0;
  /// Size of the largest terms entering `value`, used as rounding scale.
  double magnitude = 0.0;
  std::vector<double> gradient;
};

/// Q = N / D for one of the quotient kinds.
class QuotientObjective {
 public:
  QuotientObjective(const ProblemSpec& p, QuotientKind kind) : p_(p), kind_(kind) {}

  static constexpr bool allows_trivial = false;

  double value(std::span<const double> x) const {
    const auto q = quotient_parts(p_, kind_, x, false);
    if (!(q.denominator > 0.0)) return std::numeric_limits<double>::infinity();
    return q.numerator / q.denominator;
  }

  Evaluation evaluate(std::span<const double> x) const {
    const auto q = quotient_parts(p_, kind_, x, true);
    Evaluation e;
    e.value = q.numerator / q.denominator;
    e.magnitude = q.numerator_magnitude / q.denominator;
    e.gradient.resize(x.size());
    const auto& w = p_.grid().node_weights();
    const double scale = (1.0 + std::abs(e.value)) * (1.0 + q.denominator);
    for (std::size_t n = 0; n < x.size(); ++n) {
      if (p_.grid().is_boundary(n)) {
        e.gradient[n] = 0.0;
        continue;
      }
      const double defect = q.grad_numerator[n] - e.value * q.grad_denominator[n];
      e.gradient[n] = defect / q.denominator;
      e.residual = std::max(e.residual, std::abs(defect) / (w[n] * scale));
    }
    return e;
  }

 private:
  const ProblemSpec& p_;
  QuotientKind kind_;
};

/// T = J - lambda I.
class EnergyObjective {
 public:
  EnergyObjective(const ProblemSpec& p, double lambda) : p_(p), lambda_(lambda) {}

  static constexpr bool allows_trivial = true;

  double value(std::span<const double> x) const {
    return gradient_energy(p_, x) + potential_energy(p_, x) - lambda_ * lower_order_energy(p_, x);
  }

  Evaluation evaluate(std::span<const double> x) const {
    Evaluation e;
    std::vector<double> gj(x.size(), 0.0);
    std::vector<double> gi(x.size(), 0.0);
    const double grad_part = gradient_energy(p_, x, gj.data());
    const double j = grad_part + potential_energy(p_, x, gj.data());
    const double i = lower_order_energy(p_, x, gi.data());
    e.value = j - lambda_ * i;
    e.magnitude = grad_part + abs_potential_term(p_, x, false) + std::abs(lambda_) * i;
    e.gradient.resize(x.size());
    const auto& w = p_.grid().node_weights();
    const double scale = (1.0 + std::abs(lambda_)) * (1.0 + i);
    for (std::size_t n = 0; n < x.size(); ++n) {
      if (p_.grid().is_boundary(n)) {
        e.gradient[n] = 0.0;
        continue;
      }
      e.gradient[n] = gj[n] - lambda_ * gi[n];
      e.residual = std::max(e.residual, std::abs(e.gradient[n]) / (w[n] * scale));
    }
    return e;
  }

 private:
  const ProblemSpec& p_;
  double lambda_;
};

inline constexpr double kRayProbe = 0.05;
inline constexpr double kRayMaxLog = 40.0;
inline constexpr int kRayBits = 24;
// Relative improvement below which a rescaling is treated as noise.
inline constexpr double kRayNoise = 1e-13;

/// Minimises s -> f(s x) over s > 0 in log scale. Returns the chosen log s
/// (0 when the ray is flat or already optimal to probe resolution).
/// `floor_log` bounds the search from below.
template <class Objective>
double ray_search(const Objective& obj, std::span<const double> x, double f0, double floor_log) {
  std::vector<double> y(x.size());
  auto f = [&](double sigma) {
    const double s = std::exp(sigma);
    for (std::size_t n = 0; n < x.size(); ++n) y[n] = s * x[n];
    return obj.value(y);
  };
  const double lo_probe = f(-kRayProbe);
  const double hi_probe = f(kRayProbe);
  const double flat = 1e-14 * std::max(1.0, std::abs(f0));
  if (std::abs(lo_probe - f0) <= flat && std::abs(hi_probe - f0) <= flat) return 0.0;
  if (f0 <= lo_probe && f0 <= hi_probe) {
    const auto r = boost::math::tools::brent_find_minima(f, -kRayProbe, kRayProbe, kRayBits);
    return r.second < f0 - kRayNoise * std::abs(f0) ? r.first : 0.0;
  }
  // Walk downhill with doubling steps until the function turns up.
  const double dir = lo_probe < hi_probe ? -1.0 : 1.0;
  double a = 0.0;
  double b = dir * kRayProbe;
  double fb = dir < 0.0 ? lo_probe : hi_probe;
  double step = kRayProbe;
  for (;;) {
    step *= 2.0;
    double c = b + dir * step;
    if (dir < 0.0 && c < floor_log) c = floor_log;
    if (std::abs(c) > kRayMaxLog) c = dir * kRayMaxLog;
    if (c == b) return b;
    const double fc = f(c);
    if (!(fc < fb)) {
      const auto r = boost::math::tools::brent_find_minima(f, std::min(a, c), std::max(a, c), kRayBits);
      return r.second < fb ? r.first : b;
    }
    a = b;
    b = c;
    fb = fc;
  }
}

/// Limited-memory inverse-Hessian approximation whose initial matrix is a
/// scaled K^{-1}.
class QuasiNewtonHistory {
 public:
  explicit QuasiNewtonHistory(std::size_t memory) : memory_(memory) {}

  bool empty() const { return s_.empty(); }
  void clear() {
    s_.clear();
    y_.clear();
    rho_.clear();
  }

  void push(std::span<const double> x, std::span<const double> x_old, std::span<const double> g,
            std::span<const double> g_old) {
    std::vector<double> s(x.size());
    std::vector<double> y(x.size());
    double sy = 0.0;
    double ss = 0.0;
    double yy = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
      s[n] = x[n] - x_old[n];
      y[n] = g[n] - g_old[n];
      sy += s[n] * y[n];
      ss += s[n] * s[n];
      yy += y[n] * y[n];
    }
    if (!(sy > 1e-12 * std::sqrt(ss * yy))) return;
    if (s_.size() == memory_) {
      s_.erase(s_.begin());
      y_.erase(y_.begin());
      rho_.erase(rho_.begin());
    }
    s_.push_back(std::move(s));
    y_.push_back(std::move(y));
    rho_.push_back(1.0 / sy);
  }

  /// H g by the two-loop recursion.
  std::vector<double> direction(std::span<const double> g, const StiffnessPreconditioner& pre) const {
    if (s_.empty()) return pre.apply(g);
    std::vector<double> q(g.begin(), g.end());
    std::vector<double> a(s_.size());
    for (std::size_t k = s_.size(); k-- > 0;) {
      a[k] = rho_[k] * dot(s_[k], q);
      for (std::size_t n = 0; n < q.size(); ++n) q[n] -= a[k] * y_[k][n];
    }
    std::vector<double> r = pre.apply(q);
    const auto& yl = y_.back();
    const double gamma = 1.0 / (rho_.back() * dot(yl, pre.apply(yl)));
    for (double& v : r) v *= gamma;
    for (std::size_t k = 0; k < s_.size(); ++k) {
      const double b = rho_[k] * dot(y_[k], r);
      for (std::size_t n = 0; n < r.size(); ++n) r[n] += (a[k] - b) * s_[k][n];
    }
    return r;
  }

 private:
  std::size_t memory_;
  std::vector<std::vector<double>> s_;
  std::vector<std::vector<double>> y_;
  std::vector<double> rho_;
};

struct DescentOutcome {
  std::vector<double> x;
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool trivial = false;
};

inline constexpr int kMaxBacktracks = 60;
inline constexpr double kRoundingBand = 1e-12;
inline constexpr double kCurvature = 0.9;
inline constexpr double kApproximateUpper = 0.8;

template <class Objective>
DescentOutcome descend(const Objective& obj, const StiffnessPreconditioner& pre, std::vector<double> x,
                       const SolverOptions& o) {
  DescentOutcome out;
  const double trivial_log_floor = std::log(0.1 * o.triviality_threshold);
  auto rescale = [&](double f0) {
    const double m = max_abs(x);
    const double floor_log = Objective::allows_trivial ? trivial_log_floor - std::log(m) : -kRayMaxLog;
    const double sigma = ray_search(obj, x, f0, floor_log);
    if (sigma != 0.0) {
      const double s = std::exp(sigma);
      for (double& v : x) v *= s;
    }
  };
  rescale(obj.value(x));
  double alpha = -1.0;
  QuasiNewtonHistory history(static_cast<std::size_t>(o.memory));
  Evaluation e = obj.evaluate(x);
  for (int it = 0;; ++it) {
    out.iterations = it;
    if (e.residual < o.gradient_tolerance) {
      out.converged = true;
      break;
    }
    if (Objective::allows_trivial && max_abs(x) < o.triviality_threshold) {
      out.trivial = true;
      out.converged = true;
      break;
    }
    if (it >= o.max_iterations) break;
    std::vector<double> dir =
        o.method == DescentMethod::lbfgs ? history.direction(e.gradient, pre) : pre.apply(e.gradient);
    double slope = 0.0;
    for (std::size_t n = 0; n < dir.size(); ++n) {
      dir[n] = -dir[n];
      slope += e.gradient[n] * dir[n];
    }
    if (!(slope < 0.0) && !history.empty()) {
      history.clear();
      dir = pre.apply(e.gradient);
      slope = 0.0;
      for (std::size_t n = 0; n < dir.size(); ++n) {
        dir[n] = -dir[n];
        slope += e.gradient[n] * dir[n];
      }
    }
    if (!(slope < 0.0)) break;
    if (o.method == DescentMethod::lbfgs && !history.empty()) {
      alpha = 1.0;
    } else if (alpha < 0.0 || o.method == DescentMethod::lbfgs) {
      alpha = o.initial_step * max_abs(x) / max_abs(dir);
    }
    std::vector<double> trial(x.size());
    bool accepted = false;
    bool first_try = true;
    double f_trial = 0.0;
    for (int k = 0; k < kMaxBacktracks; ++k) {
      for (std::size_t n = 0; n < x.size(); ++n) trial[n] = x[n] + alpha * dir[n];
      f_trial = obj.value(trial);
      if (f_trial <= e.value + o.armijo * alpha * slope) {
        accepted = true;
        break;
      }
      // Inside the rounding band of f the sufficient-decrease test is
      // meaningless; accept when the directional derivative shows progress.
      if (f_trial <= e.value + kRoundingBand * std::max(std::abs(e.value), e.magnitude)) {
        const double d_trial = dot(obj.evaluate(trial).gradient, dir);
        if (d_trial >= kCurvature * slope && d_trial <= -kApproximateUpper * slope) {
          accepted = true;
          break;
        }
      }
      alpha *= o.backtrack;
      first_try = false;
    }
    if (!accepted) {
      if (history.empty()) break;
      history.clear();
      continue;
    }
    if (first_try) alpha *= 2.0;
    std::vector<double> previous_x = x;
    std::vector<double> previous_g = std::move(e.gradient);
    x.swap(trial);
    rescale(f_trial);
    e = obj.evaluate(x);
    if (o.method == DescentMethod::lbfgs) history.push(x, previous_x, e.gradient, previous_g);
  }
  out.value = e.value;
  out.residual = e.residual;
  out.x = std::move(x);
  return out;
}

/// Product of sine half-waves over the active axes, 0 on the boundary.
inline std::vector<double> bump(const Grid& g) {
  std::vector<double> v(g.node_count(), 0.0);
  for (std::size_t n = 0; n < v.size(); ++n) {
    if (g.is_boundary(n)) continue;
    const auto x = g.coordinates(n);
    double b = 1.0;
    for (int a = 0; a < g.dimension(); ++a) {
      b *= std::sin(std::numbers::pi * (x[a] - g.lower(a)) / (g.upper(a) - g.lower(a)));
    }
    v[n] = b;
  }
  return v;
}

/// Random test function smoothed by one application of K^{-1} M, scaled to max 1.
inline std::vector<double> smooth_random_start(const Grid& g, const GridPtr& gp, const StiffnessPreconditioner& pre,
                                               std::uint64_t seed) {
  const GridFunction r = random_test_function(gp, seed);
  std::vector<double> mr(r.values());
  const auto& w = g.node_weights();
  for (std::size_t n = 0; n < mr.size(); ++n) mr[n] *= w[n];
  std::vector<double> s = pre.apply(mr);
  const double m = max_abs(s);
  if (m > 0.0) {
    for (double& v : s) v /= m;
  }
  return s;
}

inline std::vector<std::vector<double>> initial_guesses(const ProblemSpec& p, const StiffnessPreconditioner& pre,
                                                        const SolverOptions& o) {
  std::vector<std::vector<double>> starts;
  for (const auto& w : o.warm_starts) {
    require_same_grid(p.grid(), w.grid(), "warm start");
    if (w.is_zero()) continue;
    std::vector<double> v(w.values());
    for (std::size_t n = 0; n < v.size(); ++n) {
      if (p.grid().is_boundary(n)) v[n] = 0.0;
    }
    starts.push_back(std::move(v));
  }
  starts.push_back(bump(p.grid()));
  for (int k = 1; k < o.restarts; ++k) {
    starts.push_back(smooth_random_start(p.grid(), p.grid_ptr(), pre, restart_seed(o.seed, static_cast<std::uint64_t>(k))));
  }
  return starts;
}

template <class Objective>
EigenResult multistart(const ProblemSpec& p, const Objective& obj, const SolverOptions& o) {
  o.validate();
  const StiffnessPreconditioner pre(p.grid());
  const auto starts = initial_guesses(p, pre, o);
  EigenResult best;
  best.report = p.report();
  bool have = false;
  std::vector<double> best_x;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    DescentOutcome d = descend(obj, pre, starts[k], o);
    RestartRecord rec{d.value, d.residual, max_abs(d.x), d.iterations, d.converged, d.trivial};
    best.restarts.push_back(rec);
    best.iterations += d.iterations;
    if (!have || d.value < best.value) {
      have = true;
      best.value = d.value;
      best.residual = d.residual;
      best.converged = d.converged;
      best.trivial = d.trivial;
      best.best_restart = static_cast<int>(k);
      best_x = std::move(d.x);
    }
  }
  best.restarts_used = static_cast<int>(starts.size());
  for (std::size_t n = 0; n < best_x.size(); ++n) {
    if (p.grid().is_boundary(n)) best_x[n] = 0.0;
  }
  best.minimizer = GridFunction(p.grid_ptr(), std::move(best_x), true);
  return best;
}

}  // namespace detail

/// max over interior hat functions v of |<J'u, v> - lambda <I'u, v>| / (int v (1 + |lambda|)(1 + I(u))).
inline double residual_weak(const ProblemSpec& p, const GridFunction& u, double lambda) {
  detail::check_function(p, u, "residual_weak");
  if (u.is_zero()) throw ValidationError("residual undefined at zero");
  return detail::EnergyObjective(p, lambda).evaluate(u.span()).residual;
}

/// Residual of the Euler-Lagrange equation of the given quotient at its own value.
inline double quotient_residual(const ProblemSpec& p, QuotientKind kind, const GridFunction& u) {
  detail::check_function(p, u, "quotient_residual");
  if (u.is_zero()) throw ValidationError("residual undefined at zero");
  return detail::QuotientObjective(p, kind).evaluate(u.span()).residual;
}

inline EigenResult minimize_quotient(const ProblemSpec& p, QuotientKind kind, const SolverOptions& o) {
  return detail::multistart(p, detail::QuotientObjective(p, kind), o);
}

/// Estimate of A(V) = inf J / I with its minimiser.
inline EigenResult minimize_rayleigh_A(const ProblemSpec& p, const SolverOptions& o) {
  return minimize_quotient(p, QuotientKind::a, o);
}

/// Estimate of the threshold B(V).
inline EigenResult minimize_rayleigh_B(const ProblemSpec& p, const SolverOptions& o) {
  return minimize_quotient(p, QuotientKind::b, o);
}

/// Estimate of lambda_m = inf (int Phi1 + Phi2) / int |u|^m / m.
inline EigenResult lambda_m(const ProblemSpec& p, const SolverOptions& o) {
  return minimize_quotient(p, QuotientKind::lambda_m, o);
}

/// Multi-start minimisation of T = J - lambda I. A restart whose iterate
/// falls below the triviality threshold stops there and is flagged trivial;
/// `value` is the smallest T reached over all restarts.
inline EigenResult solve_T(const ProblemSpec& p, double lambda, const SolverOptions& o) {
  return detail::multistart(p, detail::EnergyObjective(p, lambda), o);
}

inline std::vector<QuotientValue> blowup_profile(const ProblemSpec& p, const GridFunction& u,
                                                 const std::vector<double>& t_values) {
  if (u.is_zero()) throw ValidationError("blow-up profile needs a nonzero function");
  std::vector<QuotientValue> out;
  out.reserve(t_values.size());
  for (double t : t_values) {
    if (!(t > 0.0)) throw ValidationError("blow-up scales must be positive");
    out.push_back(rayleigh_A(p, u.scaled(t)));
  }
  return out;
}

}  // namespace nhe

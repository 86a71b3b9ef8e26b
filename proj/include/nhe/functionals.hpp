#pragma once

// Energies, quotients and their first variations on the discrete space.
//
// Gradient terms live on cells (midpoint rule on forward-difference
// gradients), zero-order terms on nodes (trapezoid weights). Every derivative
// here is the exact derivative of the corresponding discrete energy with
// respect to the nodal values, so finite-difference checks agree to rounding
// level rather than to discretisation level.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "nhe/conditions.hpp"
#include "nhe/error.hpp"
#include "nhe/grid.hpp"
#include "nhe/lebesgue.hpp"
#include "nhe/young.hpp"

namespace nhe {

class ProblemSpec {
 public:
  ProblemSpec(YoungFunction phi1, YoungFunction phi2, ExponentField q1, ExponentField q2, ExponentField m,
              ExponentField r, GridFunction potential)
      : phi1_(std::move(phi1)),
        phi2_(std::move(phi2)),
        q1_(std::move(q1)),
        q2_(std::move(q2)),
        m_(std::move(m)),
        r_(std::move(r)),
        v_(std::move(potential)) {
    grid_ = q1_.grid_ptr();
    if (!grid_) throw ValidationError("problem needs a grid");
    detail::require_same_grid(*grid_, q2_.grid(), "problem q2");
    detail::require_same_grid(*grid_, m_.grid(), "problem m");
    detail::require_same_grid(*grid_, r_.grid(), "problem r");
    detail::require_same_grid(*grid_, v_.grid(), "problem V");
    report_ = check_conditions(phi1_, phi2_, q1_, q2_, m_, r_, grid_->dimension());
  }

  ProblemSpec with_potential(GridFunction v) const {
    ProblemSpec p(*this);
    detail::require_same_grid(*grid_, v.grid(), "problem V");
    p.v_ = std::move(v);
    return p;
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const YoungFunction& phi1() const { return phi1_; }
  const YoungFunction& phi2() const { return phi2_; }
  const ExponentField& q1() const { return q1_; }
  const ExponentField& q2() const { return q2_; }
  const ExponentField& m() const { return m_; }
  const ExponentField& r() const { return r_; }
  const GridFunction& potential() const { return v_; }
  const ConditionReport& report() const { return report_; }

 private:
  GridPtr grid_;
  YoungFunction phi1_;
  YoungFunction phi2_;
  ExponentField q1_;
  ExponentField q2_;
  ExponentField m_;
  ExponentField r_;
  GridFunction v_;
  ConditionReport report_;
};

struct QuotientValue {
  double numerator = 0.0;
  double denominator = 0.0;
  double value = 0.0;
};

/// Which Rayleigh-type quotient: J/I, the threshold quotient, or the
/// gradient energy over int |u|^m / m.
enum class QuotientKind { a, b, lambda_m };

namespace detail {

inline constexpr double kZeroGradient = 1e-300;

/// |u|^{q-2} u, continuous extension 0 at u = 0.
inline double signed_power(double u, double q) {
  if (u == 0.0) return 0.0;
  const double a = std::pow(std::abs(u), q - 1.0);
  return u > 0.0 ? a : -a;
}

inline void check_function(const ProblemSpec& p, const GridFunction& u, const char* what) {
  require_same_grid(p.grid(), u.grid(), what);
}

// Cell term vol * sum e(g_c) and, optionally, its nodal gradient, where
// coef(g) = e'(g) / g.
template <class Energy, class Coef>
double cell_term(const Grid& g, std::span<const double> u, Energy&& energy, Coef&& coef, double* grad) {
  const auto& bases = g.cell_base_nodes();
  const double vol = g.cell_volume();
  const int d = g.dimension();
  double sum = 0.0;
  for (std::size_t c = 0; c < bases.size(); ++c) {
    const std::size_t b = bases[c];
    const auto dv = cell_gradient(g, u, b);
    const double mag = norm3(dv);
    if (mag < kZeroGradient) continue;
    sum += energy(mag);
    if (grad) {
      const double k = vol * coef(mag);
      for (int a = 0; a < d; ++a) {
        const double f = k * dv[a] / g.spacing(a);
        grad[b + g.stride(a)] += f;
        grad[b] -= f;
      }
    }
  }
  return vol * sum;
}

// Node term sum w_n f(n, u_n) and optionally w_n f'(n, u_n).
template <class F, class DF>
double node_term(const Grid& g, std::span<const double> u, F&& f, DF&& df, double* grad) {
  const auto& w = g.node_weights();
  double sum = 0.0;
  for (std::size_t n = 0; n < u.size(); ++n) {
    if (u[n] == 0.0) continue;
    sum += w[n] * f(n, u[n]);
    if (grad) grad[n] += w[n] * df(n, u[n]);
  }
  return sum;
}

}  // namespace detail

/// Gradient energy int Phi1(|grad u|) + Phi2(|grad u|); optional nodal gradient.
inline double gradient_energy(const ProblemSpec& p, std::span<const double> u, double* grad = nullptr) {
  const auto& f1 = p.phi1();
  const auto& f2 = p.phi2();
  return detail::cell_term(
      p.grid(), u, [&](double t) { return f1.integral(t) + f2.integral(t); },
      [&](double t) { return f1.coefficient(t) + f2.coefficient(t); }, grad);
}

/// int V |u|^m / m.
inline double potential_energy(const ProblemSpec& p, std::span<const double> u, double* grad = nullptr) {
  const auto& v = p.potential();
  const auto& m = p.m();
  return detail::node_term(
      p.grid(), u, [&](std::size_t n, double x) { return v[n] * std::pow(std::abs(x), m[n]) / m[n]; },
      [&](std::size_t n, double x) { return v[n] * detail::signed_power(x, m[n]); }, grad);
}

/// int |u|^q1 / q1 + |u|^q2 / q2.
inline double lower_order_energy(const ProblemSpec& p, std::span<const double> u, double* grad = nullptr) {
  const auto& q1 = p.q1();
  const auto& q2 = p.q2();
  return detail::node_term(
      p.grid(), u,
      [&](std::size_t n, double x) {
        const double a = std::abs(x);
        return std::pow(a, q1[n]) / q1[n] + std::pow(a, q2[n]) / q2[n];
      },
      [&](std::size_t n, double x) { return detail::signed_power(x, q1[n]) + detail::signed_power(x, q2[n]); },
      grad);
}

namespace detail {

/// int |V| |u|^m, divided by m unless `plain`.
inline double abs_potential_term(const ProblemSpec& p, std::span<const double> u, bool plain) {
  const auto& v = p.potential();
  const auto& m = p.m();
  const auto& w = p.grid().node_weights();
  double s = 0.0;
  for (std::size_t n = 0; n < u.size(); ++n) {
    if (u[n] == 0.0 || v[n] == 0.0) continue;
    const double t = std::abs(v[n]) * std::pow(std::abs(u[n]), m[n]);
    s += w[n] * (plain ? t : t / m[n]);
  }
  return s;
}

}  // namespace detail

inline double functional_J(const ProblemSpec& p, const GridFunction& u) {
  detail::check_function(p, u, "J");
  return gradient_energy(p, u.span()) + potential_energy(p, u.span());
}

inline double functional_I(const ProblemSpec& p, const GridFunction& u) {
  detail::check_function(p, u, "I");
  return lower_order_energy(p, u.span());
}

inline double functional_T(const ProblemSpec& p, const GridFunction& u, double lambda) {
  return functional_J(p, u) - lambda * functional_I(p, u);
}

/// Nodal gradient of J (derivative with respect to every nodal value).
inline std::vector<double> gradient_J(const ProblemSpec& p, const GridFunction& u) {
  detail::check_function(p, u, "gradient_J");
  std::vector<double> g(u.size(), 0.0);
  gradient_energy(p, u.span(), g.data());
  potential_energy(p, u.span(), g.data());
  return g;
}

inline std::vector<double> gradient_I(const ProblemSpec& p, const GridFunction& u) {
  detail::check_function(p, u, "gradient_I");
  std::vector<double> g(u.size(), 0.0);
  lower_order_energy(p, u.span(), g.data());
  return g;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += a[n] * b[n];
  return s;
}

/// <J'(u), v>.
inline double gateaux_J(const ProblemSpec& p, const GridFunction& u, const GridFunction& v) {
  detail::check_function(p, v, "gateaux_J");
  return dot(gradient_J(p, u), v.span());
}

/// <I'(u), v>.
inline double gateaux_I(const ProblemSpec& p, const GridFunction& u, const GridFunction& v) {
  detail::check_function(p, v, "gateaux_I");
  return dot(gradient_I(p, u), v.span());
}

/// Numerator and denominator of a quotient with optional nodal gradients.
struct QuotientParts {
  double numerator = 0.0;
  double denominator = 0.0;
  /// Numerator with the potential replaced by |V|; filled with the gradients.
  double numerator_magnitude = 0.0;
  std::vector<double> grad_numerator;
  std::vector<double> grad_denominator;
};

inline QuotientParts quotient_parts(const ProblemSpec& p, QuotientKind kind, std::span<const double> u,
                                    bool with_gradient) {
  QuotientParts out;
  if (with_gradient) {
    out.grad_numerator.assign(u.size(), 0.0);
    out.grad_denominator.assign(u.size(), 0.0);
  }
  double* gn = with_gradient ? out.grad_numerator.data() : nullptr;
  double* gd = with_gradient ? out.grad_denominator.data() : nullptr;
  const Grid& g = p.grid();
  const auto& v = p.potential();
  const auto& m = p.m();
  const auto& q1 = p.q1();
  const auto& q2 = p.q2();
  switch (kind) {
    case QuotientKind::a: {
      const double grad_part = gradient_energy(p, u, gn);
      out.numerator = grad_part + potential_energy(p, u, gn);
      out.denominator = lower_order_energy(p, u, gd);
      if (with_gradient) out.numerator_magnitude = grad_part + detail::abs_potential_term(p, u, false);
      break;
    }
    case QuotientKind::b: {
      const auto& f1 = p.phi1();
      const auto& f2 = p.phi2();
      out.numerator = detail::cell_term(
          g, u, [&](double t) { return (f1.phi(t) + f2.phi(t)) * t; },
          [&](double t) {
            return f1.derivative(t) + f1.coefficient(t) + f2.derivative(t) + f2.coefficient(t);
          },
          gn);
      if (with_gradient) out.numerator_magnitude = out.numerator + detail::abs_potential_term(p, u, true);
      out.numerator += detail::node_term(
          g, u, [&](std::size_t n, double x) { return v[n] * std::pow(std::abs(x), m[n]); },
          [&](std::size_t n, double x) { return v[n] * m[n] * detail::signed_power(x, m[n]); }, gn);
      out.denominator = detail::node_term(
          g, u,
          [&](std::size_t n, double x) {
            const double a = std::abs(x);
            return std::pow(a, q1[n]) + std::pow(a, q2[n]);
          },
          [&](std::size_t n, double x) {
            return q1[n] * detail::signed_power(x, q1[n]) + q2[n] * detail::signed_power(x, q2[n]);
          },
          gd);
      break;
    }
    case QuotientKind::lambda_m:
      out.numerator = gradient_energy(p, u, gn);
      out.numerator_magnitude = out.numerator;
      out.denominator = detail::node_term(
          g, u, [&](std::size_t n, double x) { return std::pow(std::abs(x), m[n]) / m[n]; },
          [&](std::size_t n, double x) { return detail::signed_power(x, m[n]); }, gd);
      break;
  }
  return out;
}

inline QuotientValue quotient(const ProblemSpec& p, QuotientKind kind, const GridFunction& u) {
  detail::check_function(p, u, "quotient");
  if (u.is_zero()) throw ValidationError("quotient undefined at zero");
  const QuotientParts q = quotient_parts(p, kind, u.span(), false);
  if (!(q.denominator > 0.0)) throw ValidationError("quotient undefined at zero");
  return {q.numerator, q.denominator, q.numerator / q.denominator};
}

/// J(u) / I(u).
inline QuotientValue rayleigh_A(const ProblemSpec& p, const GridFunction& u) {
  return quotient(p, QuotientKind::a, u);
}

/// (int phi1(|grad u|)|grad u| + phi2(|grad u|)|grad u| + V|u|^m) / (int |u|^q1 + |u|^q2).
inline QuotientValue rayleigh_B(const ProblemSpec& p, const GridFunction& u) {
  return quotient(p, QuotientKind::b, u);
}

/// (int Phi1(|grad u|) + Phi2(|grad u|)) / int |u|^m / m.
inline QuotientValue rayleigh_m(const ProblemSpec& p, const GridFunction& u) {
  return quotient(p, QuotientKind::lambda_m, u);
}

/// Largest observed ratio
///   (|int V/m |u|^m| - eps int (Phi1 + Phi2)(|grad u|)) / (|V|_r int (|u|^{m-} + |u|^{m+}))
/// over random test functions with amplitudes spread over four decades.
/// Clamped below at 0; V = 0 gives 0.
inline double potential_bound_constant(const ProblemSpec& p, double epsilon, int samples, std::uint64_t seed) {
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  if (samples < 1) throw ValidationError("samples must be >= 1");
  if (p.potential().is_zero()) return 0.0;
  const double vnorm = luxemburg_norm(p.potential(), p.r());
  const double m_lo = p.m().lower();
  const double m_hi = p.m().upper();
  std::mt19937_64 amp_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  double best = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double amplitude = std::pow(10.0, 4.0 * unit_uniform(amp_rng) - 2.0);
    const GridFunction u = random_test_function(p.grid_ptr(), seed + static_cast<std::uint64_t>(k)).scaled(amplitude);
    const double num = std::abs(potential_energy(p, u.span())) - epsilon * gradient_energy(p, u.span());
    double den = 0.0;
    const auto& w = p.grid().node_weights();
    for (std::size_t n = 0; n < u.size(); ++n) {
      const double a = std::abs(u[n]);
      if (a > 0.0) den += w[n] * (std::pow(a, m_lo) + std::pow(a, m_hi));
    }
    if (den > 0.0) best = std::max(best, num / (vnorm * den));
  }
  return best;
}

}  // namespace nhe

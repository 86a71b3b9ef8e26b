#pragma once

// Gauss-Kronrod quadrature on geometrically graded panels.
//
// The integrands handled here are of the form x -> f(t x) / f(t) on [0, 1]
// with f monotone and power-like at the origin. Grading the panels by
// octaves towards 0 keeps every panel a fixed relative distance away from
// the (possible) singularity at x = 0, so a single 15-point Kronrod rule per
// panel converges geometrically. Panels are bisected only when their error
// estimate is large, so for well-behaved integrands the node set is fixed and
// the result is a smooth function of any parameter the integrand depends on.

#include <array>
#include <cmath>
#include <cstddef>

#include "nhe/error.hpp"

namespace nhe::quadrature {

struct Result {
  double value = 0.0;
  double error = 0.0;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the nodes kKronrodNodes[1], [3], [5], [7].
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
Result kronrod15(F&& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(centre);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double pair = f(centre - dx) + f(centre + dx);
    kronrod += kKronrodWeights[j] * pair;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * pair;
  }
  return {kronrod * half, std::abs((kronrod - gauss) * half)};
}

inline constexpr int kMaxSplits = 16;

// Bisects [a, b] until each piece meets `local` or the depth runs out.
template <class F>
Result refine(F& f, double a, double b, double local, int depth) {
  const Result r = kronrod15(f, a, b);
  if (r.error <= local || depth == 0) return r;
  const double mid = 0.5 * (a + b);
  const Result left = refine(f, a, mid, 0.5 * local, depth - 1);
  const Result right = refine(f, mid, b, 0.5 * local, depth - 1);
  return {left.value + right.value, left.error + right.error};
}

}  // namespace detail

inline constexpr int kMaxOctaves = 1000;

/// Integrates a non-negative, non-decreasing f over [0, 1].
///
/// Panels are [2^-(k+1), 2^-k], bisected where the Kronrod estimate is large;
/// grading stops once the remaining mass, bounded by lo * f(lo), is below
/// 1e-17 of the running sum. Throws QuadratureError if the summed error
/// estimate exceeds `tolerance`.
template <class F>
Result graded_unit_integral(F&& f, double tolerance = 1e-10) {
  Result total;
  double hi = 1.0;
  for (int k = 0; k < kMaxOctaves; ++k) {
    const double lo = 0.5 * hi;
    const Result panel = detail::refine(f, lo, hi, 1e-3 * tolerance, detail::kMaxSplits);
    total.value += panel.value;
    total.error += panel.error;
    const double tail = lo * f(lo);
    if (tail <= 1e-17 * total.value || tail == 0.0) break;
    if (k + 1 == kMaxOctaves) total.error += tail;
    hi = lo;
  }
  if (!(total.error <= tolerance) || !std::isfinite(total.value)) {
    throw QuadratureError("graded quadrature did not converge", total.error);
  }
  return total;
}

}  // namespace nhe::quadrature

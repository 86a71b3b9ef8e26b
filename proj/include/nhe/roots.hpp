#pragma once

#include <cmath>
#include <string>

#include "nhe/error.hpp"

namespace nhe::roots {

/// Final bracket of a monotone search: `below` is where f <= target,
/// `above` where f > target. Both are positive.
struct Bracket {
  double below = 0.0;
  double above = 0.0;
  int evaluations = 0;
};

inline constexpr int kMaxExpansions = 2100;

/// Geometric bisection for a monotone f on (0, inf).
///
/// `increasing` gives the direction of f. The initial bracket [lo, hi] is
/// widened by factors of 2 until f crosses `target`, then halved in log scale
/// until hi / lo - 1 <= rel_tol.
template <class F>
Bracket geometric_bisect(F&& f, double target, double lo, double hi, bool increasing,
                         double rel_tol, int max_iterations = 400) {
  if (!(lo > 0.0) || !(hi >= lo) || !(rel_tol > 0.0)) {
    throw BracketError("geometric_bisect: need 0 < lo <= hi and rel_tol > 0");
  }
  int evals = 0;
  auto above_target = [&](double x) {
    ++evals;
    const double v = f(x);
    if (std::isnan(v)) throw BracketError("geometric_bisect: function returned NaN");
    return v > target;
  };
  // For increasing f we want above_target(lo) == false and above_target(hi) == true.
  auto lo_ok = [&](double x) { return increasing ? !above_target(x) : above_target(x); };
  auto hi_ok = [&](double x) { return increasing ? above_target(x) : !above_target(x); };

  int expansions = 0;
  while (!lo_ok(lo)) {
    hi = lo;
    lo *= 0.5;
    if (++expansions > kMaxExpansions || lo == 0.0) {
      throw BracketError("geometric_bisect: lower bracket expansion failed");
    }
  }
  expansions = 0;
  while (!hi_ok(hi)) {
    lo = hi;
    hi *= 2.0;
    if (++expansions > kMaxExpansions || !std::isfinite(hi)) {
      throw BracketError("geometric_bisect: upper bracket expansion failed");
    }
  }
  for (int it = 0; it < max_iterations && hi / lo - 1.0 > rel_tol; ++it) {
    const double mid = std::sqrt(lo) * std::sqrt(hi);
    if (mid <= lo || mid >= hi) break;
    if (lo_ok(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  Bracket b;
  b.below = increasing ? lo : hi;
  b.above = increasing ? hi : lo;
  b.evaluations = evals;
  return b;
}

}  // namespace nhe::roots

#pragma once

// Structural conditions on the two Young functions and the exponent fields.
//
// The ordering chain is
//   1 < phi2_lo <= phi2_hi < q2- <= q2+ <= m- <= m+ <= q1- <= q1+ < phi1_lo <= phi1_hi < N,
// the Sobolev bound asks q1+ < N phi2_lo / (N - phi2_lo), and the potential
// exponent must satisfy r(x) > N / m- at every node.

#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nhe/lebesgue.hpp"
#include "nhe/young.hpp"

namespace nhe {

struct ChainEntry {
  std::string name;
  double value = 0.0;
};

struct ChainLink {
  std::size_t left = 0;  // index into chain_values
  bool strict = false;
  bool holds = false;
};

struct ConditionReport {
  std::vector<ChainEntry> chain_values;
  std::vector<ChainLink> links;
  bool pass_2 = false;
  bool pass_3 = false;
  bool pass_4 = false;
  double sobolev_bound = 0.0;
  double r_threshold = 0.0;  // N / m-
  double r_min = 0.0;
  int dimension = 0;
  bool relaxed_mode = true;

  bool all_pass() const { return pass_2 && pass_3 && pass_4; }

  /// Human-readable form of the first failing inequality, if any.
  std::optional<std::string> first_violation() const {
    for (const auto& l : links) {
      if (!l.holds) return describe_link(l);
    }
    if (!pass_3) {
      std::ostringstream os;
      os.precision(17);
      os << "q1+ = " << chain_values[8].value << " < N phi2_lo/(N - phi2_lo) = " << sobolev_bound;
      return os.str();
    }
    if (!pass_4) {
      std::ostringstream os;
      os.precision(17);
      os << "min r = " << r_min << " > N/m- = " << r_threshold;
      return os.str();
    }
    return std::nullopt;
  }

  std::string describe_link(const ChainLink& l) const {
    std::ostringstream os;
    os.precision(17);
    const auto& a = chain_values[l.left];
    const auto& b = chain_values[l.left + 1];
    os << a.name << " = " << a.value << (l.strict ? " < " : " <= ") << b.name << " = " << b.value;
    return os.str();
  }
};

inline ConditionReport check_conditions(const YoungFunction& phi1, const YoungFunction& phi2,
                                        const ExponentField& q1, const ExponentField& q2, const ExponentField& m,
                                        const ExponentField& r, int dimension) {
  if (dimension < 1) throw ValidationError("dimension must be >= 1");
  const GrowthIndices i1 = phi1.indices();
  const GrowthIndices i2 = phi2.indices();
  const double n = dimension;

  ConditionReport rep;
  rep.dimension = dimension;
  rep.chain_values = {{"1", 1.0},
                      {"phi2_lo", i2.lower},
                      {"phi2_hi", i2.upper},
                      {"q2-", q2.lower()},
                      {"q2+", q2.upper()},
                      {"m-", m.lower()},
                      {"m+", m.upper()},
                      {"q1-", q1.lower()},
                      {"q1+", q1.upper()},
                      {"phi1_lo", i1.lower},
                      {"phi1_hi", i1.upper},
                      {"N", n}};
  const bool strict[] = {true, false, true, false, false, false, false, false, true, false, true};
  rep.pass_2 = true;
  for (std::size_t k = 0; k + 1 < rep.chain_values.size(); ++k) {
    const double a = rep.chain_values[k].value;
    const double b = rep.chain_values[k + 1].value;
    const bool holds = strict[k] ? a < b : a <= b;
    rep.links.push_back({k, strict[k], holds});
    rep.pass_2 = rep.pass_2 && holds;
  }

  rep.sobolev_bound = n > i2.lower ? n * i2.lower / (n - i2.lower) : std::numeric_limits<double>::infinity();
  rep.pass_3 = q1.upper() < rep.sobolev_bound;

  rep.r_threshold = n / m.lower();
  rep.r_min = r.lower();
  rep.pass_4 = true;
  for (double v : r.values()) rep.pass_4 = rep.pass_4 && v > rep.r_threshold;

  // The theory is stated for N >= 3; lower dimensions are always relaxed.
  rep.relaxed_mode = !rep.all_pass() || dimension < 3;
  return rep;
}

}  // namespace nhe

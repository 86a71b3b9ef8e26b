#pragma once

// Modulars and Luxemburg norms for variable exponents and Young functions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nhe/error.hpp"
#include "nhe/grid.hpp"
#include "nhe/roots.hpp"
#include "nhe/young.hpp"

namespace nhe {

inline constexpr double kDefaultNormTolerance = 1e-10;

/// Continuous exponent sampled on the nodes of a grid; every value is > 1.
class ExponentField {
 public:
  ExponentField() = default;

  ExponentField(GridPtr grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw ValidationError("exponent field without a grid");
    if (values_.size() != grid_->node_count()) throw ValidationError("exponent field size does not match grid");
    if (values_.empty()) throw ValidationError("exponent field is empty");
    lower_ = values_.front();
    upper_ = values_.front();
    for (double v : values_) {
      if (!std::isfinite(v) || !(v > 1.0)) throw ValidationError("exponent values must be finite and > 1");
      lower_ = std::min(lower_, v);
      upper_ = std::max(upper_, v);
    }
  }

  static ExponentField constant(GridPtr grid, double q) {
    const std::size_t n = grid->node_count();
    return ExponentField(std::move(grid), std::vector<double>(n, q));
  }

  template <class F>
  static ExponentField sample(GridPtr grid, F&& f) {
    std::vector<double> v(grid->node_count());
    for (std::size_t n = 0; n < v.size(); ++n) {
      const auto x = grid->coordinates(n);
      v[n] = f(x[0], x[1], x[2]);
    }
    return ExponentField(std::move(grid), std::move(v));
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t n) const { return values_[n]; }
  std::size_t size() const { return values_.size(); }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  bool is_constant() const { return lower_ == upper_; }

  /// r'(x) = r(x) / (r(x) - 1).
  ExponentField conjugate() const {
    std::vector<double> v(values_);
    for (double& x : v) x = x / (x - 1.0);
    return ExponentField(grid_, std::move(v));
  }

 private:
  GridPtr grid_;
  std::vector<double> values_;
  double lower_ = 0.0;
  double upper_ = 0.0;
};

namespace detail {

inline void require_same_grid(const Grid& a, const Grid& b, const char* what) {
  if (!(a == b)) throw ValidationError(std::string(what) + ": fields live on different grids");
}

inline double modular_scaled(std::span<const double> u, const ExponentField& q, double mu) {
  const auto& w = q.grid().node_weights();
  double s = 0.0;
  for (std::size_t n = 0; n < u.size(); ++n) {
    if (u[n] != 0.0) s += w[n] * std::pow(std::abs(u[n]) / mu, q[n]);
  }
  return s;
}

template <class Modular>
double luxemburg_search(double max_abs, double volume, Modular&& modular_at, double tol) {
  if (!(tol > 0.0)) throw ValidationError("norm tolerance must be positive");
  if (max_abs == 0.0) return 0.0;
  const auto b = roots::geometric_bisect(modular_at, 1.0, max_abs * 1e-9, max_abs * (1.0 + volume),
                                         /*increasing=*/false, tol);
  // b.below is the smallest scale found with modular <= 1.
  return b.below;
}

}  // namespace detail

/// int |u|^{q(x)} with the nodal rule.
inline double modular(const GridFunction& u, const ExponentField& q) {
  detail::require_same_grid(u.grid(), q.grid(), "modular");
  return detail::modular_scaled(u.span(), q, 1.0);
}

/// inf{mu > 0 : int |u / mu|^{q(x)} <= 1}, relative tolerance `tol`.
inline double luxemburg_norm(const GridFunction& u, const ExponentField& q, double tol = kDefaultNormTolerance) {
  detail::require_same_grid(u.grid(), q.grid(), "luxemburg_norm");
  return detail::luxemburg_search(
      u.max_abs(), u.grid().volume(), [&](double mu) { return detail::modular_scaled(u.span(), q, mu); }, tol);
}

/// int Phi(|f|) over cells.
inline double orlicz_modular(const CellField& f, const YoungFunction& phi) {
  double s = 0.0;
  for (double v : f.values) s += phi.integral(v);
  return s * f.grid->cell_volume();
}

/// int Phi(|f|) with the nodal rule.
inline double orlicz_modular(const GridFunction& f, const YoungFunction& phi) {
  const auto& w = f.grid().node_weights();
  double s = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) s += w[n] * phi.integral(f[n]);
  return s;
}

/// inf{k > 0 : int Phi(f / k) <= 1} for a cell field (typically |grad u|).
inline double orlicz_luxemburg_norm(const CellField& f, const YoungFunction& phi,
                                    double tol = kDefaultNormTolerance) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  const double vol = f.grid->cell_volume();
  auto at = [&](double k) {
    double s = 0.0;
    for (double v : f.values) s += phi.integral(v / k);
    return s * vol;
  };
  return detail::luxemburg_search(m, f.grid->volume(), at, tol);
}

inline double orlicz_luxemburg_norm(const GridFunction& f, const YoungFunction& phi,
                                    double tol = kDefaultNormTolerance) {
  const auto& w = f.grid().node_weights();
  auto at = [&](double k) {
    double s = 0.0;
    for (std::size_t n = 0; n < f.size(); ++n) s += w[n] * phi.integral(f[n] / k);
    return s;
  };
  return detail::luxemburg_search(f.max_abs(), f.grid().volume(), at, tol);
}

struct HolderPair {
  double lhs = 0.0;  // |int u v|
  double rhs = 0.0;  // (1/p- + 1/p'-) |u|_p |v|_p'
};

inline HolderPair holder_pairing(const GridFunction& u, const GridFunction& v, const ExponentField& p,
                                 double tol = kDefaultNormTolerance) {
  detail::require_same_grid(u.grid(), v.grid(), "holder_pairing");
  detail::require_same_grid(u.grid(), p.grid(), "holder_pairing");
  const auto& w = u.grid().node_weights();
  double s = 0.0;
  for (std::size_t n = 0; n < u.size(); ++n) s += w[n] * u[n] * v[n];
  const ExponentField pc = p.conjugate();
  HolderPair out;
  out.lhs = std::abs(s);
  out.rhs = (1.0 / p.lower() + 1.0 / pc.lower()) * luxemburg_norm(u, p, tol) * luxemburg_norm(v, pc, tol);
  return out;
}

}  // namespace nhe

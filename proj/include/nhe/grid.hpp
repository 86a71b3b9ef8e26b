#pragma once

// Box-domain discretisation.
//
// Nodes are numbered lexicographically with axis 0 fastest. A cell is
// identified by its lowest corner node; its gradient is the vector of forward
// differences along each active axis from that corner. Node quadrature uses
// tensor trapezoid weights (half weight per boundary axis), cell quadrature
// the midpoint rule with the constant cell volume.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "nhe/error.hpp"

namespace nhe {

class Grid {
 public:
  static constexpr int kMaxDimension = 3;
  static constexpr int kMinNodesPerAxis = 3;

  Grid(int dimension, std::array<int, 3> nodes, std::array<double, 3> lower,
       std::array<double, 3> upper)
      : dimension_(dimension), nodes_(nodes), lower_(lower), upper_(upper) {
    if (dimension < 1 || dimension > kMaxDimension) {
      throw ValidationError("grid dimension must be 1, 2 or 3");
    }
    for (int k = 0; k < kMaxDimension; ++k) {
      if (k < dimension_) {
        if (nodes_[k] < kMinNodesPerAxis) {
          throw ValidationError("grid needs at least 3 nodes per axis");
        }
        if (!(upper_[k] > lower_[k]) || !std::isfinite(upper_[k] - lower_[k])) {
          throw ValidationError("grid extents must satisfy lower < upper");
        }
        spacing_[k] = (upper_[k] - lower_[k]) / (nodes_[k] - 1);
      } else {
        nodes_[k] = 1;
        lower_[k] = upper_[k] = 0.0;
        spacing_[k] = 1.0;
      }
    }
    strides_ = {1, static_cast<std::size_t>(nodes_[0]),
                static_cast<std::size_t>(nodes_[0]) * static_cast<std::size_t>(nodes_[1])};
    node_count_ = strides_[2] * static_cast<std::size_t>(nodes_[2]);
    cell_volume_ = 1.0;
    for (int k = 0; k < dimension_; ++k) cell_volume_ *= spacing_[k];
    build_tables();
  }

  /// [0, 1]^d with `nodes_per_axis` nodes along every axis.
  static std::shared_ptr<const Grid> unit_box(int dimension, int nodes_per_axis) {
    return std::make_shared<const Grid>(dimension,
                                        std::array<int, 3>{nodes_per_axis, nodes_per_axis, nodes_per_axis},
                                        std::array<double, 3>{0.0, 0.0, 0.0}, std::array<double, 3>{1.0, 1.0, 1.0});
  }

  int dimension() const { return dimension_; }
  int nodes(int axis) const { return nodes_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  double lower(int axis) const { return lower_[axis]; }
  double upper(int axis) const { return upper_[axis]; }
  std::size_t stride(int axis) const { return strides_[axis]; }
  std::size_t node_count() const { return node_count_; }
  std::size_t cell_count() const { return cell_base_.size(); }
  double cell_volume() const { return cell_volume_; }

  double volume() const {
    double v = 1.0;
    for (int k = 0; k < dimension_; ++k) v *= upper_[k] - lower_[k];
    return v;
  }

  std::array<int, 3> node_index(std::size_t n) const {
    return {static_cast<int>(n % strides_[1]), static_cast<int>((n / strides_[1]) % nodes_[1]),
            static_cast<int>(n / strides_[2])};
  }

  std::array<double, 3> coordinates(std::size_t n) const {
    const auto idx = node_index(n);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int k = 0; k < dimension_; ++k) {
      x[k] = idx[k] == nodes_[k] - 1 ? upper_[k] : lower_[k] + spacing_[k] * idx[k];
    }
    return x;
  }

  bool is_boundary(std::size_t n) const { return boundary_[n] != 0; }
  double node_weight(std::size_t n) const { return weights_[n]; }
  const std::vector<double>& node_weights() const { return weights_; }
  /// Lowest corner node of every cell, in cell order.
  const std::vector<std::size_t>& cell_base_nodes() const { return cell_base_; }
  const std::vector<std::size_t>& interior_nodes() const { return interior_; }

  bool operator==(const Grid& o) const {
    return dimension_ == o.dimension_ && nodes_ == o.nodes_ && lower_ == o.lower_ && upper_ == o.upper_;
  }

 private:
  void build_tables() {
    weights_.assign(node_count_, 0.0);
    boundary_.assign(node_count_, 0);
    for (std::size_t n = 0; n < node_count_; ++n) {
      const auto idx = node_index(n);
      double w = 1.0;
      bool on_boundary = false;
      for (int k = 0; k < dimension_; ++k) {
        const bool end = idx[k] == 0 || idx[k] == nodes_[k] - 1;
        w *= end ? 0.5 * spacing_[k] : spacing_[k];
        on_boundary = on_boundary || end;
      }
      weights_[n] = w;
      boundary_[n] = on_boundary ? 1 : 0;
      if (!on_boundary) interior_.push_back(n);
      bool is_base = true;
      for (int k = 0; k < dimension_; ++k) is_base = is_base && idx[k] < nodes_[k] - 1;
      if (is_base) cell_base_.push_back(n);
    }
  }

  int dimension_;
  std::array<int, 3> nodes_;
  std::array<double, 3> lower_;
  std::array<double, 3> upper_;
  std::array<double, 3> spacing_{1.0, 1.0, 1.0};
  std::array<std::size_t, 3> strides_{};
  std::size_t node_count_ = 0;
  double cell_volume_ = 1.0;
  std::vector<double> weights_;
  std::vector<unsigned char> boundary_;
  std::vector<std::size_t> cell_base_;
  std::vector<std::size_t> interior_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Nodal values on a grid. With `dirichlet_zero` the boundary nodes are 0.
class GridFunction {
 public:
  GridFunction() = default;

  GridFunction(GridPtr grid, std::vector<double> values, bool dirichlet_zero)
      : grid_(std::move(grid)), values_(std::move(values)), dirichlet_zero_(dirichlet_zero) {
    if (!grid_) throw ValidationError("grid function without a grid");
    if (values_.size() != grid_->node_count()) {
      throw ValidationError("grid function has " + std::to_string(values_.size()) + " values, grid has " +
                            std::to_string(grid_->node_count()) + " nodes");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw ValidationError("grid function values must be finite");
    }
    if (dirichlet_zero_) {
      for (std::size_t n = 0; n < values_.size(); ++n) {
        if (grid_->is_boundary(n) && values_[n] != 0.0) {
          throw ValidationError("dirichlet grid function is nonzero on the boundary");
        }
      }
    }
  }

  static GridFunction zero(GridPtr grid, bool dirichlet_zero) {
    const std::size_t n = grid->node_count();
    return GridFunction(std::move(grid), std::vector<double>(n, 0.0), dirichlet_zero);
  }

  static GridFunction constant(GridPtr grid, double c) {
    const std::size_t n = grid->node_count();
    return GridFunction(std::move(grid), std::vector<double>(n, c), false);
  }

  /// Samples f(x, y, z) at the nodes; boundary values are forced to 0 when
  /// `dirichlet_zero` is set.
  template <class F>
  static GridFunction sample(GridPtr grid, F&& f, bool dirichlet_zero) {
    std::vector<double> v(grid->node_count());
    for (std::size_t n = 0; n < v.size(); ++n) {
      const auto x = grid->coordinates(n);
      v[n] = (dirichlet_zero && grid->is_boundary(n)) ? 0.0 : f(x[0], x[1], x[2]);
    }
    return GridFunction(std::move(grid), std::move(v), dirichlet_zero);
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::span<const double> span() const { return values_; }
  double operator[](std::size_t n) const { return values_[n]; }
  std::size_t size() const { return values_.size(); }
  bool dirichlet_zero() const { return dirichlet_zero_; }

  GridFunction scaled(double c) const {
    std::vector<double> v(values_);
    for (double& x : v) x *= c;
    return GridFunction(grid_, std::move(v), dirichlet_zero_);
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  bool is_zero() const { return max_abs() == 0.0; }

 private:
  GridPtr grid_;
  std::vector<double> values_;
  bool dirichlet_zero_ = false;
};

/// One value per cell, in the order of Grid::cell_base_nodes().
struct CellField {
  GridPtr grid;
  std::vector<double> values;
};

/// Forward-difference gradient of u on the cell with lowest corner `base`.
inline std::array<double, 3> cell_gradient(const Grid& g, std::span<const double> u, std::size_t base) {
  std::array<double, 3> d{0.0, 0.0, 0.0};
  for (int k = 0; k < g.dimension(); ++k) {
    d[k] = (u[base + g.stride(k)] - u[base]) / g.spacing(k);
  }
  return d;
}

inline double norm3(const std::array<double, 3>& d) { return std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]); }

inline CellField gradient_magnitude(const GridFunction& u) {
  const Grid& g = u.grid();
  CellField out{u.grid_ptr(), std::vector<double>(g.cell_count())};
  const auto& bases = g.cell_base_nodes();
  for (std::size_t c = 0; c < bases.size(); ++c) out.values[c] = norm3(cell_gradient(g, u.span(), bases[c]));
  return out;
}

/// Midpoint rule over cells.
inline double integrate(const CellField& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * f.grid->cell_volume();
}

/// Trapezoid-type nodal rule.
inline double integrate(const GridFunction& f) {
  const auto& w = f.grid().node_weights();
  double s = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) s += w[n] * f[n];
  return s;
}

inline double integrate_nodes(const Grid& g, std::span<const double> f) {
  const auto& w = g.node_weights();
  double s = 0.0;
  for (std::size_t n = 0; n < w.size(); ++n) s += w[n] * f[n];
  return s;
}

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit Mersenne draw.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Deterministic Dirichlet test function with interior values in [-1, 1].
inline GridFunction random_test_function(GridPtr grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(grid->node_count(), 0.0);
  for (std::size_t n = 0; n < v.size(); ++n) {
    const double x = 2.0 * unit_uniform(rng) - 1.0;
    if (!grid->is_boundary(n)) v[n] = x;
  }
  return GridFunction(std::move(grid), std::move(v), true);
}

}  // namespace nhe

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "nhe/functionals.hpp"

namespace nhe::testing {

/// Interior-bounded random potential with values in [-amplitude, amplitude].
inline GridFunction bounded_random_potential(const GridPtr& g, std::uint64_t seed, double amplitude) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(g->node_count());
  for (double& x : v) x = amplitude * (2.0 * unit_uniform(rng) - 1.0);
  return GridFunction(g, std::move(v), false);
}

/// phi2 = Power 1.3, q2 = 1.5, m = 1.7, q1 = 2.0, phi1 = Power 2.5, r = 2.
inline ProblemSpec conforming_problem(const GridPtr& g, GridFunction v) {
  return ProblemSpec(YoungFunction::power(2.5), YoungFunction::power(1.3), ExponentField::constant(g, 2.0),
                     ExponentField::constant(g, 1.5), ExponentField::constant(g, 1.7),
                     ExponentField::constant(g, 2.0), std::move(v));
}

inline ProblemSpec conforming_problem(const GridPtr& g) {
  return conforming_problem(g, GridFunction::zero(g, false));
}

/// Power 2 / Power 2 with q1 = q2 = m = 2.
inline ProblemSpec homogeneous_problem(const GridPtr& g, double r = 2.0) {
  const auto two = ExponentField::constant(g, 2.0);
  return ProblemSpec(YoungFunction::power(2.0), YoungFunction::power(2.0), two, two, two,
                     ExponentField::constant(g, r), GridFunction::zero(g, false));
}

/// Same exponents as the conforming set but with variable q1, m and a
/// chosen pair of Young functions.
inline ProblemSpec variable_problem(const GridPtr& g, YoungFunction phi1, YoungFunction phi2, GridFunction v) {
  auto q1 = ExponentField::sample(g, [](double x, double y, double) { return 2.0 + 0.2 * std::sin(3.0 * x + y); });
  auto m = ExponentField::sample(g, [](double x, double y, double) { return 1.75 + 0.05 * std::cos(2.0 * x - y); });
  return ProblemSpec(std::move(phi1), std::move(phi2), std::move(q1), ExponentField::constant(g, 1.5), std::move(m),
                     ExponentField::constant(g, 2.0), std::move(v));
}

inline double relative_gap(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

/// u + c v on the same grid.
inline GridFunction axpy(const GridFunction& u, double c, const GridFunction& v) {
  std::vector<double> w(u.values());
  for (std::size_t n = 0; n < w.size(); ++n) w[n] += c * v[n];
  return GridFunction(u.grid_ptr(), std::move(w), u.dirichlet_zero());
}

/// Smallest eigenvalue of the dense Dirichlet second-difference operator
/// (2d-point stencil, interior unknowns), assembled from the node layout.
inline double dense_laplacian_min_eigenvalue(const Grid& g) {
  const auto interior = g.interior_nodes();
  std::vector<int> slot(g.node_count(), -1);
  for (std::size_t k = 0; k < interior.size(); ++k) slot[interior[k]] = static_cast<int>(k);
  const auto n = static_cast<Eigen::Index>(interior.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t k = 0; k < interior.size(); ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    for (int d = 0; d < g.dimension(); ++d) {
      const double h2 = g.spacing(d) * g.spacing(d);
      a(i, i) += 2.0 / h2;
      for (long step : {-static_cast<long>(g.stride(d)), static_cast<long>(g.stride(d))}) {
        const int j = slot[static_cast<std::size_t>(static_cast<long>(interior[k]) + step)];
        if (j >= 0) a(i, j) -= 1.0 / h2;
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues()[0];
}

}  // namespace nhe::testing

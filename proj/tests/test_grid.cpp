#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "nhe/grid.hpp"

using nhe::Grid;
using nhe::GridFunction;

TEST(Grid, CountsAndBoundary) {
  const auto g = Grid::unit_box(2, 5);
  EXPECT_EQ(g->node_count(), 25u);
  EXPECT_EQ(g->cell_count(), 16u);
  EXPECT_EQ(g->interior_nodes().size(), 9u);
  EXPECT_TRUE(g->is_boundary(0));
  EXPECT_FALSE(g->is_boundary(12));
  const auto g3 = Grid::unit_box(3, 4);
  EXPECT_EQ(g3->node_count(), 64u);
  EXPECT_EQ(g3->cell_count(), 27u);
  EXPECT_EQ(g3->interior_nodes().size(), 8u);
}

TEST(Grid, RejectsBadShapes) {
  EXPECT_THROW(Grid::unit_box(4, 5), nhe::ValidationError);
  EXPECT_THROW(Grid::unit_box(1, 2), nhe::ValidationError);
  EXPECT_THROW(Grid(1, {5, 1, 1}, {1.0, 0, 0}, {0.0, 0, 0}), nhe::ValidationError);
}

TEST(Grid, DirichletFunctionRejectsBoundaryValues) {
  const auto g = Grid::unit_box(1, 5);
  EXPECT_THROW(GridFunction(g, {1.0, 0, 0, 0, 0}, true), nhe::ValidationError);
  EXPECT_NO_THROW(GridFunction(g, {1.0, 0, 0, 0, 0}, false));
  EXPECT_THROW(GridFunction(g, {0.0, 0, 0}, false), nhe::ValidationError);
}

TEST(Grid, GradientOfZeroIsZero) {
  const auto g = Grid::unit_box(2, 7);
  const auto f = nhe::gradient_magnitude(GridFunction::zero(g, true));
  for (double v : f.values) EXPECT_EQ(v, 0.0);
}

TEST(Grid, GradientExactOnAffineFunctions) {
  const auto g1 = Grid::unit_box(1, 11);
  const auto f1 = nhe::gradient_magnitude(GridFunction::sample(g1, [](double x, double, double) { return x; }, false));
  for (double v : f1.values) EXPECT_NEAR(v, 1.0, 1e-12);
  const auto g2 = Grid::unit_box(2, 9);
  const auto f2 = nhe::gradient_magnitude(
      GridFunction::sample(g2, [](double x, double y, double) { return x + 2.0 * y; }, false));
  for (double v : f2.values) EXPECT_NEAR(v, std::sqrt(5.0), 1e-12);
}

TEST(Grid, GradientIsAbsolutelyHomogeneous) {
  const auto g = Grid::unit_box(2, 9);
  const auto u = nhe::random_test_function(g, 3);
  const auto base = nhe::gradient_magnitude(u);
  for (double c : {-2.5, 0.5, 4.0}) {
    const auto f = nhe::gradient_magnitude(u.scaled(c));
    for (std::size_t k = 0; k < f.values.size(); ++k) EXPECT_NEAR(f.values[k], std::abs(c) * base.values[k], 1e-14);
  }
}

TEST(Grid, IntegrateConstants) {
  const auto g = Grid::unit_box(1, 17);
  EXPECT_NEAR(nhe::integrate(GridFunction::constant(g, 1.0)), 1.0, 1e-12);
  const auto box = std::make_shared<const Grid>(3, std::array<int, 3>{5, 6, 7}, std::array<double, 3>{0, -1, 2},
                                                std::array<double, 3>{2, 0.5, 2.25});
  const double vol = 2.0 * 1.5 * 0.25;
  EXPECT_NEAR(box->volume(), vol, 1e-15);
  EXPECT_NEAR(nhe::integrate(GridFunction::constant(box, 3.0)), 3.0 * vol, 1e-12);
  nhe::CellField ones{box, std::vector<double>(box->cell_count(), 3.0)};
  EXPECT_NEAR(nhe::integrate(ones), 3.0 * vol, 1e-12);
}

TEST(Grid, IntegrateLinearFunction) {
  const auto g = Grid::unit_box(1, 129);
  EXPECT_NEAR(nhe::integrate(GridFunction::sample(g, [](double x, double, double) { return x; }, false)), 0.5, 1e-4);
}

TEST(Grid, IntegrateIsLinear) {
  const auto g = Grid::unit_box(2, 13);
  const auto f = nhe::random_test_function(g, 1);
  const auto h = nhe::random_test_function(g, 2);
  const double a = 1.7;
  const double b = -0.3;
  std::vector<double> c(f.size());
  for (std::size_t n = 0; n < c.size(); ++n) c[n] = a * f[n] + b * h[n];
  const double lhs = nhe::integrate(GridFunction(g, c, true));
  EXPECT_LT(std::abs(lhs - a * nhe::integrate(f) - b * nhe::integrate(h)), 1e-12);
}

TEST(Grid, SecondOrderConvergence) {
  double previous = 0.0;
  for (int nodes : {17, 33, 65, 129}) {
    const auto g = Grid::unit_box(1, nodes);
    const double err =
        std::abs(nhe::integrate(GridFunction::sample(g, [](double x, double, double) { return x * x; }, false)) -
                 1.0 / 3.0);
    if (previous > 0.0) {
      EXPECT_GE(std::log2(previous / err), 1.9);
    }
    previous = err;
  }
}

TEST(Grid, RandomTestFunctionContract) {
  const auto g = Grid::unit_box(2, 9);
  const auto a = nhe::random_test_function(g, 0);
  const auto b = nhe::random_test_function(g, 0);
  const auto c = nhe::random_test_function(g, 1);
  EXPECT_EQ(a.values(), b.values());
  EXPECT_TRUE(a.dirichlet_zero());
  bool differs = false;
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (g->is_boundary(n)) {
      EXPECT_EQ(a[n], 0.0);
    } else {
      EXPECT_GE(a[n], -1.0);
      EXPECT_LE(a[n], 1.0);
      differs = differs || a[n] != c[n];
    }
  }
  EXPECT_TRUE(differs);
}

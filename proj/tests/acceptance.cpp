// Acceptance run: one PASS/FAIL line per criterion. The process exits 0 once
// every criterion has been evaluated, whatever the verdicts; a nonzero exit
// means the harness itself broke.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nhe/commands.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace nhe;
using namespace nhe::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int passed = 0;

void criterion(int id, const char* name, double budget_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs < budget_seconds;
  const bool pass = o.pass && in_time;
  passed += pass ? 1 : 0;
  std::printf("criterion %2d %-26s %s  %s; %.2f s (budget %g s)%s\n", id, name, pass ? "PASS" : "FAIL",
              o.detail.c_str(), secs, budget_seconds, in_time ? "" : " over budget");
  std::fflush(stdout);
}

// Shared by the conforming three-dimensional criteria.
struct Conforming3D {
  GridPtr g = Grid::unit_box(3, 17);
  ProblemSpec p = conforming_problem(g, bounded_random_potential(g, 42, 5.0));
  SolverOptions o = [] {
    SolverOptions s;
    s.restarts = 8;
    return s;
  }();
  std::optional<EigenResult> a;
};

Outcome young_indices() {
  struct Case {
    YoungFunction f;
    double lo, hi;
  };
  const std::vector<Case> cases = {
      {YoungFunction::power(1.3), 1.3, 1.3},          {YoungFunction::power(2.5), 2.5, 2.5},
      {YoungFunction::log_power(2.0, 1.0), 2.0, 3.0}, {YoungFunction::log_power(1.4, 3.0), 1.4, 4.4},
      {YoungFunction::power_over_log(2.4), 1.4, 2.4}, {YoungFunction::power_over_log(3.5), 2.5, 3.5}};
  const auto ts = log_grid(kSampleGridMin, kSampleGridMax, kIndexGridPoints);
  double worst = 0.0;
  bool exact = true;
  for (const auto& c : cases) {
    const auto idx = c.f.indices();
    exact = exact && idx.lower == c.lo && idx.upper == c.hi;
    for (double t : ts) {
      const double r = c.f.growth_ratio(t);
      worst = std::max({worst, c.lo - r, r - c.hi});
    }
  }
  return {exact && worst <= 1e-8,
          std::string("closed forms ") + (exact ? "exact" : "mismatch") + ", worst excursion " + fmt(worst) +
              " over " + std::to_string(ts.size()) + " samples"};
}

Outcome luxemburg() {
  double closed = 0.0;
  for (const auto& g : {Grid::unit_box(2, 9),
                        std::make_shared<const Grid>(3, std::array<int, 3>{5, 6, 7}, std::array<double, 3>{0, 0, 0},
                                                     std::array<double, 3>{2.0, 1.5, 0.5})}) {
    for (double p : {1.1, 2.0, 3.7}) {
      for (double c : {-2.5, 0.3, 4.0}) {
        const double exact = std::abs(c) * std::pow(g->volume(), 1.0 / p);
        closed = std::max(closed, std::abs(luxemburg_norm(GridFunction::constant(g, c), ExponentField::constant(g, p)) - exact));
      }
    }
  }
  const auto g = Grid::unit_box(2, 9);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> scale_exp(-2.0, 2.0);
  std::uniform_real_distribution<double> base(1.5, 3.5);
  std::uniform_real_distribution<double> amp(0.0, 0.4);
  std::uniform_real_distribution<double> phase(0.0, 6.0);
  int violations = 0;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const double b = base(rng);
    const double a = amp(rng);
    const double ph = phase(rng);
    const auto q = ExponentField::sample(g, [&](double x, double y, double) { return b + a * std::sin(3 * x + 2 * y + ph); });
    const auto u = random_test_function(g, s).scaled(std::pow(10.0, scale_exp(rng)));
    const double norm = luxemburg_norm(u, q);
    const double rho = modular(u, q);
    // Bracketing tolerance of the norm propagated through t -> t^q.
    const double slack = 1e-6 * std::max(1.0, rho);
    const double lo = std::min(std::pow(norm, q.lower()), std::pow(norm, q.upper()));
    const double hi = std::max(std::pow(norm, q.lower()), std::pow(norm, q.upper()));
    if (rho < lo - slack || rho > hi + slack) ++violations;
  }
  return {closed <= 1e-8 && violations == 0,
          "closed-form error " + fmt(closed) + ", modular/norm violations " + std::to_string(violations) + "/1000"};
}

Outcome gateaux() {
  const auto g = Grid::unit_box(2, 33);
  const std::vector<std::pair<YoungFunction, YoungFunction>> pairs = {
      {YoungFunction::power(2.5), YoungFunction::power(1.3)},
      {YoungFunction::log_power(2.5, 1.5), YoungFunction::log_power(1.4, 1.0)},
      {YoungFunction::power_over_log(3.5), YoungFunction::power_over_log(2.4)}};
  double worst = 0.0;
  for (const auto& [f1, f2] : pairs) {
    const auto p = variable_problem(g, f1, f2, bounded_random_potential(g, 5, 4.0));
    for (std::uint64_t s = 0; s < 100; ++s) {
      const auto u = random_test_function(g, 1000 + 2 * s).scaled(0.2 + 0.05 * static_cast<double>(s));
      const auto v = random_test_function(g, 1001 + 2 * s);
      // Central-difference step balancing truncation against rounding.
      const double eps = std::cbrt(std::numeric_limits<double>::epsilon()) * std::max(1.0, u.max_abs());
      const double fd_j = (functional_J(p, axpy(u, eps, v)) - functional_J(p, axpy(u, -eps, v))) / (2 * eps);
      const double fd_i = (functional_I(p, axpy(u, eps, v)) - functional_I(p, axpy(u, -eps, v))) / (2 * eps);
      worst = std::max({worst, relative_gap(gateaux_J(p, u, v), fd_j), relative_gap(gateaux_I(p, u, v), fd_i)});
    }
  }
  return {worst < 1e-5, "worst relative error " + fmt(worst) + " over 3 families x 100 pairs"};
}

Outcome homogeneous_oracle() {
  SolverOptions o;
  o.restarts = 2;
  o.gradient_tolerance = 1e-9;
  const auto g = Grid::unit_box(1, 66);
  const double oracle = dense_laplacian_min_eigenvalue(*g);
  const double a = minimize_rayleigh_A(homogeneous_problem(g), o).value;
  const double gap = relative_gap(a, 2.0 * oracle);
  const double target = 2.0 * std::numbers::pi * std::numbers::pi;
  std::vector<double> errors;
  for (int n : {65, 129, 257}) {
    const auto gn = Grid::unit_box(1, n);
    errors.push_back(std::abs(minimize_rayleigh_A(homogeneous_problem(gn), o).value - target));
  }
  const double order1 = std::log2(errors[0] / errors[1]);
  const double order2 = std::log2(errors[1] / errors[2]);
  const bool second_order = std::abs(order1 - 2.0) < 0.1 && std::abs(order2 - 2.0) < 0.1;
  return {gap < 1e-6 && second_order, "A vs 2x dense eigenvalue rel gap " + fmt(gap) + "; observed orders " +
                                          fmt(order1) + ", " + fmt(order2) + " towards 2 pi^2"};
}

Outcome eigenvalue_structure(Conforming3D& c) {
  c.a = minimize_rayleigh_A(c.p, c.o);
  const EigenResult b = minimize_rayleigh_B(c.p, c.o);
  const double res_a = residual_weak(c.p, c.a->minimizer, c.a->value);
  SolverOptions above = c.o;
  above.warm_starts.push_back(c.a->minimizer);
  const EigenResult t_above = solve_T(c.p, c.a->value + 0.5, above);
  const EigenResult t_below = solve_T(c.p, b.value - 0.5, c.o);
  int nontrivial = 0;
  for (const auto& r : t_below.restarts) nontrivial += r.trivial ? 0 : 1;
  const bool pass = res_a < 1e-4 && b.value <= c.a->value + 1e-6 && t_above.value < 0.0 && !t_above.trivial &&
                    t_above.residual < 1e-4 && nontrivial == 0 && t_below.restarts.size() >= 8;
  return {pass, "A=" + fmt(c.a->value) + " res " + fmt(res_a) + ", B=" + fmt(b.value) + ", T(A+0.5)=" +
                    fmt(t_above.value) + " res " + fmt(t_above.residual) + ", nontrivial below B " +
                    std::to_string(nontrivial) + "/" + std::to_string(t_below.restarts.size())};
}

Outcome sign_flip(Conforming3D& c) {
  const EigenResult lm = lambda_m(c.p, c.o);
  const auto shifted = c.p.with_potential(GridFunction::constant(c.g, -lm.value));
  const EigenResult a = minimize_rayleigh_A(shifted, c.o);
  return {lm.value > 0.0 && a.value <= 1e-6, "lambda_m=" + fmt(lm.value) + ", A(-lambda_m)=" + fmt(a.value)};
}

Outcome sweep() {
  const auto g = Grid::unit_box(1, 65);
  const auto p = conforming_problem(g);
  PotentialOptions o;
  o.solver.restarts = 2;
  o.solver.gradient_tolerance = 1e-8;
  const double tol = 2.0 * o.solver.gradient_tolerance;
  const double lm = lambda_m(p, o.solver).value;
  const double ref = luxemburg_norm(GridFunction::constant(g, lm), p.r());
  std::vector<double> radii;
  for (double f : {0.0, 0.5, 1.0, 2.0, 4.0}) radii.push_back(f * ref);
  const auto rows = a_star_sweep(p, p.r(), radii, o);
  const bool monotone = sweep_is_monotone(rows, tol);
  bool continuity = true;
  std::string ratios;
  for (double radius : {radii[1], radii[2]}) {
    const auto probe = continuity_probe(p, p.r(), radius, o);
    continuity = continuity && probe.consistent;
    for (double r : probe.ratios) ratios += fmt(r) + " ";
  }
  const auto z = find_zero_radius(p, p.r(), radii.back(), o);
  const bool zero_ok = std::abs(z.value) < 1e-3 * rows[0].a_star;
  bool mu_monotone = true;
  double previous_mu = mu_set_function(p, p.r(), z.radius, z.radius, o);
  for (const auto& r : rows) {
    if (r.R < z.radius) continue;
    const double mu = -r.a_star;
    mu_monotone = mu_monotone && mu >= previous_mu - tol;
    previous_mu = mu;
  }
  return {monotone && rows[0].a_star > 0.0 && continuity && zero_ok && mu_monotone,
          std::string("a_star ") + fmt(rows[0].a_star) + " .. " + fmt(rows.back().a_star) +
              (monotone ? " non-increasing" : " NOT monotone") + ", continuity ratios " + ratios + "R0=" +
              fmt(z.radius) + " |a_star(R0)|=" + fmt(std::abs(z.value)) + ", mu " +
              (mu_monotone ? "monotone" : "NOT monotone")};
}

Outcome shift_bound() {
  const auto g = Grid::unit_box(1, 65);
  const auto p = homogeneous_problem(g);
  PotentialOptions o;
  o.solver.restarts = 2;
  o.solver.gradient_tolerance = 1e-8;
  const double a1 = a_star(p, BallSpec(1.0, p.r()), o).value;
  const double a2 = a_star(p, BallSpec(2.0, p.r()), o).value;
  return {a1 - a2 >= 0.5 - 1e-4, "a_star(1) - a_star(2) = " + fmt(a1 - a2) + " (bound 0.5)"};
}

Outcome blowup(Conforming3D& c) {
  if (!c.a) throw Error("A-minimiser unavailable");
  const auto prof = blowup_profile(c.p, c.a->minimizer, {1e-3, 1.0, 1e3});
  const double small = prof[0].value / prof[1].value;
  const double large = prof[2].value / prof[1].value;
  return {small > 10.0 && large > 10.0, "A(tu)/A(u) = " + fmt(small) + " at t=1e-3, " + fmt(large) + " at t=1e3"};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + NHE_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "nhe_acceptance_determinism";
  fs::remove_all(root);
  const fs::path src = NHE_SOURCE_DIR;
  const std::vector<std::pair<std::string, fs::path>> runs = {{"eig", src / "configs/variable_2d.json"},
                                                              {"sweep", src / "configs/sweep_1d.json"}};
  int files = 0;
  int differing = 0;
  for (const auto& [cmd, cfg] : runs) {
    for (const char* sub : {"a", "b"}) {
      const int code = run_cli(cmd + " --emit-minimizer --seed 3 --config \"" + cfg.string() + "\" --out \"" +
                               (root / cmd / sub).string() + "\"");
      if (code != 0) return {false, cmd + " exited with " + std::to_string(code)};
    }
    for (const auto& entry : fs::directory_iterator(root / cmd / "a")) {
      ++files;
      const fs::path other = root / cmd / "b" / entry.path().filename();
      if (!fs::exists(other) || io::read_text(entry.path()) != io::read_text(other)) ++differing;
    }
  }
  return {files > 0 && differing == 0,
          std::to_string(files) + " output files compared, " + std::to_string(differing) + " differ"};
}

}  // namespace

int main() {
  Conforming3D c3;
  criterion(1, "young indices", 1.0, young_indices);
  criterion(2, "luxemburg norms", 10.0, luxemburg);
  criterion(3, "gateaux vs differences", 30.0, gateaux);
  criterion(4, "homogeneous oracle", 30.0, homogeneous_oracle);
  criterion(5, "eigenvalue structure 3d", 600.0, [&] { return eigenvalue_structure(c3); });
  criterion(6, "lambda_m sign flip", 300.0, [&] { return sign_flip(c3); });
  criterion(7, "a_star sweep 1d", 180.0, sweep);
  criterion(8, "homogeneous shift bound", 300.0, shift_bound);
  criterion(9, "blow-up profile", 10.0, [&] { return blowup(c3); });
  criterion(10, "determinism", 600.0, determinism);
  std::printf("%d/10 criteria pass\n", passed);
  return 0;
}

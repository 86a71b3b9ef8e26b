#pragma once

// Subcommands of the nhe tool. Each writes <out>/<command>.json (plus CSV
// tables where noted), prints a short summary, and returns the process exit
// code.

#include <cmath>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "nhe/config.hpp"
#include "nhe/eigensolve.hpp"
#include "nhe/io.hpp"
#include "nhe/potopt.hpp"

namespace nhe::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitNoConvergence = 2;
inline constexpr int kExitIo = 3;

struct Context {
  RunConfig config;
  std::filesystem::path out = "nhe-out";
  bool emit_minimizer = false;
};

inline Json to_json(const ConditionReport& r) {
  Json chain = Json::array();
  for (const auto& e : r.chain_values) chain.push_back({{"name", e.name}, {"value", e.value}});
  Json links = Json::array();
  for (const auto& l : r.links) {
    links.push_back({{"inequality", r.describe_link(l)}, {"holds", l.holds}});
  }
  Json j = {{"chain", chain},
            {"links", links},
            {"pass_2", r.pass_2},
            {"pass_3", r.pass_3},
            {"pass_4", r.pass_4},
            {"all_pass", r.all_pass()},
            {"sobolev_bound", r.sobolev_bound},
            {"r_threshold", r.r_threshold},
            {"r_min", r.r_min},
            {"dimension", r.dimension},
            {"relaxed_mode", r.relaxed_mode}};
  const auto v = r.first_violation();
  j["first_violation"] = v ? Json(*v) : Json(nullptr);
  return j;
}

inline Json to_json(const EigenResult& r) {
  return {{"value", r.value},          {"residual", r.residual},         {"converged", r.converged},
          {"trivial", r.trivial},      {"restarts_used", r.restarts_used}, {"best_restart", r.best_restart},
          {"iterations", r.iterations}, {"max_abs", r.minimizer.max_abs()}};
}

namespace detail {

inline Json envelope(const Context& c, const std::string& command, const ConditionReport& report) {
  return {{"command", command},
          {"config_hash", c.config.hash()},
          {"seed", c.config.seed},
          {"potential", c.config.potential_text},
          {"conditions", to_json(report)}};
}

inline void finish(const Context& c, const std::string& command, const Json& j) {
  io::write_text(c.out / (command + ".json"), j.dump(2) + "\n");
}

inline double radius_scale(const Context& c, const ProblemSpec& p, Json& j) {
  if (!c.config.sweep.relative_to_lambda_m) return 1.0;
  const EigenResult lm = lambda_m(p, c.config.options.solver);
  const double ref = luxemburg_norm(GridFunction::constant(p.grid_ptr(), lm.value), p.r());
  j["lambda_m"] = to_json(lm);
  j["radius_unit"] = ref;
  return ref;
}

}  // namespace detail

inline int cmd_check(const Context& c, std::ostream& os) {
  const ProblemSpec p = c.config.problem();
  const auto& r = p.report();
  for (const auto& l : r.links) os << (l.holds ? "ok   " : "FAIL ") << r.describe_link(l) << "\n";
  os << (r.pass_3 ? "ok   " : "FAIL ") << "q1+ = " << io::format_double(r.chain_values[8].value)
     << " < N phi2_lo/(N - phi2_lo) = " << io::format_double(r.sobolev_bound) << "\n";
  os << (r.pass_4 ? "ok   " : "FAIL ") << "r- = " << io::format_double(r.r_min)
     << " > N/m- = " << io::format_double(r.r_threshold) << "\n";
  if (const auto v = r.first_violation()) os << "first violation: " << *v << "\n";
  os << "conditions " << (r.all_pass() ? "hold" : "fail") << (r.relaxed_mode ? " (relaxed mode)" : "") << "\n";
  detail::finish(c, "check", detail::envelope(c, "check", r));
  return r.all_pass() ? kExitOk : kExitValidation;
}

inline int cmd_eig(const Context& c, std::ostream& os) {
  const ProblemSpec p = c.config.problem();
  const auto& o = c.config.options.solver;
  const EigenResult a = minimize_rayleigh_A(p, o);
  const EigenResult b = minimize_rayleigh_B(p, o);
  const EigenResult lm = lambda_m(p, o);
  Json j = detail::envelope(c, "eig", p.report());
  j["A"] = to_json(a);
  j["A"]["residual_weak"] = residual_weak(p, a.minimizer, a.value);
  j["B"] = to_json(b);
  j["lambda_m"] = to_json(lm);
  j["B_le_A"] = b.value <= a.value + o.gradient_tolerance;
  j["A_positive"] = a.value > 0.0;
  if (c.emit_minimizer) {
    io::write_text(c.out / "minimizer.csv", io::grid_function_csv(a.minimizer));
    j["minimizer_file"] = "minimizer.csv";
  }
  detail::finish(c, "eig", j);
  os << "A = " << io::format_double(a.value) << " (residual " << io::format_double(a.residual) << ")\n"
     << "B = " << io::format_double(b.value) << "\n"
     << "lambda_m = " << io::format_double(lm.value) << "\n";
  return a.converged && b.converged && lm.converged ? kExitOk : kExitNoConvergence;
}

inline int cmd_family(const Context& c, std::ostream& os) {
  if (c.config.lambdas.empty()) throw ValidationError("config field 'family.lambdas': missing");
  const ProblemSpec p = c.config.problem();
  const auto& o = c.config.options.solver;
  const EigenResult a = minimize_rayleigh_A(p, o);
  const EigenResult b = minimize_rayleigh_B(p, o);
  Json j = detail::envelope(c, "family", p.report());
  j["A"] = to_json(a);
  j["B"] = to_json(b);
  Json rows = Json::array();
  std::string csv = "lambda,class,T,residual,trivial\n";
  bool ok = a.converged && b.converged;
  for (const auto& spec : c.config.lambdas) {
    double lambda = spec.offset;
    if (spec.anchor == LambdaSpec::Anchor::a) lambda += a.value;
    if (spec.anchor == LambdaSpec::Anchor::b) lambda += b.value;
    std::string cls;
    SolverOptions so = o;
    if (lambda > a.value) so.warm_starts.insert(so.warm_starts.begin(), a.minimizer);
    const EigenResult t = solve_T(p, lambda, so);
    bool all_trivial = true;
    for (const auto& rec : t.restarts) all_trivial = all_trivial && rec.trivial;
    if (lambda > a.value) {
      cls = !t.trivial && t.converged ? "eigenvalue" : "eigenfunction_not_found";
      ok = ok && cls == "eigenvalue";
    } else if (lambda < b.value) {
      cls = all_trivial ? "no_nontrivial_critical_point" : "nontrivial_critical_point_found";
    } else {
      cls = "unresolved";
    }
    rows.push_back({{"lambda", lambda}, {"spec", spec.text}, {"class", cls}, {"T", to_json(t)}});
    csv += io::format_double(lambda) + "," + cls + "," + io::format_double(t.value) + "," +
           io::format_double(t.residual) + "," + (t.trivial ? "1" : "0") + "\n";
    os << "lambda = " << io::format_double(lambda) << ": " << cls << "\n";
  }
  j["lambdas"] = rows;
  io::write_text(c.out / "family.csv", csv);
  detail::finish(c, "family", j);
  return ok ? kExitOk : kExitNoConvergence;
}

inline int cmd_sweep(const Context& c, std::ostream& os) {
  const auto& sw = c.config.sweep;
  if (sw.radii.empty()) throw ValidationError("config field 'sweep.radii': missing");
  const ProblemSpec p = c.config.problem();
  const auto& o = c.config.options;
  Json j = detail::envelope(c, "sweep", p.report());
  const double scale = detail::radius_scale(c, p, j);
  std::vector<double> radii;
  for (double x : sw.radii) radii.push_back(x * scale);

  const auto rows = a_star_sweep(p, p.r(), radii, o);
  const double tol = 2.0 * o.solver.gradient_tolerance;
  std::string csv = "R,a_star,converged,iterations,residual\n";
  Json jrows = Json::array();
  bool ok = true;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    ok = ok && r.converged;
    csv += io::format_double(r.R) + "," + io::format_double(r.a_star) + "," + (r.converged ? "1" : "0") + "," +
           std::to_string(r.iterations) + "," + io::format_double(r.residual) + "\n";
    Json row = {{"R", r.R},
                {"a_star", r.a_star},
                {"converged", r.converged},
                {"iterations", r.iterations},
                {"residual", r.residual},
                {"norm_v_star", luxemburg_norm(r.v_star, p.r())}};
    if (k > 0) {
      row["decrement"] = rows[k - 1].a_star - r.a_star;
      row["half_radius_step"] = 0.5 * (r.R - rows[k - 1].R);
    }
    if (c.emit_minimizer) {
      const std::string name = "v_star_" + std::to_string(k) + ".csv";
      io::write_text(c.out / name, io::grid_function_csv(r.v_star));
      row["v_star_file"] = name;
    }
    jrows.push_back(row);
    os << "R = " << io::format_double(r.R) << "  a_star = " << io::format_double(r.a_star) << "\n";
  }
  io::write_text(c.out / "sweep.csv", csv);
  j["rows"] = jrows;
  j["monotone"] = sweep_is_monotone(rows, tol);
  j["envelope_consistent"] = sweep_is_envelope(rows, tol);
  j["tolerance"] = tol;

  Json probes = Json::array();
  for (double x : sw.continuity) {
    const auto probe = continuity_probe(p, p.r(), x * scale, o);
    probes.push_back({{"R", probe.radius},
                      {"deltas", probe.deltas},
                      {"differences", probe.differences},
                      {"ratios", probe.ratios},
                      {"consistent", probe.consistent}});
  }
  j["continuity"] = probes;

  if (sw.upper) {
    Json up = Json::array();
    for (double radius : radii) {
      const auto u = a_upper(p, BallSpec(radius, p.r()), o);
      up.push_back({{"R", radius}, {"a_upper", u.value}, {"converged", u.converged}});
      ok = ok && u.converged;
    }
    j["upper"] = up;
  }

  if (sw.zero_radius) {
    detail::finish(c, "sweep", j);
    const auto z = find_zero_radius(p, p.r(), radii.back(), o);
    ok = ok && z.converged;
    Json mu = Json::array();
    std::string mu_csv = "R,mu\n";
    for (const auto& r : rows) {
      if (r.R < z.radius) continue;
      mu.push_back({{"R", r.R}, {"mu", -r.a_star}});
      mu_csv += io::format_double(r.R) + "," + io::format_double(-r.a_star) + "\n";
    }
    j["zero_radius"] = {{"R0", z.radius},
                        {"a_star_R0", z.value},
                        {"a_star_0", z.value_at_zero},
                        {"bisections", z.bisections},
                        {"converged", z.converged},
                        {"mu", mu}};
    io::write_text(c.out / "mu.csv", mu_csv);
    os << "R0 = " << io::format_double(z.radius) << "\n";
  }
  detail::finish(c, "sweep", j);
  os << "monotone: " << (j["monotone"].get<bool>() ? "yes" : "no") << "\n";
  return ok ? kExitOk : kExitNoConvergence;
}

inline Json young_report(const YoungFunction& f) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double t : log_grid(kSampleGridMin, kSampleGridMax, kIndexGridPoints)) {
    const double g = f.growth_ratio(t);
    lo = std::min(lo, g);
    hi = std::max(hi, g);
  }
  const auto idx = f.indices();
  const auto sc = check_sqrt_convexity(f);
  Json j = {{"family", to_string(f.family())},
            {"description", f.describe()},
            {"index_lower", idx.lower},
            {"index_upper", idx.upper},
            {"sampled_ratio_min", lo},
            {"sampled_ratio_max", hi},
            {"delta2_estimate", estimate_delta2(f)},
            {"sqrt_convex", sc.convex}};
  if (sc.violation) j["sqrt_convexity_violation"] = *sc.violation;
  return j;
}

inline int cmd_indices(const Context& c, std::ostream& os) {
  const ProblemSpec p = c.config.problem();
  Json j = detail::envelope(c, "indices", p.report());
  j["phi1"] = young_report(c.config.phi1);
  j["phi2"] = young_report(c.config.phi2);
  for (const char* name : {"phi1", "phi2"}) {
    os << name << ": " << j[name]["description"].get<std::string>() << "  indices ("
       << io::format_double(j[name]["index_lower"].get<double>()) << ", "
       << io::format_double(j[name]["index_upper"].get<double>()) << ")\n";
  }
  detail::finish(c, "indices", j);
  return kExitOk;
}

inline int cmd_norms(const Context& c, std::ostream& os) {
  const ProblemSpec p = c.config.problem();
  Json j = detail::envelope(c, "norms", p.report());
  j["potential"] = {{"norm_r", luxemburg_norm(c.config.potential, p.r())},
                    {"modular_r", modular(c.config.potential, p.r())}};
  Json items = Json::array();
  for (const auto& n : c.config.norms) {
    const CellField grad = gradient_magnitude(n.u);
    Json item = {{"u", n.u_text},
                 {"q", n.q_text},
                 {"modular", modular(n.u, n.q)},
                 {"luxemburg", luxemburg_norm(n.u, n.q)},
                 {"orlicz_phi1", orlicz_luxemburg_norm(n.u, c.config.phi1)},
                 {"orlicz_phi2", orlicz_luxemburg_norm(n.u, c.config.phi2)},
                 {"gradient_orlicz_phi1", orlicz_luxemburg_norm(grad, c.config.phi1)},
                 {"gradient_orlicz_phi2", orlicz_luxemburg_norm(grad, c.config.phi2)}};
    os << "|" << n.u_text << "|_{" << n.q_text << "} = " << io::format_double(item["luxemburg"].get<double>())
       << "\n";
    items.push_back(item);
  }
  j["functions"] = items;
  detail::finish(c, "norms", j);
  return kExitOk;
}

}  // namespace nhe::cli

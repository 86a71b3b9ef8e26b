#pragma once

// JSON run configuration. Every parse failure names the offending field.
//
// {
//   "grid":      {"dimension": 2, "nodes": 33, "lower": [0, 0], "upper": [1, 1]},
//   "phi1":      {"family": "power", "p": 2.5},
//   "phi2":      {"family": "log_power", "p": 1.3, "s": 0.1},
//   "q1": 2.0, "q2": "1.5", "m": 1.7, "r": 2.0,   number or expression in x, y, z
//   "potential": 0 | "sin(pi*x)" | {"file": "v.csv"} | {"random": {"seed": 1, "amplitude": 5}},
//   "solver":    {"method": "lbfgs", "restarts": 8, ...},
//   "potopt":    {"max_alternations": 100, ...},
//   "family":    {"lambdas": [3.0, "A+0.5", "B-0.5"]},
//   "sweep":     {"radii": [0, 0.5, 1], "unit": "lambda_m", "zero_radius": true, "continuity": [0.5]},
//   "norms":     [{"u": "x*(1-x)", "q": 2.0}],
//   "seed": 0
// }
//
// Omitted blocks take the defaults of the corresponding option structs.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nhe/eigensolve.hpp"
#include "nhe/error.hpp"
#include "nhe/expression.hpp"
#include "nhe/functionals.hpp"
#include "nhe/io.hpp"
#include "nhe/potopt.hpp"
#include "nhe/young.hpp"

namespace nhe {

using Json = nlohmann::json;

/// A lambda given directly or as an offset from the computed A or B.
struct LambdaSpec {
  enum class Anchor { none, a, b } anchor = Anchor::none;
  double offset = 0.0;
  std::string text;
};

struct SweepSpec {
  std::vector<double> radii;
  /// Radii are multiples of |lambda_m|_r when true.
  bool relative_to_lambda_m = false;
  bool zero_radius = false;
  bool upper = false;
  std::vector<double> continuity;
};

struct NormSpec {
  GridFunction u;
  ExponentField q;
  std::string u_text;
  std::string q_text;
};

struct RunConfig {
  Json raw;
  std::filesystem::path base_dir;
  GridPtr grid;
  YoungFunction phi1 = YoungFunction::power(2.0);
  YoungFunction phi2 = YoungFunction::power(2.0);
  std::optional<ExponentField> q1, q2, m, r;
  GridFunction potential;
  std::string potential_text;
  PotentialOptions options;
  std::uint64_t seed = 0;
  std::vector<LambdaSpec> lambdas;
  SweepSpec sweep;
  std::vector<NormSpec> norms;

  ProblemSpec problem() const { return ProblemSpec(phi1, phi2, *q1, *q2, *m, *r, potential); }

  /// FNV-1a of the canonical (key-sorted, compact) JSON with the effective seed.
  std::string hash() const {
    Json canon = raw;
    canon["seed"] = seed;
    return io::hex64(io::fnv1a(canon.dump()));
  }
};

namespace config_detail {

[[noreturn]] inline void fail(const std::string& field, const std::string& msg) {
  throw ValidationError("config field '" + field + "': " + msg);
}

inline const Json* find(const Json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

inline const Json& require(const Json& j, const std::string& key, const std::string& path) {
  const Json* v = find(j, key);
  if (!v) fail(path + key, "missing");
  return *v;
}

inline double number(const Json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  return j.get<double>();
}

inline int integer(const Json& j, const std::string& field) {
  if (!j.is_number_integer()) fail(field, "expected an integer");
  return j.get<int>();
}

inline bool boolean(const Json& j, const std::string& field) {
  if (!j.is_boolean()) fail(field, "expected true or false");
  return j.get<bool>();
}

inline double number_or(const Json& obj, const std::string& key, const std::string& path, double fallback) {
  const Json* v = find(obj, key);
  return v ? number(*v, path + key) : fallback;
}

inline int integer_or(const Json& obj, const std::string& key, const std::string& path, int fallback) {
  const Json* v = find(obj, key);
  return v ? integer(*v, path + key) : fallback;
}

inline bool boolean_or(const Json& obj, const std::string& key, const std::string& path, bool fallback) {
  const Json* v = find(obj, key);
  return v ? boolean(*v, path + key) : fallback;
}

inline void only_keys(const Json& obj, std::initializer_list<const char*> keys, const std::string& path) {
  if (!obj.is_object()) fail(path.empty() ? "<root>" : path.substr(0, path.size() - 1), "expected an object");
  for (const auto& [k, _] : obj.items()) {
    bool known = false;
    for (const char* allowed : keys) known = known || k == allowed;
    if (!known) fail(path + k, "unknown field");
  }
}

inline std::array<double, 3> triple(const Json* j, const std::string& field, int dim, double fallback) {
  std::array<double, 3> out{fallback, fallback, fallback};
  if (!j) return out;
  if (j->is_number()) {
    out.fill(j->get<double>());
    return out;
  }
  if (!j->is_array() || j->size() != static_cast<std::size_t>(dim)) {
    fail(field, "expected a number or an array of " + std::to_string(dim));
  }
  for (int d = 0; d < dim; ++d) out[static_cast<std::size_t>(d)] = number((*j)[static_cast<std::size_t>(d)], field);
  return out;
}

inline GridPtr parse_grid(const Json& j) {
  only_keys(j, {"dimension", "nodes", "lower", "upper"}, "grid.");
  const int dim = integer(require(j, "dimension", "grid."), "grid.dimension");
  if (dim < 1 || dim > 3) fail("grid.dimension", "must be 1, 2 or 3");
  const Json& nodes = require(j, "nodes", "grid.");
  std::array<int, 3> n{1, 1, 1};
  if (nodes.is_number_integer()) {
    for (int d = 0; d < dim; ++d) n[static_cast<std::size_t>(d)] = nodes.get<int>();
  } else if (nodes.is_array() && nodes.size() == static_cast<std::size_t>(dim)) {
    for (int d = 0; d < dim; ++d) n[static_cast<std::size_t>(d)] = integer(nodes[static_cast<std::size_t>(d)], "grid.nodes");
  } else {
    fail("grid.nodes", "expected an integer or an array of " + std::to_string(dim));
  }
  auto lo = triple(find(j, "lower"), "grid.lower", dim, 0.0);
  auto hi = triple(find(j, "upper"), "grid.upper", dim, 1.0);
  for (int d = dim; d < 3; ++d) {
    lo[static_cast<std::size_t>(d)] = 0.0;
    hi[static_cast<std::size_t>(d)] = 1.0;
  }
  try {
    return std::make_shared<const Grid>(dim, n, lo, hi);
  } catch (const ValidationError& e) {
    fail("grid", e.what());
  }
}

inline YoungFunction parse_young(const Json& j, const std::string& name) {
  const std::string path = name + ".";
  if (!j.is_object()) fail(name, "expected an object with a 'family'");
  const Json& fam = require(j, "family", path);
  if (!fam.is_string()) fail(path + "family", "expected a string");
  const auto family = fam.get<std::string>();
  try {
    if (family == "power") {
      only_keys(j, {"family", "p"}, path);
      return YoungFunction::power(number(require(j, "p", path), path + "p"));
    }
    if (family == "log_power") {
      only_keys(j, {"family", "p", "s"}, path);
      return YoungFunction::log_power(number(require(j, "p", path), path + "p"),
                                      number(require(j, "s", path), path + "s"));
    }
    if (family == "power_over_log") {
      only_keys(j, {"family", "p"}, path);
      return YoungFunction::power_over_log(number(require(j, "p", path), path + "p"));
    }
    if (family == "tabulated") {
      only_keys(j, {"family", "t", "phi"}, path);
      auto list = [&](const char* key) {
        const Json& a = require(j, key, path);
        if (!a.is_array()) fail(path + key, "expected an array");
        std::vector<double> v;
        for (const auto& x : a) v.push_back(number(x, path + key));
        return v;
      };
      return YoungFunction::tabulated(list("t"), list("phi"));
    }
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    if (what.rfind("config field", 0) == 0) throw;
    fail(name, what);
  }
  fail(path + "family", "unknown family '" + family + "'");
}

inline std::string scalar_text(const Json& j, const std::string& field) {
  if (j.is_number()) return io::format_double(j.get<double>());
  if (j.is_string()) return j.get<std::string>();
  fail(field, "expected a number or an expression string");
}

inline Expression parse_expression(const Json& j, const std::string& field) {
  try {
    return Expression::parse(scalar_text(j, field));
  } catch (const ValidationError& e) {
    const std::string what = e.what();
    if (what.rfind("config field", 0) == 0) throw;
    fail(field, what);
  }
}

inline ExponentField parse_exponent(const GridPtr& g, const Json& j, const std::string& field) {
  const Expression e = parse_expression(j, field);
  try {
    return ExponentField::sample(g, [&](double x, double y, double z) { return e(x, y, z); });
  } catch (const ValidationError& err) {
    fail(field, err.what());
  }
}

inline GridFunction sample_function(const GridPtr& g, const Expression& e, const std::string& field) {
  std::vector<double> v(g->node_count());
  for (std::size_t n = 0; n < v.size(); ++n) {
    const auto x = g->coordinates(n);
    v[n] = e(x[0], x[1], x[2]);
    if (!std::isfinite(v[n])) fail(field, "expression is not finite at node " + std::to_string(n));
  }
  return GridFunction(g, std::move(v), false);
}

inline GridFunction parse_potential(const GridPtr& g, const Json* j, const std::filesystem::path& base,
                                    std::uint64_t run_seed, std::string& text) {
  if (!j) {
    text = "0";
    return GridFunction::zero(g, false);
  }
  if (j->is_number() || j->is_string()) {
    text = scalar_text(*j, "potential");
    return sample_function(g, parse_expression(*j, "potential"), "potential");
  }
  if (!j->is_object()) fail("potential", "expected a number, an expression, {\"file\": ...} or {\"random\": ...}");
  if (const Json* f = find(*j, "file")) {
    only_keys(*j, {"file"}, "potential.");
    if (!f->is_string()) fail("potential.file", "expected a path string");
    text = "file:" + f->get<std::string>();
    std::filesystem::path p = f->get<std::string>();
    if (p.is_relative()) p = base / p;
    return io::read_grid_function_csv(p, g, false);
  }
  if (const Json* r = find(*j, "random")) {
    only_keys(*j, {"random"}, "potential.");
    only_keys(*r, {"seed", "amplitude"}, "potential.random.");
    const double amp = number(require(*r, "amplitude", "potential.random."), "potential.random.amplitude");
    if (!(amp >= 0.0)) fail("potential.random.amplitude", "must be >= 0");
    const Json* s = find(*r, "seed");
    if (s && !s->is_number_unsigned()) fail("potential.random.seed", "expected a non-negative integer");
    const std::uint64_t seed = s ? s->get<std::uint64_t>() : run_seed;
    std::mt19937_64 rng(seed);
    std::vector<double> v(g->node_count());
    for (double& x : v) x = amp * (2.0 * unit_uniform(rng) - 1.0);
    text = "random(seed=" + std::to_string(seed) + ",amplitude=" + io::format_double(amp) + ")";
    return GridFunction(g, std::move(v), false);
  }
  fail("potential", "expected 'file' or 'random'");
}

inline void parse_solver(const Json& j, SolverOptions& o) {
  const std::string p = "solver.";
  only_keys(j, {"method", "memory", "restarts", "max_iterations", "armijo", "backtrack", "initial_step",
                "gradient_tolerance", "triviality_threshold"},
            p);
  if (const Json* m = find(j, "method")) {
    const std::string s = m->is_string() ? m->get<std::string>() : "";
    if (s == "lbfgs") o.method = DescentMethod::lbfgs;
    else if (s == "steepest") o.method = DescentMethod::steepest;
    else fail(p + "method", "expected \"lbfgs\" or \"steepest\"");
  }
  o.memory = integer_or(j, "memory", p, o.memory);
  o.restarts = integer_or(j, "restarts", p, o.restarts);
  o.max_iterations = integer_or(j, "max_iterations", p, o.max_iterations);
  o.armijo = number_or(j, "armijo", p, o.armijo);
  o.backtrack = number_or(j, "backtrack", p, o.backtrack);
  o.initial_step = number_or(j, "initial_step", p, o.initial_step);
  o.gradient_tolerance = number_or(j, "gradient_tolerance", p, o.gradient_tolerance);
  o.triviality_threshold = number_or(j, "triviality_threshold", p, o.triviality_threshold);
}

inline void parse_potopt(const Json& j, PotentialOptions& o) {
  const std::string p = "potopt.";
  only_keys(j, {"max_alternations", "stall_tolerance", "membership_tolerance", "zero_tolerance", "max_bisections"}, p);
  o.max_alternations = integer_or(j, "max_alternations", p, o.max_alternations);
  o.stall_tolerance = number_or(j, "stall_tolerance", p, o.stall_tolerance);
  o.membership_tolerance = number_or(j, "membership_tolerance", p, o.membership_tolerance);
  o.zero_tolerance = number_or(j, "zero_tolerance", p, o.zero_tolerance);
  o.max_bisections = integer_or(j, "max_bisections", p, o.max_bisections);
}

inline LambdaSpec parse_lambda(const Json& j, const std::string& field) {
  LambdaSpec l;
  if (j.is_number()) {
    l.offset = j.get<double>();
    l.text = io::format_double(l.offset);
    return l;
  }
  if (!j.is_string()) fail(field, "expected a number or \"A+d\" / \"B-d\"");
  l.text = j.get<std::string>();
  std::string s;
  for (char c : l.text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  }
  if (s.empty() || (s[0] != 'A' && s[0] != 'B')) fail(field, "expected a number or \"A+d\" / \"B-d\"");
  l.anchor = s[0] == 'A' ? LambdaSpec::Anchor::a : LambdaSpec::Anchor::b;
  if (s.size() == 1) return l;
  std::size_t used = 0;
  try {
    l.offset = std::stod(s.substr(1), &used);
  } catch (const std::logic_error&) {
    fail(field, "malformed offset in '" + l.text + "'");
  }
  if (used != s.size() - 1 || (s[1] != '+' && s[1] != '-')) fail(field, "malformed offset in '" + l.text + "'");
  return l;
}

inline std::vector<double> number_list(const Json& j, const std::string& field) {
  if (!j.is_array()) fail(field, "expected an array of numbers");
  std::vector<double> v;
  for (const auto& x : j) v.push_back(number(x, field));
  return v;
}

inline void parse_sweep(const Json& j, SweepSpec& s) {
  const std::string p = "sweep.";
  only_keys(j, {"radii", "unit", "zero_radius", "upper", "continuity"}, p);
  s.radii = number_list(require(j, "radii", p), p + "radii");
  if (s.radii.empty()) fail(p + "radii", "must not be empty");
  for (std::size_t k = 0; k < s.radii.size(); ++k) {
    if (s.radii[k] < 0.0) fail(p + "radii", "radii must be >= 0");
    if (k > 0 && s.radii[k] < s.radii[k - 1]) fail(p + "radii", "radii must be ascending");
  }
  if (const Json* u = find(j, "unit")) {
    const std::string unit = u->is_string() ? u->get<std::string>() : "";
    if (unit == "absolute") s.relative_to_lambda_m = false;
    else if (unit == "lambda_m") s.relative_to_lambda_m = true;
    else fail(p + "unit", "expected \"absolute\" or \"lambda_m\"");
  }
  s.zero_radius = boolean_or(j, "zero_radius", p, false);
  s.upper = boolean_or(j, "upper", p, false);
  if (const Json* c = find(j, "continuity")) {
    s.continuity = number_list(*c, p + "continuity");
    for (double x : s.continuity) {
      if (!(x > 0.0)) fail(p + "continuity", "probe radii must be positive");
    }
  }
}

}  // namespace config_detail

/// Builds a RunConfig from parsed JSON. `seed_override` replaces the "seed" field.
inline RunConfig parse_config(const Json& j, const std::filesystem::path& base_dir,
                              std::optional<std::uint64_t> seed_override = std::nullopt) {
  using namespace config_detail;
  only_keys(j, {"grid", "phi1", "phi2", "q1", "q2", "m", "r", "potential", "solver", "potopt", "family", "sweep",
                "norms", "seed"},
            "");
  RunConfig c;
  c.raw = j;
  c.base_dir = base_dir;
  if (const Json* s = find(j, "seed")) {
    if (!s->is_number_unsigned()) fail("seed", "expected a non-negative integer");
    c.seed = s->get<std::uint64_t>();
  }
  if (seed_override) c.seed = *seed_override;
  c.grid = parse_grid(require(j, "grid", ""));
  c.phi1 = parse_young(require(j, "phi1", ""), "phi1");
  c.phi2 = parse_young(require(j, "phi2", ""), "phi2");
  c.q1 = parse_exponent(c.grid, require(j, "q1", ""), "q1");
  c.q2 = parse_exponent(c.grid, require(j, "q2", ""), "q2");
  c.m = parse_exponent(c.grid, require(j, "m", ""), "m");
  c.r = parse_exponent(c.grid, require(j, "r", ""), "r");
  c.potential = parse_potential(c.grid, find(j, "potential"), base_dir, c.seed, c.potential_text);
  if (const Json* s = find(j, "solver")) parse_solver(*s, c.options.solver);
  c.options.solver.seed = c.seed;
  if (const Json* s = find(j, "potopt")) parse_potopt(*s, c.options);
  try {
    c.options.validate();
  } catch (const ValidationError& e) {
    fail("solver", e.what());
  }
  if (const Json* f = find(j, "family")) {
    only_keys(*f, {"lambdas"}, "family.");
    const Json& l = require(*f, "lambdas", "family.");
    if (!l.is_array()) fail("family.lambdas", "expected an array");
    for (const auto& x : l) c.lambdas.push_back(parse_lambda(x, "family.lambdas"));
  }
  if (const Json* s = find(j, "sweep")) parse_sweep(*s, c.sweep);
  if (const Json* n = find(j, "norms")) {
    if (!n->is_array()) fail("norms", "expected an array of {\"u\", \"q\"} objects");
    for (std::size_t k = 0; k < n->size(); ++k) {
      const std::string p = "norms[" + std::to_string(k) + "].";
      only_keys((*n)[k], {"u", "q"}, p);
      NormSpec ns;
      const Json& u = require((*n)[k], "u", p);
      const Json& q = require((*n)[k], "q", p);
      ns.u_text = scalar_text(u, p + "u");
      ns.q_text = scalar_text(q, p + "q");
      ns.u = sample_function(c.grid, parse_expression(u, p + "u"), p + "u");
      ns.q = parse_exponent(c.grid, q, p + "q");
      c.norms.push_back(std::move(ns));
    }
  }
  return c;
}

/// Reads and parses a configuration file. Unreadable files raise IoError,
/// malformed JSON and invalid fields raise ValidationError.
inline RunConfig load_config(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = std::nullopt) {
  const std::string text = io::read_text(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path(), seed_override);
}

}  // namespace nhe

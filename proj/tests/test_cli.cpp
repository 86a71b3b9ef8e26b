#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include "nhe/commands.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using nhe::Json;
using namespace nhe::testing;

namespace {

const fs::path kSource = NHE_SOURCE_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nhe_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + NHE_CLI_PATH + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = nhe::io::read_text(out);
  r.err = nhe::io::read_text(err);
  return r;
}

fs::path write_config(const fs::path& dir, const Json& j) {
  const fs::path p = dir / "config.json";
  nhe::io::write_text(p, j.dump(2));
  return p;
}

Json small_conforming() {
  return Json::parse(R"({
    "grid": {"dimension": 2, "nodes": 9},
    "phi1": {"family": "power", "p": 2.5},
    "phi2": {"family": "power", "p": 1.3},
    "q1": 2.0, "q2": 1.5, "m": 1.7, "r": 2.0,
    "potential": {"random": {"amplitude": 2.0}},
    "solver": {"restarts": 3},
    "family": {"lambdas": ["A+0.5", "B-0.5", "A-0.0000001"]},
    "sweep": {"radii": [0, 1, 2]}
  })");
}

}  // namespace

TEST(Expression, PrecedenceAndFunctions) {
  EXPECT_DOUBLE_EQ(nhe::Expression::parse("1 + 2 * 3")(0, 0, 0), 7.0);
  EXPECT_DOUBLE_EQ(nhe::Expression::parse("2 ^ 3 ^ 2")(0, 0, 0), 512.0);
  EXPECT_DOUBLE_EQ(nhe::Expression::parse("-2 ^ 2")(0, 0, 0), -4.0);
  EXPECT_DOUBLE_EQ(nhe::Expression::parse("(1 - x) / 4")(0.5, 0, 0), 0.125);
  EXPECT_DOUBLE_EQ(nhe::Expression::parse("x*y + z")(2, 3, 4), 10.0);
  EXPECT_NEAR(nhe::Expression::parse("sin(pi/2) + cos(0) + exp(0) + log(1) + sqrt(4) + abs(-1)")(0, 0, 0), 6.0,
              1e-15);
  EXPECT_DOUBLE_EQ(nhe::Expression::parse("1.5e-1")(0, 0, 0), 0.15);
}

TEST(Expression, Errors) {
  for (const char* bad : {"", "1 +", "(1", "foo(1)", "sin 1", "1 2", "x $ y", "w"}) {
    EXPECT_THROW(nhe::Expression::parse(bad), nhe::ValidationError) << bad;
  }
}

TEST(Config, FieldDiagnostics) {
  auto j = small_conforming();
  j.erase("q2");
  try {
    nhe::parse_config(j, ".");
    FAIL();
  } catch (const nhe::ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("'q2'"), std::string::npos);
  }
  j = small_conforming();
  j["solver"]["restarts"] = 0;
  EXPECT_THROW(nhe::parse_config(j, "."), nhe::ValidationError);
  j = small_conforming();
  j["grid"]["colour"] = 1;
  try {
    nhe::parse_config(j, ".");
    FAIL();
  } catch (const nhe::ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("grid.colour"), std::string::npos);
  }
  j = small_conforming();
  j["m"] = "1.7 +";
  EXPECT_THROW(nhe::parse_config(j, "."), nhe::ValidationError);
  j = small_conforming();
  j["sweep"]["radii"] = {2, 1};
  EXPECT_THROW(nhe::parse_config(j, "."), nhe::ValidationError);
}

TEST(Config, PotentialForms) {
  auto j = small_conforming();
  j["potential"] = "x - y";
  const auto c = nhe::parse_config(j, ".");
  for (std::size_t n = 0; n < c.potential.size(); ++n) {
    const auto x = c.grid->coordinates(n);
    EXPECT_DOUBLE_EQ(c.potential[n], x[0] - x[1]);
  }
  const auto dir = scratch("potential");
  nhe::io::write_text(dir / "v.csv", nhe::io::grid_function_csv(c.potential));
  j["potential"] = {{"file", "v.csv"}};
  const auto from_file = nhe::parse_config(j, dir);
  EXPECT_EQ(from_file.potential.values(), c.potential.values());

  j["potential"] = {{"random", {{"amplitude", 2.0}}}};
  const auto r1 = nhe::parse_config(j, ".", 5);
  const auto r2 = nhe::parse_config(j, ".", 6);
  EXPECT_NE(r1.potential.values(), r2.potential.values());
  EXPECT_NE(r1.hash(), r2.hash());
  EXPECT_EQ(r1.hash(), nhe::parse_config(j, ".", 5).hash());
  for (double v : r1.potential.values()) EXPECT_LE(std::abs(v), 2.0);
}

TEST(Config, LambdaSpecs) {
  auto j = small_conforming();
  const auto c = nhe::parse_config(j, ".");
  ASSERT_EQ(c.lambdas.size(), 3u);
  EXPECT_EQ(c.lambdas[0].anchor, nhe::LambdaSpec::Anchor::a);
  EXPECT_DOUBLE_EQ(c.lambdas[0].offset, 0.5);
  EXPECT_EQ(c.lambdas[1].anchor, nhe::LambdaSpec::Anchor::b);
  EXPECT_DOUBLE_EQ(c.lambdas[1].offset, -0.5);
  j["family"]["lambdas"] = {"C+1"};
  EXPECT_THROW(nhe::parse_config(j, "."), nhe::ValidationError);
  j["family"]["lambdas"] = {"A*2"};
  EXPECT_THROW(nhe::parse_config(j, "."), nhe::ValidationError);
}

TEST(Io, CsvRoundTrip) {
  const auto g = nhe::Grid::unit_box(3, 4);
  const auto u = bounded_random_potential(g, 11, 3.0);
  const std::string csv = nhe::io::grid_function_csv(u);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "i,j,k,value");
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  const auto dir = scratch("csv");
  nhe::io::write_text(dir / "u.csv", csv);
  EXPECT_EQ(nhe::io::read_grid_function_csv(dir / "u.csv", g, false).values(), u.values());
  nhe::io::write_text(dir / "bad.csv", "i,j,k,value\n0,0,0,1\n");
  EXPECT_THROW(nhe::io::read_grid_function_csv(dir / "bad.csv", g, false), nhe::ValidationError);
}

TEST(Cli, CheckExitCodes) {
  const auto dir = scratch("check");
  auto ok = run("check --config \"" + (kSource / "configs/conforming_3d.json").string() + "\" --out \"" +
                    (dir / "a").string() + "\"",
                dir);
  EXPECT_EQ(ok.code, 0) << ok.err;
  EXPECT_NE(ok.out.find("conditions hold"), std::string::npos);
  auto bad = run("check --config \"" + (kSource / "configs/degenerate.json").string() + "\" --out \"" +
                     (dir / "b").string() + "\"",
                 dir);
  EXPECT_EQ(bad.code, 1);
  EXPECT_NE(bad.out.find("first violation: phi2_hi = 2 < q2- = 2"), std::string::npos);
  const auto report = Json::parse(nhe::io::read_text(dir / "b" / "check.json"));
  EXPECT_FALSE(report["conditions"]["all_pass"].get<bool>());
}

TEST(Cli, ErrorExitCodes) {
  const auto dir = scratch("errors");
  EXPECT_EQ(run("eig --config \"" + (dir / "missing.json").string() + "\"", dir).code, 3);
  nhe::io::write_text(dir / "broken.json", "{\"grid\": ");
  EXPECT_EQ(run("eig --config \"" + (dir / "broken.json").string() + "\"", dir).code, 1);
  auto j = small_conforming();
  j.erase("phi1");
  const auto missing = run("eig --config \"" + write_config(dir, j).string() + "\"", dir);
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("'phi1'"), std::string::npos);
  EXPECT_EQ(run("frobnicate", dir).code, 1);
  EXPECT_EQ(run("eig", dir).code, 1);
}

TEST(Cli, EigHomogeneousOracle) {
  const auto dir = scratch("oracle");
  const auto r = run("eig --emit-minimizer --config \"" + (kSource / "configs/homogeneous_1d.json").string() +
                         "\" --out \"" + (dir / "o").string() + "\"",
                     dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = Json::parse(nhe::io::read_text(dir / "o" / "eig.json"));
  const auto g = nhe::Grid::unit_box(1, 65);
  EXPECT_LT(relative_gap(j["A"]["value"].get<double>() / 2.0, dense_laplacian_min_eigenvalue(*g)), 1e-6);
  EXPECT_TRUE(j["B_le_A"].get<bool>());
  EXPECT_TRUE(j["conditions"]["relaxed_mode"].get<bool>());
  const auto u = nhe::io::read_grid_function_csv(dir / "o" / "minimizer.csv", g, true);
  EXPECT_NEAR(nhe::rayleigh_A(homogeneous_problem(g), u).value, j["A"]["value"].get<double>(), 1e-10);
}

TEST(Cli, FamilyClassification) {
  const auto dir = scratch("family");
  const auto r = run("family --config \"" + write_config(dir, small_conforming()).string() + "\" --out \"" +
                         (dir / "o").string() + "\"",
                     dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = Json::parse(nhe::io::read_text(dir / "o" / "family.json"));
  EXPECT_EQ(j["lambdas"][0]["class"], "eigenvalue");
  EXPECT_EQ(j["lambdas"][1]["class"], "no_nontrivial_critical_point");
  EXPECT_EQ(j["lambdas"][2]["class"], "unresolved");
  const std::string csv = nhe::io::read_text(dir / "o" / "family.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "lambda,class,T,residual,trivial");
}

TEST(Cli, SweepOutput) {
  const auto dir = scratch("sweep");
  const auto r = run("sweep --emit-minimizer --config \"" + (kSource / "configs/homogeneous_1d.json").string() +
                         "\" --out \"" + (dir / "o").string() + "\"",
                     dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = nhe::io::read_text(dir / "o" / "sweep.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "R,a_star,converged,iterations,residual");
  EXPECT_EQ(csv.find('\r'), std::string::npos);
  const auto j = Json::parse(nhe::io::read_text(dir / "o" / "sweep.json"));
  EXPECT_TRUE(j["monotone"].get<bool>());
  EXPECT_GT(j["rows"][0]["a_star"].get<double>(), 0.0);
  for (std::size_t k = 1; k < j["rows"].size(); ++k) {
    EXPECT_GE(j["rows"][k]["decrement"].get<double>(), j["rows"][k]["half_radius_step"].get<double>() - 1e-6);
  }
  EXPECT_TRUE(fs::exists(dir / "o" / "v_star_3.csv"));
}

TEST(Cli, IndicesAndNorms) {
  const auto dir = scratch("norms");
  auto j = small_conforming();
  j["phi1"] = {{"family", "log_power"}, {"p", 2.0}, {"s", 1.0}};
  j["norms"] = Json::array({{{"u", 3.0}, {"q", 2.5}}});
  const auto cfg = write_config(dir, j);
  ASSERT_EQ(run("indices --config \"" + cfg.string() + "\" --out \"" + dir.string() + "\"", dir).code, 0);
  const auto idx = Json::parse(nhe::io::read_text(dir / "indices.json"));
  EXPECT_EQ(idx["phi1"]["index_lower"].get<double>(), 2.0);
  EXPECT_EQ(idx["phi1"]["index_upper"].get<double>(), 3.0);
  EXPECT_GE(idx["phi1"]["sampled_ratio_min"].get<double>(), 2.0 - 1e-8);
  EXPECT_LE(idx["phi1"]["sampled_ratio_max"].get<double>(), 3.0 + 1e-8);
  ASSERT_EQ(run("norms --config \"" + cfg.string() + "\" --out \"" + dir.string() + "\"", dir).code, 0);
  const auto norms = Json::parse(nhe::io::read_text(dir / "norms.json"));
  // A constant on a volume-one box has Luxemburg norm equal to itself.
  EXPECT_NEAR(norms["functions"][0]["luxemburg"].get<double>(), 3.0, 1e-8);
}

TEST(Cli, Deterministic) {
  const auto dir = scratch("determinism");
  const auto cfg = write_config(dir, small_conforming());
  for (const char* cmd : {"eig", "sweep"}) {
    for (const char* sub : {"a", "b"}) {
      const auto r = run(std::string(cmd) + " --emit-minimizer --seed 9 --config \"" + cfg.string() + "\" --out \"" +
                             (dir / sub).string() + "\"",
                         dir);
      ASSERT_EQ(r.code, 0) << r.err;
    }
  }
  for (const char* file : {"eig.json", "minimizer.csv", "sweep.json", "sweep.csv", "v_star_2.csv"}) {
    EXPECT_EQ(nhe::io::read_text(dir / "a" / file), nhe::io::read_text(dir / "b" / file)) << file;
  }
  const auto other = run("eig --seed 10 --config \"" + cfg.string() + "\" --out \"" + (dir / "c").string() + "\"", dir);
  ASSERT_EQ(other.code, 0);
  EXPECT_NE(Json::parse(nhe::io::read_text(dir / "a" / "eig.json"))["config_hash"],
            Json::parse(nhe::io::read_text(dir / "c" / "eig.json"))["config_hash"]);
}

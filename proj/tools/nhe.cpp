#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nhe/commands.hpp"

namespace {

using Command = int (*)(const nhe::cli::Context&, std::ostream&);

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "nhe-out";
  bool emit_minimizer = false;
};

int run(const Options& o, Command cmd) {
  using namespace nhe::cli;
  try {
    Context c{nhe::load_config(o.config, o.seed), o.out, o.emit_minimizer};
    return cmd(c, std::cout);
  } catch (const nhe::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const nhe::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const nhe::Error& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kExitNoConvergence;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational eigenvalue solver and potential optimisation for Orlicz-Sobolev problems"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;
  Command selected = nullptr;

  const std::pair<const char*, Command> commands[] = {
      {"check", nhe::cli::cmd_check},   {"eig", nhe::cli::cmd_eig},         {"family", nhe::cli::cmd_family},
      {"sweep", nhe::cli::cmd_sweep},   {"indices", nhe::cli::cmd_indices}, {"norms", nhe::cli::cmd_norms},
  };
  const char* help[] = {
      "Evaluate the structural inequality chain",
      "Compute A(V), B(V) and lambda_m",
      "Classify a list of lambda values",
      "Optimise A over potential balls for a list of radii",
      "Report growth indices of the Young functions",
      "Luxemburg and Orlicz norms of configured functions",
  };
  for (std::size_t k = 0; k < std::size(commands); ++k) {
    auto* sub = app.add_subcommand(commands[k].first, help[k]);
    sub->add_option("--config", o.config, "JSON configuration file")->required();
    sub->add_option("--seed", seed, "Override the configured seed");
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_flag("--emit-minimizer", o.emit_minimizer, "Write minimisers and optimal potentials as CSV");
    sub->callback([&, k, sub] {
      selected = commands[k].second;
      if (sub->count("--seed") > 0) o.seed = seed;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : nhe::cli::kExitValidation;
  }
  return run(o, selected);
}

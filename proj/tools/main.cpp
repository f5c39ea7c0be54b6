#include "proxblock/proxblock.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

namespace {

struct SubArgs {
  std::string config_path;
  std::vector<std::string> overrides;
};

void attach_config_options(CLI::App* sub, SubArgs& args) {
  sub->add_option("--config", args.config_path, "key=value config file");
  sub->add_option("--set", args.overrides,
                  "override one config key, e.g. --set max_iter=200 (repeatable)")
      ->take_all();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"proxblock: proximal splitting solvers (ADMM, SDMM, bSDMM) with a "
               "matrix-factorization front end"};
  app.require_subcommand(1);

  struct Command {
    const char* name;
    const char* description;
  };
  const Command commands[] = {
      {"gen-scene", "generate a synthetic observation matrix with known factors"},
      {"unmix", "factorize an observation into non-negative spectra and amplitudes"},
      {"solve-admm", "linearized ADMM on a single constrained least-distance problem"},
      {"solve-sdmm", "linearized SDMM with several simultaneous constraints"},
      {"check", "recompute residuals of a finished run and compare with its manifest"},
  };

  std::string chosen;
  SubArgs args[std::size(commands)];
  for (std::size_t i = 0; i < std::size(commands); ++i) {
    CLI::App* sub = app.add_subcommand(commands[i].name, commands[i].description);
    attach_config_options(sub, args[i]);
    sub->callback([&chosen, name = commands[i].name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : proxblock::kExitInputError;
  }

  for (std::size_t i = 0; i < std::size(commands); ++i) {
    if (chosen == commands[i].name)
      return proxblock::run_cli(chosen, args[i].config_path, args[i].overrides, std::cout,
                                std::cerr);
  }
  std::cerr << "error: no command selected\n";
  return proxblock::kExitInputError;
}

#include <CLI11.hpp>
#include <iostream>
#include <utility>

#include "hqlab/app.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Hessian quotient equations on the flat complex torus"};
  app.require_subcommand(1, 1);
  std::string config;
  std::string output;
  bool quiet = false;
  const std::pair<const char*, const char*> commands[] = {
      {"certify", "check the subsolution candidate and write certificate.json"},
      {"solve", "continuity path (and optionally the flow) with probes.csv"},
      {"flow", "parabolic flow from the supersolution candidate"},
      {"sweep", "manufactured-solution error and observed order over a list of grids"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--output", output, "output directory (overrides the config)");
    sub->add_flag("--quiet", quiet, "suppress progress messages");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hqlab::kExitValidation;
  }
  hqlab::RunOptions opts;
  if (!output.empty()) opts.output_dir = output;
  opts.quiet = quiet;
  const auto cmd = hqlab::parse_subcommand(app.get_subcommands().front()->get_name());
  return hqlab::run(config, *cmd, opts);
}

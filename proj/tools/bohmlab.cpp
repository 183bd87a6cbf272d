#include <cstdint>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bohmlab/cli.hpp"

// Thin argument layer; everything of substance lives in bohmlab::cli::run so
// the tests can drive the same code paths without spawning processes.
int main(int argc, char** argv) {
  CLI::App app{"bohmlab: scenario-driven laboratory for guided-trajectory quantum dynamics"};
  app.set_version_flag("--version", std::string(bohmlab::cli::version));
  app.require_subcommand(1);

  bohmlab::cli::Options opt;
  std::string config;

  const std::vector<std::pair<const char*, const char*>> subcommands = {
      {"evolve", "Propagate the state and write snapshots"},
      {"field", "Analytic velocity fields, position and momentum"},
      {"weaksim", "Monte Carlo weak-measurement velocity estimate"},
      {"paths", "Transport a trajectory ensemble through the field"},
      {"diagnose", "Continuity residuals and the incompatibility score"},
      {"equilibrium", "Prior covariance residuals and the relaxation H-series"},
      {"all", "Every stage the config describes, one manifest"},
  };
  for (const auto& [name, help] : subcommands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "Scenario config file (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option_function<std::uint64_t>(
        "--seed", [&opt](std::uint64_t v) { opt.seed = v; }, "Override the config's master seed");
    sub->add_option_function<std::string>(
        "--out", [&opt](const std::string& v) { opt.out_dir = v; },
        "Override the config's output directory");
    sub->add_option("--threads", opt.threads, "Worker threads; results never depend on this")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--verbose", opt.verbose, "Progress notes on stderr");
    sub->add_flag("--check", opt.check, "Exit 4 when the scenario's statistical check fails");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // bad arguments are a validation failure
  }

  opt.subcommand = app.get_subcommands().front()->get_name();
  opt.config = config;
  return bohmlab::cli::run(opt);
}

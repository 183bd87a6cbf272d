#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace bohmlab::cli {

inline constexpr const char* version = "0.1.0";

struct Options {
  std::string subcommand;  // evolve | field | weaksim | paths | diagnose | equilibrium | all
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;  // overrides the config's master seed
  std::optional<std::string> out_dir;  // overrides the config's output directory
  int threads = 1;                     // worker parallelism; never changes results
  bool verbose = false;
  bool check = false;  // diagnose/equilibrium: exit 4 when the physics test fails
};

// Runs one subcommand against one scenario config and writes its artifacts
// plus a manifest (written last; its presence marks a completed run).
// Exit codes: 0 success, 2 config or validation error, 3 numerical guardrail
// or runtime failure, 4 failed statistical check (check mode only).
int run(const Options& opt);

}  // namespace bohmlab::cli

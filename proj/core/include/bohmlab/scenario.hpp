#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bohmlab/diagnostics.hpp"
#include "bohmlab/equilibrium.hpp"
#include "bohmlab/measurement.hpp"
#include "bohmlab/states.hpp"

// Scenario configs: one JSON file describes a physical setup and every run
// mode on it. Parsing is strict; an unknown or ill-typed key is an error
// naming its dotted path, because a silently ignored key would quietly run a
// different experiment than the one written down.
namespace bohmlab::scenario {

// Config rejection, distinct from numerical failures so the front end can
// map it to its own exit status.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StateSpec {
  enum class Type { gaussian, superposition, modes };
  Type type = Type::gaussian;
  states::GaussianSpec gaussian;                 // type == gaussian
  std::vector<states::SuperpositionTerm> terms;  // type == superposition
  std::vector<std::vector<int>> modes;           // type == modes
  std::vector<double> phases;
  bool seeded_phases = false;  // draw mode phases from the master seed instead
};

struct PropagationSpec {
  double dt = 0.0;
  double t_final = 0.0;
  std::size_t snapshot_stride = 1;
};

struct ProtocolSpec {
  double t_measure = 0.0;  // when the weak readout happens
  Representation observable = Representation::position;
  std::vector<ProtocolSetting> settings;
  std::size_t bin_coarsen = 4;
  std::size_t min_count = 100;
  bool write_records = false;  // per-run records are bulky, off by default
};

// Optional second leg of the paths run: rebuild the velocity field stack
// from simulated weak measurements and re-integrate a subset of the same
// starting points through it.
struct EstimatedPathsSpec {
  std::vector<ProtocolSetting> settings;
  std::size_t stack_stride = 1;  // propagation steps between estimated snapshots
  std::size_t bin_coarsen = 4;
  std::size_t min_count = 100;
  std::size_t n_check = 1024;
  double max_escape_fraction = 0.05;  // estimated fields have masked tails
};

struct PathsSpec {
  std::size_t n_paths = 0;
  double dt_path = 0.0;  // 0: one macro step per stack interval
  std::size_t record_every = 1;
  Interpolation interpolation = Interpolation::linear;
  double max_escape_fraction = 0.01;
  std::size_t export_count = 200;  // CSV sample; the binary bundle holds all paths
  std::optional<double> symmetry_axis;  // count trajectory crossings of this axis-0 plane
  std::optional<EstimatedPathsSpec> estimated;
};

struct DiagnosticsSpec {
  double t_start = 0.0;  // evolve this far before the diagnostic window opens
  double t_window = 0.0;
  std::size_t stride = 1;
  int refinements = 3;
};

struct RelaxationSpec {
  StateSpec initial_state;  // ensemble drawn from |this state|^2
  std::size_t particles = 100000;
  std::size_t cells_per_axis = 8;
  double dt_path = 0.0;
};

struct EquilibriumSpec {
  std::vector<std::string> priors;  // "equilibrium" | "power:<p>" | "uniform"
  double t_start = 0.0;
  double t_window = 0.0;
  std::size_t stride = 1;
  int refinements = 3;
  std::optional<RelaxationSpec> relaxation;
};

struct ScenarioConfig {
  std::string name;
  std::uint64_t seed = 0;
  Grid grid{{AxisSpec{0.0, 1.0, 8}}};
  double hbar = 1.0;
  std::vector<double> mass;
  StateSpec state;
  Potential potential = Potential::free_space();
  PropagationSpec propagation;
  std::optional<ProtocolSpec> protocol;
  std::optional<PathsSpec> paths;
  std::optional<DiagnosticsSpec> diagnostics;
  std::optional<EquilibriumSpec> equilibrium;
  std::string output_directory;  // resolved; defaults to out/<name>
};

ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::filesystem::path& file);

// The fully resolved config (defaults included) as canonical JSON text, for
// the manifest echo. Stable byte-for-byte for a given config.
std::string resolved_json(const ScenarioConfig& cfg);

PriorCandidate parse_prior(const std::string& text);

// Assembly. These validate against the grid and throw ConfigError on
// mismatch (a state spec for the wrong number of axes, say).
WaveFunction initial_state(const ScenarioConfig& cfg);
WaveFunction build_state(const StateSpec& spec, const ScenarioConfig& cfg);
Hamiltonian hamiltonian(const ScenarioConfig& cfg);

// Same scenario at 2^level times the spatial and temporal resolution.
// Strides are kept, so snapshot spacings refine along with dt.
ScenarioConfig refined(const ScenarioConfig& cfg, int level);

// Self-contained frames for the two windowed tests (state pre-evolved to
// t_start). Require their respective config sections.
ScenarioFrame diagnostics_frame(const ScenarioConfig& cfg);
ScenarioFrame covariance_frame(const ScenarioConfig& cfg);

}  // namespace bohmlab::scenario

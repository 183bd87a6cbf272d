#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "bohmlab/propagator.hpp"

namespace bohmlab {

// Velocity-like vector field on a grid. mask[i] == 1 marks points where the
// defining density sits below the floor and the field is undefined; values
// there are stored as 0 and must not be consumed.
struct VelocityField {
  Grid grid;
  Representation representation = Representation::position;
  enum class Provenance : std::uint8_t { analytic, estimated };
  Provenance provenance = Provenance::analytic;
  double time = 0.0;
  int dims = 1;
  std::array<std::vector<double>, 2> components;
  std::array<std::vector<double>, 2> std_error;  // empty unless estimated
  std::vector<std::uint8_t> mask;

  bool has_std_error() const { return !std_error[0].empty(); }
};

struct VelocityFieldOptions {
  // Field is masked where density < density_floor_rel * max(density).
  double density_floor_rel = 1e-8;
};

// Probability current j = (hbar/m) Im[conj(psi) grad psi], spectral gradient,
// one component per axis. Shares the VelocityField shape; mask flags where
// j/P would be undefined.
VelocityField current(const WaveFunction& psi, VelocityFieldOptions opt = {});

// Conditional velocity of position outcomes. For H = p^2/2m + V(x) the
// commutator route collapses to Re[conj(psi) (p_hat psi)/m] / P, evaluated
// analytically per Hamiltonian family (operator algebra on the periodic grid
// would ring on the non-periodic factor x psi).
VelocityField velocity_field(const WaveFunction& psi, const Hamiltonian& h, VelocityFieldOptions opt = {});

// Momentum-space analog: v(p) = Re[<p|-V'(x)|psi> / <p|psi>] per axis,
// on the momentum dual grid. Identically zero for free motion.
VelocityField momentum_velocity_field(const WaveFunction& psi, const Hamiltonian& h,
                                      VelocityFieldOptions opt = {});

// Hermitian operator diagonal in one representation (real diagonal values).
// Covers every operator this laboratory needs: functions of x in position
// representation, functions of p in momentum representation.
struct GridOperator {
  Representation representation = Representation::position;
  std::vector<double> diagonal;

  static GridOperator coordinate(const Grid& grid, int axis);                       // x_axis
  static GridOperator momentum(const Grid& position_grid, int axis, double hbar);   // p_axis
  static GridOperator position_diagonal(const Grid& grid, std::vector<double> values);
};

// A |psi>, in psi's representation (transforms around the diagonal as needed).
WaveFunction apply(const GridOperator& op, const WaveFunction& psi);

// Post-selected evolution window U = exp(-i H duration / hbar), realized by
// the split-operator propagator. duration must be an integer number of steps.
struct EvolutionWindow {
  Hamiltonian hamiltonian;
  PropagatorConfig config;
  double duration = 0.0;
};

struct WeakValueOptions {
  double overlap_floor = 1e-12;  // |<post|U|psi>| below this is "post-selection impossible"
};

// Re[ <post| U A |psi> / <post| U |psi> ]; both states are normalized copies
// so the floor is meaningful in normalized units. window == nullptr means U = 1.
double weak_value(const GridOperator& a, const WaveFunction& psi, const WaveFunction& post,
                  const EvolutionWindow* window = nullptr, WeakValueOptions opt = {});

}  // namespace bohmlab

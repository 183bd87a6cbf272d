#pragma once

#include <vector>

#include "bohmlab/potential.hpp"
#include "bohmlab/wavefunction.hpp"

namespace bohmlab {

struct PropagatorConfig {
  double dt = 0.0;  // fixed step; the scheme is Strang-split spectral
};

// Step-size guardrails. Both phases per step must stay small or the splitting
// error is no longer the leading term: max|V| dt / hbar < 0.1 and the largest
// kinetic phase hbar k^2 dt / (2m) (summed over axes) < pi/4.
struct StabilityReport {
  double potential_phase = 0.0;
  double kinetic_phase = 0.0;
  bool within_guardrails() const;
};
StabilityReport stability(const Grid& grid, const Hamiltonian& h, const PropagatorConfig& cfg);

// Strang split-operator stepper with precomputed phase tables:
// exp(-i V dt / 2 hbar) . IDFT . exp(-i hbar k^2 dt / 2m) . DFT . exp(-i V dt / 2 hbar).
// One step costs two transforms; unitary up to rounding (norm drift < 1e-12/step).
class Propagator {
 public:
  Propagator(const Grid& grid, const Hamiltonian& h, const PropagatorConfig& cfg);

  // Advance amplitudes by one dt in place. scratch must have grid.size() slots.
  void step(std::vector<cplx>& amplitudes, std::vector<cplx>& scratch) const;
  double dt() const { return dt_; }
  const Grid& grid() const { return grid_; }

 private:
  Grid grid_;
  double dt_;
  std::vector<cplx> half_kick_;      // exp(-i V dt / 2 hbar)
  std::vector<cplx> kinetic_phase_;  // DFT-ordered, includes the 1/N inverse normalization
};

// One Strang step as a pure operation on a snapshot.
WaveFunction evolve_step(const WaveFunction& psi, const Hamiltonian& h, const PropagatorConfig& cfg);

// March to t_final (which must be an integer number of steps away) and return
// snapshots every `snapshot_stride` steps, endpoints always included.
// snapshot_stride = 0 means "final state only" (still includes the start).
std::vector<WaveFunction> evolve(const WaveFunction& psi, const Hamiltonian& h,
                                 const PropagatorConfig& cfg, double t_final,
                                 std::size_t snapshot_stride);

// <T> + <V>; kinetic part evaluated in momentum space.
double total_energy(const WaveFunction& psi, const Hamiltonian& h);

}  // namespace bohmlab

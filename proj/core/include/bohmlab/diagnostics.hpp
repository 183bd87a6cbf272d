#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bohmlab/trajectories.hpp"

namespace bohmlab {

// Shared residual arithmetic: centered d/dt of the densities plus the
// spectral divergence of (v * density), accumulated over the interior
// snapshots. Norms count unmasked points only; the flux is zeroed at masked
// points, where the density is below the floor by construction.
struct ResidualAccumulation {
  std::vector<double> rms_field;  // per-point RMS over interior snapshots (0 where always masked)
  double residual_l2 = 0.0;
  double dpdt_l2 = 0.0;
  double div_l2 = 0.0;
  double masked_fraction = 0.0;
  std::size_t interior_times = 0;
};
ResidualAccumulation accumulate_continuity(std::span<const DensityField> densities, const FieldStack& stack);

struct DiagnosticsReport {
  Representation representation = Representation::position;
  Grid grid{{AxisSpec{0.0, 1.0, 8}}};
  double grid_spacing = 0.0;  // finest axis spacing
  double snapshot_dt = 0.0;
  std::vector<double> residual_field;
  double residual_l2 = 0.0;
  double dpdt_l2 = 0.0;
  double residual_rel = 0.0;  // residual_l2 / dpdt_l2; 0 and degenerate=true for static densities
  double masked_fraction = 0.0;
  bool degenerate = false;
};

// How well the field transports the given density evolution. Needs >= 3
// snapshots for the centered time difference; densities and fields must be
// co-registered in time on a shared grid.
DiagnosticsReport continuity_residual(std::span<const DensityField> densities, const FieldStack& stack);

// A scenario snippet the diagnostics can evolve on their own.
struct ScenarioFrame {
  WaveFunction psi0;
  Hamiltonian hamiltonian;
  PropagatorConfig propagation{};
  double t_window = 0.0;         // evolved span, starting at psi0.time
  std::size_t snapshot_stride = 1;  // steps between diagnostic snapshots
};

// Evolves the frame and reports the continuity residual in the requested
// representation (analytic velocity fields, matching densities).
DiagnosticsReport frame_residual(const ScenarioFrame& frame, Representation rep);

struct IncompatibilityThresholds {
  double compatible_rel = 1e-3;    // residual below this counts as conserved
  double incompatible_score = 100.0;
  double compatible_score = 3.0;
};

struct IncompatibilityResult {
  double score = 0.0;  // momentum_rel / position_rel; 1 when the momentum density is static
  double position_rel = 0.0;
  double momentum_rel = 0.0;
  bool momentum_degenerate = false;
  std::string verdict;  // "both compatible" | "momentum incompatible" | "inconclusive"
  DiagnosticsReport position_report;
  DiagnosticsReport momentum_report;
};

// Ratio of momentum-space to position-space continuity residuals at matched
// resolution. Position space must evolve; a stationary scenario has nothing
// to test and is an error.
IncompatibilityResult incompatibility_score(const ScenarioFrame& frame, IncompatibilityThresholds thr = {});

// Residuals at successive resolution doublings (grid points x2, dt / 2).
// resolution_limited means every doubling cut the residual by >= 2, i.e. the
// residual is discretization error, not physics.
struct RefinementStudy {
  std::vector<double> residuals;
  bool resolution_limited = false;
};
RefinementStudy refinement_study(const std::function<ScenarioFrame(int)>& frame_at_level, int levels,
                                 Representation rep);

}  // namespace bohmlab

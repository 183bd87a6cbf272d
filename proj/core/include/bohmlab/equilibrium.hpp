#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bohmlab/diagnostics.hpp"

namespace bohmlab {

// Candidate prior built from the guiding state by a fixed rule. p = 1 is the
// equilibrium rule P = |psi|^2; other powers and the uniform density are the
// alternatives the covariance test is meant to reject.
class PriorCandidate {
 public:
  enum class Kind { equilibrium, power, uniform, tabulated };

  static PriorCandidate equilibrium();
  static PriorCandidate power(double p);
  static PriorCandidate uniform();
  static PriorCandidate tabulated(std::vector<double> values);

  Kind kind() const { return kind_; }
  double exponent() const { return p_; }

  // The rule applied to one snapshot, normalized on its grid.
  DensityField realize(const WaveFunction& psi) const;

 private:
  PriorCandidate(Kind kind, double p) : kind_(kind), p_(p) {}
  Kind kind_;
  double p_ = 1.0;
  std::vector<double> table_;
};

struct CovarianceReport {
  double residual_rel = 0.0;  // normalized by max(|dP/dt|, |div(vP)|)
  double residual_l2 = 0.0;
  double dpdt_l2 = 0.0;
  double div_l2 = 0.0;
  double masked_fraction = 0.0;
};

// Does the candidate rule commute with time evolution: apply-the-rule-then-
// transport versus transport-then-apply. Zero residual means the prior is
// covariant. Throws for a stationary scenario, where the test is undefined.
CovarianceReport covariance_residual(const PriorCandidate& prior, std::span<const WaveFunction> snapshots,
                                     const FieldStack& stack);

// Cell-averaged relative entropy sum Pbar ln(Pbar/Pbar_eq) * cell volume over
// coarse cells of cells_per_axis x cells_per_axis grid cells (per axis in 1D).
// Cells with no empirical mass contribute zero. Clamped at 0 against rounding.
double coarse_grained_H(const DensityField& empirical, const DensityField& equilibrium,
                        std::size_t cells_per_axis);

struct HFunctionSeries {
  std::vector<double> times;
  std::vector<double> h_values;
  double cell_size = 0.0;  // coarse-graining length
  std::size_t n_particles = 0;  // surviving paths entering every histogram
};

struct RelaxationConfig {
  std::size_t particles = 100000;
  std::size_t cells_per_axis = 8;
  IntegrateOptions integrate{};
  std::uint64_t seed = 0;
};

// Transports an ensemble drawn from initial_density through the snapshots'
// analytic velocity field and reports H against |psi(t)|^2 at every snapshot
// time. Escaped paths are dropped from all histograms (their fraction is
// bounded by the integrator's escape budget).
HFunctionSeries relaxation_series(std::span<const WaveFunction> snapshots, const Hamiltonian& h,
                                  const DensityField& initial_density, const RelaxationConfig& cfg);

}  // namespace bohmlab

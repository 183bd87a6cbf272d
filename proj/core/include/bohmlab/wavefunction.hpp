#pragma once

#include <array>
#include <complex>
#include <vector>

#include "bohmlab/grid.hpp"

namespace bohmlab {

using cplx = std::complex<double>;

// Probability density sampled on a grid, in either representation.
// Normalized densities integrate to 1 over the box.
struct DensityField {
  Grid grid;
  Representation representation = Representation::position;
  double time = 0.0;
  std::vector<double> values;

  double integral() const;
};

// Wavefunction snapshot. Treated as immutable: every operation returns a new
// value. mass has one entry per axis so a 2D grid can stand for either one
// particle in the plane or two particles on a line.
struct WaveFunction {
  Grid grid;
  Representation representation = Representation::position;
  double time = 0.0;
  double hbar = 1.0;
  std::vector<double> mass;
  std::vector<cplx> amplitudes;

  // sqrt(integral |psi|^2 dV)
  double norm() const;
};

// Throws std::invalid_argument when sizes, masses or hbar are inconsistent.
void validate(const WaveFunction& psi);

// Unit-normalized copy. A zero state cannot be normalized: "degenerate state".
WaveFunction normalize(WaveFunction psi);

// |psi|^2 in the wavefunction's own representation (position required).
DensityField position_density(const WaveFunction& psi);
// |<p|psi>|^2; transforms first when given a position-representation state.
DensityField momentum_density(const WaveFunction& psi);

// Unitary transform to <p|psi> = (2 pi hbar)^(-d/2) integral exp(-i p x/hbar) psi(x) dx,
// sampled on grid.momentum_dual(hbar) with momentum-ordered (negative to
// positive) bins. Parseval holds to rounding.
WaveFunction momentum_representation(const WaveFunction& psi);
// Exact inverse. The position box origin is not recoverable from the momentum
// grid alone, so the target position grid is explicit.
WaveFunction position_representation(const WaveFunction& psi, const Grid& position_grid);

// integral conj(bra) ket dV; representations and grids must match.
cplx inner_product(const WaveFunction& bra, const WaveFunction& ket);

// First and second moments of a (not necessarily normalized) density.
std::array<double, 2> density_mean(const DensityField& rho);
std::array<double, 2> density_std(const DensityField& rho);

}  // namespace bohmlab

#pragma once

#include <vector>

#include "bohmlab/wavefunction.hpp"

// Initial state constructors. All returned states are unit normalized on the
// grid, in position representation.
namespace bohmlab::states {

struct GaussianSpec {
  std::vector<double> center;  // per axis
  std::vector<double> sigma;   // per axis, position-space std dev of |psi|^2
  std::vector<double> kick;    // per axis wavevector k0 (momentum hbar*k0)
};

// Product Gaussian exp(-(x-c)^2/(4 sigma^2) + i k0 x) per axis.
WaveFunction gaussian(const Grid& grid, const GaussianSpec& spec,
                      double hbar = 1.0, std::vector<double> mass = {});

// Complex-weighted sum of Gaussians (amplitude * exp(i phase) each),
// normalized after summation. Used for slit sources and quartic-well
// superpositions.
struct SuperpositionTerm {
  GaussianSpec gaussian;
  double amplitude = 1.0;
  double phase = 0.0;
};
WaveFunction gaussian_superposition(const Grid& grid, const std::vector<SuperpositionTerm>& terms,
                                    double hbar = 1.0, std::vector<double> mass = {});

// Single periodic box mode exp(i 2 pi (n . x) / L). Mode numbers are integers
// so the state is exactly grid periodic.
WaveFunction plane_wave(const Grid& grid, const std::vector<int>& mode,
                        double hbar = 1.0, std::vector<double> mass = {});

// Equal-amplitude superposition of box modes with given phases.
// phases.size() must match modes.size().
WaveFunction mode_superposition(const Grid& grid, const std::vector<std::vector<int>>& modes,
                                const std::vector<double>& phases,
                                double hbar = 1.0, std::vector<double> mass = {});

// count phases uniform on [0, 2 pi), from a dedicated stream of `seed`.
// The one source of mode phases, so configs and helpers agree on seeding.
std::vector<double> random_phases(std::size_t count, std::uint64_t seed);

// The 16 lowest modes of the periodic box, n in {0..3}^2, phases drawn
// uniformly from [0, 2 pi) with a dedicated stream of `seed`.
WaveFunction relaxation_mode_state(const Grid& grid, std::uint64_t seed,
                                   double hbar = 1.0, std::vector<double> mass = {});

}  // namespace bohmlab::states

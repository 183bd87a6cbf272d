#pragma once

#include <complex>
#include <span>
#include <vector>

#include "bohmlab/grid.hpp"

// Thin spectral layer over the grid: unnormalized DFTs, angular wavenumbers
// and Fourier differentiation. Any state evolved or differentiated here is
// implicitly L-periodic; all bundled scenarios keep support well inside the
// box so periodicity is a topology, not a physics statement.
namespace bohmlab::spectral {

using cplx = std::complex<double>;

// Unnormalized forward DFT, exp(-i k x) convention; out-of-place, in != out.
void dft_forward(const Grid& grid, const cplx* in, cplx* out);
// Unnormalized inverse DFT (exp(+i k x)); divide by grid.size() to invert.
void dft_inverse(const Grid& grid, const cplx* in, cplx* out);

// Angular wavenumber for DFT bin j on an axis: 2*pi/L * m with m the signed
// alias of j in [-N/2, N/2).
double wavenumber(const Grid& grid, int axis, std::size_t j);
std::vector<double> wavenumbers(const Grid& grid, int axis);

// d/dx_axis by the ik multiplier. The Nyquist bin is annihilated: it carries
// no sign information and for resolved states its amplitude is rounding noise.
std::vector<cplx> derivative(const Grid& grid, std::span<const cplx> f, int axis);
// Real fields: derivative of the real part, imaginary residue discarded.
std::vector<double> derivative(const Grid& grid, std::span<const double> f, int axis);

}  // namespace bohmlab::spectral

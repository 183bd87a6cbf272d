#include "bohmlab/wavefunction.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bohmlab/spectral.hpp"

namespace bohmlab {

double DensityField::integral() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.cell_volume();
}

double WaveFunction::norm() const {
  double s = 0.0;
  for (const cplx& a : amplitudes) s += std::norm(a);
  return std::sqrt(s * grid.cell_volume());
}

void validate(const WaveFunction& psi) {
  if (psi.grid.dims() == 0) throw std::invalid_argument("wavefunction: empty grid");
  if (psi.amplitudes.size() != psi.grid.size())
    throw std::invalid_argument("wavefunction: amplitude count does not match grid");
  if (psi.mass.size() != static_cast<std::size_t>(psi.grid.dims()))
    throw std::invalid_argument("wavefunction: one mass per axis required");
  for (double m : psi.mass)
    if (!(m > 0)) throw std::invalid_argument("wavefunction: mass must be positive");
  if (!(psi.hbar > 0)) throw std::invalid_argument("wavefunction: hbar must be positive");
}

WaveFunction normalize(WaveFunction psi) {
  validate(psi);
  const double n = psi.norm();
  if (!(n > 0.0) || !std::isfinite(n))
    throw std::runtime_error("degenerate state: norm is zero or not finite");
  const double inv = 1.0 / n;
  for (cplx& a : psi.amplitudes) a *= inv;
  return psi;
}

DensityField position_density(const WaveFunction& psi) {
  validate(psi);
  if (psi.representation != Representation::position)
    throw std::invalid_argument("position_density: state is not in position representation");
  DensityField rho{psi.grid, Representation::position, psi.time, {}};
  rho.values.resize(psi.amplitudes.size());
  for (std::size_t i = 0; i < rho.values.size(); ++i) rho.values[i] = std::norm(psi.amplitudes[i]);
  return rho;
}

DensityField momentum_density(const WaveFunction& psi) {
  validate(psi);
  const WaveFunction* src = &psi;
  WaveFunction tmp;
  if (psi.representation == Representation::position) {
    tmp = momentum_representation(psi);
    src = &tmp;
  }
  DensityField rho{src->grid, Representation::momentum, src->time, {}};
  rho.values.resize(src->amplitudes.size());
  for (std::size_t i = 0; i < rho.values.size(); ++i) rho.values[i] = std::norm(src->amplitudes[i]);
  return rho;
}

namespace {

// Per-axis reorder map: momentum-ordered index s (bin s holds signed mode
// m = s - N/2) to DFT bin j = m mod N.
inline std::size_t dft_bin(std::size_t s, std::size_t n) { return (s + n / 2) % n; }

}  // namespace

WaveFunction momentum_representation(const WaveFunction& psi) {
  validate(psi);
  if (psi.representation != Representation::position)
    throw std::invalid_argument("momentum_representation: state is already in momentum representation");
  const Grid& g = psi.grid;
  const int d = g.dims();

  std::vector<cplx> hat(psi.amplitudes.size());
  spectral::dft_forward(g, psi.amplitudes.data(), hat.data());

  // <p_m|psi> = prod_ax [dx/sqrt(2 pi hbar) * exp(-i 2 pi m a / L)] * DFT[m mod N]
  double scale = 1.0;
  for (int a = 0; a < d; ++a) scale *= g.spacing(a) / std::sqrt(2.0 * std::numbers::pi * psi.hbar);

  std::array<std::vector<cplx>, 2> axis_phase;
  for (int a = 0; a < d; ++a) {
    const std::size_t n = g.points(a);
    axis_phase[static_cast<std::size_t>(a)].resize(n);
    for (std::size_t s = 0; s < n; ++s) {
      const double m = static_cast<double>(s) - static_cast<double>(n / 2);
      const double arg = -2.0 * std::numbers::pi * m * g.lo(a) / g.length(a);
      axis_phase[static_cast<std::size_t>(a)][s] = std::polar(1.0, arg);
    }
  }

  WaveFunction out;
  out.grid = g.momentum_dual(psi.hbar);
  out.representation = Representation::momentum;
  out.time = psi.time;
  out.hbar = psi.hbar;
  out.mass = psi.mass;
  out.amplitudes.resize(hat.size());

  const std::size_t n0 = g.points(0);
  const std::size_t n1 = d == 2 ? g.points(1) : 1;
  for (std::size_t s0 = 0; s0 < n0; ++s0) {
    const std::size_t j0 = dft_bin(s0, n0);
    for (std::size_t s1 = 0; s1 < n1; ++s1) {
      const std::size_t j1 = d == 2 ? dft_bin(s1, n1) : 0;
      cplx v = hat[j0 * n1 + j1] * scale * axis_phase[0][s0];
      if (d == 2) v *= axis_phase[1][s1];
      out.amplitudes[s0 * n1 + s1] = v;
    }
  }
  return out;
}

WaveFunction position_representation(const WaveFunction& psi, const Grid& position_grid) {
  validate(psi);
  if (psi.representation != Representation::momentum)
    throw std::invalid_argument("position_representation: state is already in position representation");
  if (position_grid.momentum_dual(psi.hbar) != psi.grid)
    throw std::invalid_argument("position_representation: grid is not the position dual of the state's momentum grid");
  const Grid& g = position_grid;
  const int d = g.dims();

  double scale = 1.0;
  for (int a = 0; a < d; ++a) scale *= g.spacing(a) / std::sqrt(2.0 * std::numbers::pi * psi.hbar);
  const double inv_scale_n = 1.0 / (scale * static_cast<double>(g.size()));

  std::array<std::vector<cplx>, 2> axis_phase;
  for (int a = 0; a < d; ++a) {
    const std::size_t n = g.points(a);
    axis_phase[static_cast<std::size_t>(a)].resize(n);
    for (std::size_t s = 0; s < n; ++s) {
      const double m = static_cast<double>(s) - static_cast<double>(n / 2);
      const double arg = 2.0 * std::numbers::pi * m * g.lo(a) / g.length(a);
      axis_phase[static_cast<std::size_t>(a)][s] = std::polar(1.0, arg);
    }
  }

  std::vector<cplx> hat(psi.amplitudes.size());
  const std::size_t n0 = g.points(0);
  const std::size_t n1 = d == 2 ? g.points(1) : 1;
  for (std::size_t s0 = 0; s0 < n0; ++s0) {
    const std::size_t j0 = dft_bin(s0, n0);
    for (std::size_t s1 = 0; s1 < n1; ++s1) {
      const std::size_t j1 = d == 2 ? dft_bin(s1, n1) : 0;
      cplx v = psi.amplitudes[s0 * n1 + s1] * axis_phase[0][s0];
      if (d == 2) v *= axis_phase[1][s1];
      hat[j0 * n1 + j1] = v * inv_scale_n;
    }
  }

  WaveFunction out;
  out.grid = g;
  out.representation = Representation::position;
  out.time = psi.time;
  out.hbar = psi.hbar;
  out.mass = psi.mass;
  out.amplitudes.resize(hat.size());
  spectral::dft_inverse(g, hat.data(), out.amplitudes.data());
  return out;
}

cplx inner_product(const WaveFunction& bra, const WaveFunction& ket) {
  validate(bra);
  validate(ket);
  if (bra.grid != ket.grid || bra.representation != ket.representation)
    throw std::invalid_argument("inner_product: states live on different grids or representations");
  cplx s = 0.0;
  for (std::size_t i = 0; i < bra.amplitudes.size(); ++i)
    s += std::conj(bra.amplitudes[i]) * ket.amplitudes[i];
  return s * bra.grid.cell_volume();
}

std::array<double, 2> density_mean(const DensityField& rho) {
  const Grid& g = rho.grid;
  std::array<double, 2> mean{0.0, 0.0};
  double total = 0.0;
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    const auto idx = g.unravel(i);
    const double w = rho.values[i];
    total += w;
    for (int a = 0; a < g.dims(); ++a)
      mean[static_cast<std::size_t>(a)] += w * g.coordinate(a, idx[static_cast<std::size_t>(a)]);
  }
  if (total <= 0) throw std::runtime_error("density_mean: empty density");
  for (int a = 0; a < g.dims(); ++a) mean[static_cast<std::size_t>(a)] /= total;
  return mean;
}

std::array<double, 2> density_std(const DensityField& rho) {
  const Grid& g = rho.grid;
  const auto mean = density_mean(rho);
  std::array<double, 2> var{0.0, 0.0};
  double total = 0.0;
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    const auto idx = g.unravel(i);
    const double w = rho.values[i];
    total += w;
    for (int a = 0; a < g.dims(); ++a) {
      const double dxa = g.coordinate(a, idx[static_cast<std::size_t>(a)]) - mean[static_cast<std::size_t>(a)];
      var[static_cast<std::size_t>(a)] += w * dxa * dxa;
    }
  }
  std::array<double, 2> sd{0.0, 0.0};
  for (int a = 0; a < g.dims(); ++a) sd[static_cast<std::size_t>(a)] = std::sqrt(var[static_cast<std::size_t>(a)] / total);
  return sd;
}

}  // namespace bohmlab

#include "bohmlab/propagator.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bohmlab/spectral.hpp"

namespace bohmlab {

bool StabilityReport::within_guardrails() const {
  return potential_phase < 0.1 && kinetic_phase < std::numbers::pi / 4.0;
}

StabilityReport stability(const Grid& grid, const Hamiltonian& h, const PropagatorConfig& cfg) {
  validate(h, grid);
  if (!(cfg.dt > 0)) throw std::invalid_argument("propagator: dt must be positive");
  StabilityReport r;
  r.potential_phase = h.potential.max_abs(grid, h.mass) * cfg.dt / h.hbar;
  double kmax2 = 0.0;
  for (int a = 0; a < grid.dims(); ++a) {
    const double kmax = std::numbers::pi / grid.spacing(a);
    kmax2 += h.hbar * kmax * kmax / (2.0 * h.mass[static_cast<std::size_t>(a)]);
  }
  r.kinetic_phase = kmax2 * cfg.dt;
  return r;
}

Propagator::Propagator(const Grid& grid, const Hamiltonian& h, const PropagatorConfig& cfg)
    : grid_(grid), dt_(cfg.dt) {
  validate(h, grid);
  if (!(cfg.dt > 0)) throw std::invalid_argument("propagator: dt must be positive");

  const auto v = h.potential.tabulate(grid, h.mass);
  half_kick_.resize(grid.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    half_kick_[i] = std::polar(1.0, -v[i] * dt_ / (2.0 * h.hbar));

  kinetic_phase_.resize(grid.size());
  const double inv_n = 1.0 / static_cast<double>(grid.size());
  const std::size_t n1 = grid.dims() == 2 ? grid.points(1) : 1;
  for (std::size_t flat = 0; flat < grid.size(); ++flat) {
    double w = 0.0;
    for (int a = 0; a < grid.dims(); ++a) {
      const std::size_t j = a == 0 ? flat / n1 : flat % n1;
      const double k = spectral::wavenumber(grid, a, j);
      w += h.hbar * k * k / (2.0 * h.mass[static_cast<std::size_t>(a)]);
    }
    kinetic_phase_[flat] = std::polar(inv_n, -w * dt_);
  }
}

void Propagator::step(std::vector<cplx>& amplitudes, std::vector<cplx>& scratch) const {
  if (amplitudes.size() != grid_.size() || scratch.size() != grid_.size())
    throw std::invalid_argument("propagator: grid mismatch");
  for (std::size_t i = 0; i < amplitudes.size(); ++i) amplitudes[i] *= half_kick_[i];
  spectral::dft_forward(grid_, amplitudes.data(), scratch.data());
  for (std::size_t i = 0; i < scratch.size(); ++i) scratch[i] *= kinetic_phase_[i];
  spectral::dft_inverse(grid_, scratch.data(), amplitudes.data());
  for (std::size_t i = 0; i < amplitudes.size(); ++i) amplitudes[i] *= half_kick_[i];
}

WaveFunction evolve_step(const WaveFunction& psi, const Hamiltonian& h, const PropagatorConfig& cfg) {
  validate(psi);
  if (psi.representation != Representation::position)
    throw std::invalid_argument("propagator: position-representation state required");
  Propagator prop(psi.grid, h, cfg);
  WaveFunction out = psi;
  std::vector<cplx> scratch(psi.grid.size());
  prop.step(out.amplitudes, scratch);
  out.time = psi.time + cfg.dt;
  return out;
}

std::vector<WaveFunction> evolve(const WaveFunction& psi, const Hamiltonian& h,
                                 const PropagatorConfig& cfg, double t_final,
                                 std::size_t snapshot_stride) {
  validate(psi);
  if (psi.representation != Representation::position)
    throw std::invalid_argument("propagator: position-representation state required");
  if (t_final < psi.time) throw std::invalid_argument("propagator: t_final precedes the state time");
  if (!(cfg.dt > 0)) throw std::invalid_argument("propagator: dt must be positive");

  const double span = t_final - psi.time;
  const auto n_steps = static_cast<std::size_t>(std::llround(span / cfg.dt));
  if (std::abs(span - static_cast<double>(n_steps) * cfg.dt) > 1e-9 * std::max(1.0, std::abs(span)))
    throw std::invalid_argument("propagator: t_final is not an integer number of steps away");

  std::vector<WaveFunction> snaps;
  snaps.push_back(psi);
  if (n_steps == 0) return snaps;

  Propagator prop(psi.grid, h, cfg);
  WaveFunction cur = psi;
  std::vector<cplx> scratch(psi.grid.size());
  for (std::size_t s = 1; s <= n_steps; ++s) {
    prop.step(cur.amplitudes, scratch);
    cur.time = psi.time + static_cast<double>(s) * cfg.dt;
    const bool on_stride = snapshot_stride != 0 && s % snapshot_stride == 0;
    if (on_stride || s == n_steps) snaps.push_back(cur);
  }
  return snaps;
}

double total_energy(const WaveFunction& psi, const Hamiltonian& h) {
  validate(psi);
  validate(h, psi.grid);
  if (psi.representation != Representation::position)
    throw std::invalid_argument("total_energy: position-representation state required");

  const auto v = h.potential.tabulate(psi.grid, h.mass);
  double pot = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) pot += v[i] * std::norm(psi.amplitudes[i]);
  pot *= psi.grid.cell_volume();

  const auto phi = momentum_representation(psi);
  double kin = 0.0;
  const Grid& pg = phi.grid;
  const std::size_t n1 = pg.dims() == 2 ? pg.points(1) : 1;
  for (std::size_t flat = 0; flat < phi.amplitudes.size(); ++flat) {
    double t = 0.0;
    for (int a = 0; a < pg.dims(); ++a) {
      const std::size_t i = a == 0 ? flat / n1 : flat % n1;
      const double p = pg.coordinate(a, i);
      t += p * p / (2.0 * h.mass[static_cast<std::size_t>(a)]);
    }
    kin += t * std::norm(phi.amplitudes[flat]);
  }
  kin *= pg.cell_volume();
  return kin + pot;
}

}  // namespace bohmlab

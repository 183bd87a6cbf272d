#include "bohmlab/velocity.hpp"

#include <cmath>
#include <stdexcept>

#include "bohmlab/spectral.hpp"

namespace bohmlab {

namespace {

std::vector<std::uint8_t> density_mask(const std::vector<double>& density, double floor_rel) {
  double dmax = 0.0;
  for (double d : density) dmax = std::max(dmax, d);
  const double floor = floor_rel * dmax;
  std::vector<std::uint8_t> mask(density.size());
  for (std::size_t i = 0; i < density.size(); ++i) mask[i] = density[i] < floor ? 1 : 0;
  return mask;
}

VelocityField make_field(const Grid& grid, Representation rep, double time, int dims) {
  VelocityField f;
  f.grid = grid;
  f.representation = rep;
  f.time = time;
  f.dims = dims;
  for (int a = 0; a < dims; ++a) f.components[static_cast<std::size_t>(a)].assign(grid.size(), 0.0);
  f.mask.assign(grid.size(), 0);
  return f;
}

}  // namespace

VelocityField current(const WaveFunction& psi, VelocityFieldOptions opt) {
  validate(psi);
  if (psi.representation != Representation::position)
    throw std::invalid_argument("current: position-representation state required");
  const Grid& g = psi.grid;
  VelocityField j = make_field(g, Representation::position, psi.time, g.dims());

  std::vector<double> density(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) density[i] = std::norm(psi.amplitudes[i]);
  j.mask = density_mask(density, opt.density_floor_rel);

  for (int a = 0; a < g.dims(); ++a) {
    const auto dpsi = spectral::derivative(g, std::span<const cplx>(psi.amplitudes), a);
    const double scale = psi.hbar / psi.mass[static_cast<std::size_t>(a)];
    auto& comp = j.components[static_cast<std::size_t>(a)];
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (j.mask[i]) continue;
      comp[i] = scale * std::imag(std::conj(psi.amplitudes[i]) * dpsi[i]);
    }
  }
  return j;
}

VelocityField velocity_field(const WaveFunction& psi, const Hamiltonian& h, VelocityFieldOptions opt) {
  validate(psi);
  validate(h, psi.grid);
  if (psi.representation != Representation::position)
    throw std::invalid_argument("velocity_field: position-representation state required");
  const Grid& g = psi.grid;
  VelocityField v = make_field(g, Representation::position, psi.time, g.dims());

  std::vector<double> density(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) density[i] = std::norm(psi.amplitudes[i]);
  v.mask = density_mask(density, opt.density_floor_rel);

  // i[H, x_n]/hbar = p_n/m_n for every potential family here (V commutes with x).
  for (int a = 0; a < g.dims(); ++a) {
    const auto dpsi = spectral::derivative(g, std::span<const cplx>(psi.amplitudes), a);
    const double inv_m = 1.0 / h.mass[static_cast<std::size_t>(a)];
    auto& comp = v.components[static_cast<std::size_t>(a)];
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (v.mask[i]) continue;
      // Re[conj(psi) * (-i hbar d psi)] / (m P)
      const cplx p_psi = cplx(0.0, -psi.hbar) * dpsi[i];
      comp[i] = std::real(std::conj(psi.amplitudes[i]) * p_psi) * inv_m / density[i];
    }
  }
  return v;
}

VelocityField momentum_velocity_field(const WaveFunction& psi, const Hamiltonian& h, VelocityFieldOptions opt) {
  validate(psi);
  validate(h, psi.grid);
  if (psi.representation != Representation::position)
    throw std::invalid_argument("momentum_velocity_field: position-representation state required");
  const Grid& g = psi.grid;

  const WaveFunction phi = momentum_representation(psi);
  VelocityField v = make_field(phi.grid, Representation::momentum, psi.time, g.dims());

  std::vector<double> density(phi.amplitudes.size());
  for (std::size_t i = 0; i < density.size(); ++i) density[i] = std::norm(phi.amplitudes[i]);
  v.mask = density_mask(density, opt.density_floor_rel);

  if (h.potential.kind() == Potential::Kind::free_space) return v;  // -V' = 0 exactly

  for (int a = 0; a < g.dims(); ++a) {
    const auto grad = h.potential.tabulate_gradient(g, a, h.mass);
    WaveFunction forced = psi;
    for (std::size_t i = 0; i < forced.amplitudes.size(); ++i) forced.amplitudes[i] *= grad[i];
    const WaveFunction chi = momentum_representation(forced);
    auto& comp = v.components[static_cast<std::size_t>(a)];
    for (std::size_t i = 0; i < comp.size(); ++i) {
      if (v.mask[i]) continue;
      // v(p) = Re[<p|(-V') psi> / <p|psi>] = -Re[chi * conj(phi)] / |phi|^2
      comp[i] = -std::real(chi.amplitudes[i] * std::conj(phi.amplitudes[i])) / density[i];
    }
  }
  return v;
}

GridOperator GridOperator::coordinate(const Grid& grid, int axis) {
  if (axis < 0 || axis >= grid.dims()) throw std::invalid_argument("grid_operator: axis out of range");
  GridOperator op;
  op.representation = Representation::position;
  op.diagonal.resize(grid.size());
  const std::size_t n1 = grid.dims() == 2 ? grid.points(1) : 1;
  for (std::size_t flat = 0; flat < grid.size(); ++flat) {
    const std::size_t i = axis == 0 ? flat / n1 : flat % n1;
    op.diagonal[flat] = grid.coordinate(axis, i);
  }
  return op;
}

GridOperator GridOperator::momentum(const Grid& position_grid, int axis, double hbar) {
  const Grid pg = position_grid.momentum_dual(hbar);
  if (axis < 0 || axis >= pg.dims()) throw std::invalid_argument("grid_operator: axis out of range");
  GridOperator op;
  op.representation = Representation::momentum;
  op.diagonal.resize(pg.size());
  const std::size_t n1 = pg.dims() == 2 ? pg.points(1) : 1;
  for (std::size_t flat = 0; flat < pg.size(); ++flat) {
    const std::size_t i = axis == 0 ? flat / n1 : flat % n1;
    op.diagonal[flat] = pg.coordinate(axis, i);
  }
  return op;
}

GridOperator GridOperator::position_diagonal(const Grid& grid, std::vector<double> values) {
  if (values.size() != grid.size())
    throw std::invalid_argument("grid_operator: diagonal size does not match grid");
  GridOperator op;
  op.representation = Representation::position;
  op.diagonal = std::move(values);
  return op;
}

WaveFunction apply(const GridOperator& op, const WaveFunction& psi) {
  validate(psi);
  if (op.representation == psi.representation) {
    if (op.diagonal.size() != psi.amplitudes.size())
      throw std::invalid_argument("grid_operator: diagonal size does not match state");
    WaveFunction out = psi;
    for (std::size_t i = 0; i < out.amplitudes.size(); ++i) out.amplitudes[i] *= op.diagonal[i];
    return out;
  }
  if (psi.representation == Representation::position) {
    WaveFunction phi = momentum_representation(psi);
    if (op.diagonal.size() != phi.amplitudes.size())
      throw std::invalid_argument("grid_operator: diagonal size does not match state");
    for (std::size_t i = 0; i < phi.amplitudes.size(); ++i) phi.amplitudes[i] *= op.diagonal[i];
    return position_representation(phi, psi.grid);
  }
  throw std::invalid_argument("grid_operator: applying a position diagonal to a momentum state needs the position grid");
}

double weak_value(const GridOperator& a, const WaveFunction& psi, const WaveFunction& post,
                  const EvolutionWindow* window, WeakValueOptions opt) {
  WaveFunction ket = normalize(psi);
  WaveFunction bra = normalize(post);
  if (bra.grid != ket.grid || bra.representation != ket.representation)
    throw std::invalid_argument("weak_value: pre- and post-selection states live on different grids");

  WaveFunction a_ket = apply(a, ket);
  if (window != nullptr && window->duration != 0.0) {
    const auto evolved_num = evolve(a_ket, window->hamiltonian, window->config,
                                    a_ket.time + window->duration, 0);
    const auto evolved_den = evolve(ket, window->hamiltonian, window->config,
                                    ket.time + window->duration, 0);
    a_ket = evolved_num.back();
    ket = evolved_den.back();
  }

  const cplx den = inner_product(bra, ket);
  if (std::abs(den) <= opt.overlap_floor)
    throw std::runtime_error("post-selection impossible: overlap below floor");
  const cplx num = inner_product(bra, a_ket);
  return std::real(num / den);
}

}  // namespace bohmlab

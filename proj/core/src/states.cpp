#include "bohmlab/states.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "bohmlab/rng.hpp"

namespace bohmlab::states {

namespace {

std::vector<double> default_mass(const Grid& grid, std::vector<double> mass) {
  if (mass.empty()) mass.assign(static_cast<std::size_t>(grid.dims()), 1.0);
  return mass;
}

void fill_gaussian(const Grid& grid, const GaussianSpec& spec, double phase0,
                   double amplitude, std::vector<cplx>& acc) {
  const auto d = static_cast<std::size_t>(grid.dims());
  if (spec.center.size() != d || spec.sigma.size() != d)
    throw std::invalid_argument("gaussian: center and sigma need one entry per axis");
  if (!spec.kick.empty() && spec.kick.size() != d)
    throw std::invalid_argument("gaussian: kick needs one entry per axis when given");
  for (double s : spec.sigma)
    if (!(s > 0)) throw std::invalid_argument("gaussian: sigma must be positive");

  const std::size_t n1 = grid.dims() == 2 ? grid.points(1) : 1;
  for (std::size_t flat = 0; flat < grid.size(); ++flat) {
    const std::size_t i0 = flat / n1;
    const std::size_t i1 = flat % n1;
    double expo = 0.0, arg = phase0;
    for (int a = 0; a < grid.dims(); ++a) {
      const double x = grid.coordinate(a, a == 0 ? i0 : i1);
      const double dx = x - spec.center[static_cast<std::size_t>(a)];
      const double s = spec.sigma[static_cast<std::size_t>(a)];
      expo -= dx * dx / (4.0 * s * s);
      if (!spec.kick.empty()) arg += spec.kick[static_cast<std::size_t>(a)] * x;
    }
    acc[flat] += amplitude * std::exp(expo) * std::polar(1.0, arg);
  }
}

WaveFunction finish(const Grid& grid, double hbar, std::vector<double> mass, std::vector<cplx> amp) {
  WaveFunction psi;
  psi.grid = grid;
  psi.representation = Representation::position;
  psi.time = 0.0;
  psi.hbar = hbar;
  psi.mass = default_mass(grid, std::move(mass));
  psi.amplitudes = std::move(amp);
  return normalize(std::move(psi));
}

}  // namespace

WaveFunction gaussian(const Grid& grid, const GaussianSpec& spec, double hbar, std::vector<double> mass) {
  std::vector<cplx> amp(grid.size(), 0.0);
  fill_gaussian(grid, spec, 0.0, 1.0, amp);
  return finish(grid, hbar, std::move(mass), std::move(amp));
}

WaveFunction gaussian_superposition(const Grid& grid, const std::vector<SuperpositionTerm>& terms,
                                    double hbar, std::vector<double> mass) {
  if (terms.empty()) throw std::invalid_argument("gaussian_superposition: no terms");
  std::vector<cplx> amp(grid.size(), 0.0);
  for (const auto& t : terms) fill_gaussian(grid, t.gaussian, t.phase, t.amplitude, amp);
  return finish(grid, hbar, std::move(mass), std::move(amp));
}

WaveFunction plane_wave(const Grid& grid, const std::vector<int>& mode, double hbar, std::vector<double> mass) {
  return mode_superposition(grid, {mode}, {0.0}, hbar, std::move(mass));
}

WaveFunction mode_superposition(const Grid& grid, const std::vector<std::vector<int>>& modes,
                                const std::vector<double>& phases, double hbar, std::vector<double> mass) {
  if (modes.empty()) throw std::invalid_argument("mode_superposition: no modes");
  if (phases.size() != modes.size())
    throw std::invalid_argument("mode_superposition: one phase per mode required");
  const auto d = static_cast<std::size_t>(grid.dims());
  for (const auto& n : modes)
    if (n.size() != d) throw std::invalid_argument("mode_superposition: mode index needs one entry per axis");

  std::vector<cplx> amp(grid.size(), 0.0);
  const std::size_t n1 = grid.dims() == 2 ? grid.points(1) : 1;
  for (std::size_t t = 0; t < modes.size(); ++t) {
    for (std::size_t flat = 0; flat < grid.size(); ++flat) {
      const std::size_t i0 = flat / n1;
      const std::size_t i1 = flat % n1;
      double arg = phases[t];
      for (int a = 0; a < grid.dims(); ++a) {
        const double x = grid.coordinate(a, a == 0 ? i0 : i1);
        arg += 2.0 * std::numbers::pi * modes[t][static_cast<std::size_t>(a)] * (x - grid.lo(a)) / grid.length(a);
      }
      amp[flat] += std::polar(1.0, arg);
    }
  }
  return finish(grid, hbar, std::move(mass), std::move(amp));
}

std::vector<double> random_phases(std::size_t count, std::uint64_t seed) {
  RngStream rng(seed, 0x52454c4158ull);  // phase stream tag
  std::vector<double> phases(count);
  for (double& p : phases) p = 2.0 * std::numbers::pi * rng.uniform();
  return phases;
}

WaveFunction relaxation_mode_state(const Grid& grid, std::uint64_t seed, double hbar, std::vector<double> mass) {
  if (grid.dims() != 2) throw std::invalid_argument("relaxation_mode_state: 2D grid required");
  std::vector<std::vector<int>> modes;
  for (int n0 = 0; n0 < 4; ++n0)
    for (int n1 = 0; n1 < 4; ++n1) modes.push_back({n0, n1});
  return mode_superposition(grid, modes, random_phases(modes.size(), seed), hbar, std::move(mass));
}

}  // namespace bohmlab::states

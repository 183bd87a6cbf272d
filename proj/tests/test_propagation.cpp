#include <cmath>
#include <numbers>
#include <vector>

#include "bohmlab/propagator.hpp"
#include "bohmlab/states.hpp"
#include "doctest.h"

using namespace bohmlab;
using std::numbers::pi;

namespace {

WaveFunction packet(const Grid& g, double center, double sigma, double kick, double hbar = 1.0,
                    double mass = 1.0) {
  states::GaussianSpec spec;
  spec.center = {center};
  spec.sigma = {sigma};
  spec.kick = {kick};
  return states::gaussian(g, spec, hbar, {mass});
}

double max_amp_diff(const WaveFunction& a, const WaveFunction& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.amplitudes.size(); ++i)
    worst = std::max(worst, std::abs(a.amplitudes[i] - b.amplitudes[i]));
  return worst;
}

}  // namespace

TEST_CASE("free gaussian disperses at the analytic rate") {
  const Grid g({AxisSpec{-24.0, 24.0, 256}});
  const double sigma0 = 1.0, hbar = 1.0, mass = 1.0, k0 = 1.5;
  const WaveFunction psi0 = packet(g, -3.0, sigma0, k0, hbar, mass);
  Hamiltonian h{{mass}, hbar, Potential::free_space()};

  const double T = 2.0;
  const auto snaps = evolve(psi0, h, PropagatorConfig{2e-3}, T, 0);
  REQUIRE(snaps.size() == 2);
  const WaveFunction& psiT = snaps.back();
  CHECK(psiT.time == doctest::Approx(T));
  CHECK(psiT.norm() == doctest::Approx(1.0).epsilon(1e-10));

  const DensityField rho = position_density(psiT);
  const double vel = hbar * k0 / mass;
  const double spread = sigma0 * std::sqrt(1.0 + std::pow(hbar * T / (2.0 * mass * sigma0 * sigma0), 2));
  CHECK(density_mean(rho)[0] == doctest::Approx(-3.0 + vel * T).epsilon(1e-7));
  CHECK(density_std(rho)[0] == doctest::Approx(spread).epsilon(1e-7));
}

TEST_CASE("harmonic coherent state oscillates without changing shape") {
  const Grid g({AxisSpec{-16.0, 16.0, 256}});
  const double omega = 1.0, x0 = 3.0;
  const double sigma = std::sqrt(0.5 / omega);  // ground-state width: the packet only translates
  const WaveFunction psi0 = packet(g, x0, sigma, 0.0);
  Hamiltonian h{{1.0}, 1.0, Potential::harmonic(omega)};

  const double e0 = total_energy(psi0, h);
  const double T = 2.0 * pi / omega * 0.75;  // three quarter periods: center at x = 0 moving down
  const double dt = T / 4800.0;
  const auto snaps = evolve(psi0, h, PropagatorConfig{dt}, T, 1600);
  // split-step energy error is bounded by the shadow Hamiltonian gap, O(dt^2), with no secular term
  const double drift = std::abs(total_energy(snaps.back(), h) - e0);
  CHECK(drift < dt * dt * std::abs(e0));

  for (const WaveFunction& s : snaps) {
    const DensityField rho = position_density(s);
    CHECK(density_mean(rho)[0] == doctest::Approx(x0 * std::cos(omega * s.time)).epsilon(5e-6));
    CHECK(density_std(rho)[0] == doctest::Approx(sigma).epsilon(5e-6));
  }
}

TEST_CASE("total energy matches the closed form for a displaced gaussian") {
  const Grid g({AxisSpec{-16.0, 16.0, 256}});
  const double omega = 2.0, sigma = 0.6, c = 1.5, k0 = -1.0, hbar = 0.8, mass = 1.3;
  const WaveFunction psi = packet(g, c, sigma, k0, hbar, mass);
  Hamiltonian h{{mass}, hbar, Potential::harmonic(omega)};
  const double kinetic = hbar * hbar / (8.0 * mass * sigma * sigma) + hbar * hbar * k0 * k0 / (2.0 * mass);
  const double potential = 0.5 * mass * omega * omega * (sigma * sigma + c * c);
  CHECK(total_energy(psi, h) == doctest::Approx(kinetic + potential).epsilon(1e-9));
}

TEST_CASE("norm drifts below 1e-12 per step") {
  const Grid g({AxisSpec{-8.0, 8.0, 128}});
  const WaveFunction psi0 = packet(g, 1.0, 0.5, 2.0);
  Hamiltonian h{{1.0}, 1.0, Potential::quartic(0.1)};
  const std::size_t steps = 1000;
  const auto snaps = evolve(psi0, h, PropagatorConfig{1e-4}, 1e-4 * double(steps), 0);
  CHECK(std::abs(snaps.back().norm() - 1.0) < 1e-12 * double(steps));
}

TEST_CASE("splitting error shrinks quadratically in the step") {
  const Grid g({AxisSpec{-8.0, 8.0, 128}});
  const WaveFunction psi0 = packet(g, 1.5, 0.5, 0.0);
  Hamiltonian h{{1.0}, 1.0, Potential::quartic(0.2)};
  const double T = 0.5;

  const WaveFunction ref = evolve(psi0, h, PropagatorConfig{T / 1024.0}, T, 0).back();
  const double e1 = max_amp_diff(evolve(psi0, h, PropagatorConfig{T / 64.0}, T, 0).back(), ref);
  const double e2 = max_amp_diff(evolve(psi0, h, PropagatorConfig{T / 128.0}, T, 0).back(), ref);
  CHECK(e1 / e2 > 3.0);
  CHECK(e1 / e2 < 6.0);
}

TEST_CASE("snapshot schedule includes both endpoints") {
  const Grid g({AxisSpec{-8.0, 8.0, 64}});
  const WaveFunction psi0 = packet(g, 0.0, 1.0, 0.0);
  Hamiltonian h{{1.0}, 1.0, Potential::free_space()};

  const auto every4 = evolve(psi0, h, PropagatorConfig{0.01}, 0.1, 4);
  REQUIRE(every4.size() == 4);  // steps 0, 4, 8, 10: the final step is kept even off-stride
  CHECK(every4.front().time == doctest::Approx(0.0));
  CHECK(every4[1].time == doctest::Approx(0.04));
  CHECK(every4.back().time == doctest::Approx(0.1));

  const auto finals = evolve(psi0, h, PropagatorConfig{0.01}, 0.1, 0);
  REQUIRE(finals.size() == 2);

  CHECK_THROWS_AS(evolve(psi0, h, PropagatorConfig{0.03}, 0.1, 1), std::invalid_argument);
}

TEST_CASE("zero-length evolution returns the input snapshot") {
  const Grid g({AxisSpec{-8.0, 8.0, 64}});
  const WaveFunction psi0 = packet(g, 0.0, 1.0, 0.0);
  Hamiltonian h{{1.0}, 1.0, Potential::free_space()};
  const auto snaps = evolve(psi0, h, PropagatorConfig{0.01}, 0.0, 1);
  REQUIRE(snaps.size() == 1);
  CHECK(max_amp_diff(snaps.front(), psi0) == 0.0);
}

TEST_CASE("stability report flags oversized steps") {
  const Grid g({AxisSpec{-8.0, 8.0, 256}});
  Hamiltonian h{{1.0}, 1.0, Potential::harmonic(4.0)};
  CHECK(stability(g, h, PropagatorConfig{1e-4}).within_guardrails());

  const StabilityReport big = stability(g, h, PropagatorConfig{0.05});
  CHECK_FALSE(big.within_guardrails());
  // max|V| dt / hbar at the box corner: 0.5 * 16 * 64 * 0.05
  CHECK(big.potential_phase == doctest::Approx(0.5 * 16.0 * 64.0 * 0.05).epsilon(1e-12));
  const double kmax = pi / g.spacing(0);
  CHECK(big.kinetic_phase == doctest::Approx(kmax * kmax * 0.05 / 2.0).epsilon(1e-12));
}

TEST_CASE("a 2D packet in an anisotropic well keeps its per-axis frequencies") {
  const Grid g({AxisSpec{-8.0, 8.0, 64}, AxisSpec{-8.0, 8.0, 64}});
  states::GaussianSpec spec;
  spec.center = {1.0, 0.0};
  spec.sigma = {std::sqrt(0.5), std::sqrt(0.25)};  // coherent widths for omega = 1 and mass 2
  spec.kick = {0.0, 0.0};
  const WaveFunction psi0 = states::gaussian(g, spec, 1.0, {1.0, 2.0});
  Hamiltonian h{{1.0, 2.0}, 1.0, Potential::harmonic(1.0)};

  const auto snaps = evolve(psi0, h, PropagatorConfig{pi / 1600.0}, pi, 0);
  const DensityField rho = position_density(snaps.back());
  CHECK(density_mean(rho)[0] == doctest::Approx(-1.0).epsilon(1e-5));  // half period on axis 0
  CHECK(density_mean(rho)[1] == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(snaps.back().norm() == doctest::Approx(1.0).epsilon(1e-10));
}

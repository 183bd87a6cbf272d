#include <cmath>
#include <numbers>
#include <vector>

#include "bohmlab/diagnostics.hpp"
#include "bohmlab/states.hpp"
#include "doctest.h"

using namespace bohmlab;
using std::numbers::pi;

namespace {

ScenarioFrame free_frame(std::size_t points, double dt, std::size_t stride) {
  ScenarioFrame frame;
  states::GaussianSpec spec;
  spec.center = {0.0};
  spec.sigma = {1.0};
  spec.kick = {0.5};
  frame.psi0 = states::gaussian(Grid({AxisSpec{-24.0, 24.0, points}}), spec, 1.0, {1.0});
  frame.hamiltonian = Hamiltonian{{1.0}, 1.0, Potential::free_space()};
  frame.propagation = PropagatorConfig{dt};
  frame.t_window = 0.2;
  frame.snapshot_stride = stride;
  return frame;
}

}  // namespace

TEST_CASE("the discrete continuity operator annihilates a manufactured exact pair") {
  const Grid g({AxisSpec{0.0, 2.0 * pi, 32}});
  const double L = 2.0 * pi, h = 0.1, a = 0.01, omega = 1.3, k = 2.0;
  const std::size_t snaps = 5;

  // P(x, t) = 1/L + a sin(omega t) cos(kx); the flux is tuned so that the
  // centered time difference plus the spectral divergence cancels exactly.
  std::vector<DensityField> densities;
  std::vector<VelocityField> fields;
  for (std::size_t j = 0; j < snaps; ++j) {
    const double t = h * double(j);
    DensityField rho{g, Representation::position, t, std::vector<double>(g.size())};
    VelocityField vf;
    vf.grid = g;
    vf.time = t;
    vf.dims = 1;
    vf.mask.assign(g.size(), 0);
    vf.components[0].assign(g.size(), 0.0);
    const double c =
        -a * (std::sin(omega * (t + h)) - std::sin(omega * (t - h))) / (2.0 * h * k);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double x = g.coordinate(0, i);
      rho.values[i] = 1.0 / L + a * std::sin(omega * t) * std::cos(k * x);
      vf.components[0][i] = c * std::sin(k * x) / rho.values[i];
    }
    densities.push_back(std::move(rho));
    fields.push_back(std::move(vf));
  }
  const FieldStack stack = FieldStack::from_fields(fields);

  const DiagnosticsReport r = continuity_residual(densities, stack);
  CHECK_FALSE(r.degenerate);
  CHECK(r.residual_rel < 1e-10);

  // The same detector must light up when the field is wrong by five percent.
  for (auto& f : fields)
    for (auto& v : f.components[0]) v *= 1.05;
  const DiagnosticsReport wrong = continuity_residual(densities, FieldStack::from_fields(fields));
  CHECK(wrong.residual_rel > 0.02);
}

TEST_CASE("analytic transport closes the continuity budget for a free packet") {
  const ScenarioFrame frame = free_frame(256, 2e-3, 10);
  const DiagnosticsReport r = frame_residual(frame, Representation::position);
  CHECK_FALSE(r.degenerate);
  CHECK(r.residual_rel < 1e-3);
  CHECK(r.masked_fraction > 0.0);  // gaussian tails sit below the density floor
  CHECK(r.snapshot_dt == doctest::Approx(0.02));
}

TEST_CASE("a static density is reported as degenerate, not as a zero residual win") {
  const Grid g({AxisSpec{0.0, 2.0 * pi, 32}});
  const WaveFunction mode = states::plane_wave(g, {1});
  ScenarioFrame frame;
  frame.psi0 = mode;
  frame.hamiltonian = Hamiltonian{{1.0}, 1.0, Potential::free_space()};
  frame.propagation = PropagatorConfig{1e-3};
  frame.t_window = 0.02;
  frame.snapshot_stride = 5;
  const DiagnosticsReport r = frame_residual(frame, Representation::position);
  CHECK(r.degenerate);
  CHECK(r.residual_rel == 0.0);

  CHECK_THROWS_AS(incompatibility_score(frame), std::runtime_error);
}

TEST_CASE("too few snapshots are rejected") {
  ScenarioFrame frame = free_frame(64, 1e-2, 20);  // 20 steps, stride 20: only endpoints
  CHECK_THROWS_AS(frame_residual(frame, Representation::position), std::invalid_argument);
}

TEST_CASE("free and harmonic scenarios pass both continuity tests") {
  const IncompatibilityResult free_r = incompatibility_score(free_frame(256, 2e-3, 10));
  CHECK(free_r.momentum_degenerate);  // free momentum density never moves
  CHECK(free_r.score == 1.0);
  CHECK(free_r.verdict == "both compatible");

  ScenarioFrame well;
  states::GaussianSpec spec;
  spec.center = {3.0};
  spec.sigma = {std::sqrt(0.5)};
  spec.kick = {0.0};
  well.psi0 = states::gaussian(Grid({AxisSpec{-16.0, 16.0, 256}}), spec, 1.0, {1.0});
  well.hamiltonian = Hamiltonian{{1.0}, 1.0, Potential::harmonic(1.0)};
  well.propagation = PropagatorConfig{1e-3};
  well.t_window = 0.2;
  well.snapshot_stride = 10;
  const IncompatibilityResult well_r = incompatibility_score(well);
  CHECK_FALSE(well_r.momentum_degenerate);
  CHECK(well_r.verdict == "both compatible");
  CHECK(well_r.momentum_rel < 1e-3);
  CHECK(well_r.position_rel < 1e-3);
}

TEST_CASE("a quartic superposition moves its momentum density off any transport solution") {
  ScenarioFrame frame;
  std::vector<states::SuperpositionTerm> terms(2);
  terms[0].gaussian = {{-2.0}, {0.5}, {0.0}};
  terms[1].gaussian = {{2.0}, {0.5}, {0.0}};
  frame.psi0 = states::gaussian_superposition(Grid({AxisSpec{-8.0, 8.0, 128}}), terms);
  frame.hamiltonian = Hamiltonian{{1.0}, 1.0, Potential::quartic(0.1)};
  frame.propagation = PropagatorConfig{2e-4};
  frame.t_window = 0.1;
  // the continuity defect is dominated by the snapshot-to-snapshot time
  // difference, falling 4x per halving of the spacing; 0.01 keeps the
  // position residual comfortably inside the compatibility threshold
  frame.snapshot_stride = 50;

  const IncompatibilityResult r = incompatibility_score(frame);
  CHECK_FALSE(r.momentum_degenerate);
  CHECK(r.verdict == "momentum incompatible");
  CHECK(r.score > 100.0);
  CHECK(r.position_rel < 1e-3);
}

TEST_CASE("refinement halvings cut a discretization-limited residual at least in half") {
  auto frame_at = [](int level) {
    return free_frame(std::size_t(128) << level, 4e-3 / double(1 << level), 5);
  };
  const RefinementStudy study = refinement_study(frame_at, 3, Representation::position);
  REQUIRE(study.residuals.size() == 3);
  CHECK(study.resolution_limited);
  CHECK(study.residuals[0] / study.residuals[1] >= 2.0);
  CHECK(study.residuals[1] / study.residuals[2] >= 2.0);

  CHECK_THROWS_AS(refinement_study(frame_at, 1, Representation::position), std::invalid_argument);
}

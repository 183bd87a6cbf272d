#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "bohmlab/propagator.hpp"
#include "bohmlab/states.hpp"
#include "bohmlab/stats.hpp"
#include "bohmlab/trajectories.hpp"
#include "doctest.h"

using namespace bohmlab;
using std::numbers::pi;

namespace {

VelocityField field_on(const Grid& g, double time, auto fx, auto fy) {
  VelocityField f;
  f.grid = g;
  f.time = time;
  f.dims = g.dims();
  f.mask.assign(g.size(), 0);
  for (int a = 0; a < g.dims(); ++a) f.components[std::size_t(a)].assign(g.size(), 0.0);
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    const auto ij = g.unravel(flat);
    const double x = g.coordinate(0, ij[0]);
    const double y = g.dims() == 2 ? g.coordinate(1, ij[1]) : 0.0;
    f.components[0][flat] = fx(x, y);
    if (g.dims() == 2) f.components[1][flat] = fy(x, y);
  }
  return f;
}

FieldStack static_stack(VelocityField f, double t0, double t1) {
  VelocityField g = f;
  f.time = t0;
  g.time = t1;
  std::vector<VelocityField> fields;
  fields.push_back(std::move(f));
  fields.push_back(std::move(g));
  return FieldStack::from_fields(std::move(fields));
}

}  // namespace

TEST_CASE("stack sampling is exact on linear fields and linear in time") {
  const Grid g({AxisSpec{-4.0, 4.0, 32}, AxisSpec{-4.0, 4.0, 32}});
  auto early = field_on(g, 0.0, [](double x, double y) { return 1.0 + 2.0 * x - y; },
                        [](double x, double y) { return -0.5 + x + 3.0 * y; });
  auto late = field_on(g, 2.0, [](double, double) { return 10.0; }, [](double, double) { return -10.0; });
  std::vector<VelocityField> fields{early, late};
  const FieldStack stack = FieldStack::from_fields(fields);
  CHECK(stack.dt == doctest::Approx(2.0));

  const double x[2] = {0.33, -1.27};
  double v[2];
  REQUIRE(stack.sample(x, 0.0, Interpolation::linear, v));
  CHECK(v[0] == doctest::Approx(1.0 + 2.0 * 0.33 + 1.27).epsilon(1e-12));
  CHECK(v[1] == doctest::Approx(-0.5 + 0.33 - 3.0 * 1.27).epsilon(1e-12));

  const double v0 = 1.0 + 2.0 * 0.33 + 1.27;
  REQUIRE(stack.sample(x, 0.5, Interpolation::linear, v));
  CHECK(v[0] == doctest::Approx(0.75 * v0 + 0.25 * 10.0).epsilon(1e-12));

  // Nearest mode snaps to the closest node and the closest snapshot.
  const double xn[2] = {0.33, -1.27};  // nearest node: (0.25, -1.25)
  REQUIRE(stack.sample(xn, 0.4, Interpolation::nearest, v));
  CHECK(v[0] == doctest::Approx(1.0 + 2.0 * 0.25 + 1.25).epsilon(1e-12));
  REQUIRE(stack.sample(xn, 1.6, Interpolation::nearest, v));
  CHECK(v[0] == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("sampling wraps the periodic seam and fails on masked corners") {
  const Grid g({AxisSpec{0.0, 8.0, 8}});
  auto f = field_on(g, 0.0, [](double x, double) { return x; }, [](double, double) { return 0.0; });
  FieldStack one = FieldStack::from_fields({f});
  CHECK(one.dt == 0.0);

  double v;
  const double seam = 7.5;  // between the last node (7) and the wrapped first node (0)
  REQUIRE(one.sample(&seam, 123.0, Interpolation::linear, &v));  // any t hits the single field
  CHECK(v == doctest::Approx(3.5));  // halfway between values 7 and 0

  f.mask[3] = 1;
  FieldStack holed = FieldStack::from_fields({f});
  const double inside = 2.5;  // cell [2, 3): corner 3 is masked
  CHECK_FALSE(holed.sample(&inside, 0.0, Interpolation::linear, &v));
  const double fine = 5.5;
  CHECK(holed.sample(&fine, 0.0, Interpolation::linear, &v));
}

TEST_CASE("constant transport is exact and respects the record schedule") {
  const Grid g({AxisSpec{-4.0, 4.0, 32}});
  auto f = field_on(g, 0.0, [](double, double) { return 0.75; }, [](double, double) { return 0.0; });
  const FieldStack stack = static_stack(f, 0.0, 2.0);

  const std::vector<double> x0{-3.0, -1.0, 0.5};
  IntegrateOptions opt;
  opt.dt_path = 0.25;
  opt.record_every = 2;
  const TrajectorySet set = integrate(x0, stack, opt);
  CHECK(set.n_paths == 3);
  REQUIRE(set.n_records == 5);  // macro steps 0, 2, 4, 6, 8
  CHECK(set.times.front() == doctest::Approx(0.0));
  CHECK(set.times.back() == doctest::Approx(2.0));
  CHECK(set.escaped_fraction == 0.0);
  for (std::size_t p = 0; p < 3; ++p) {
    CHECK(set.at(p, 0)[0] == doctest::Approx(x0[p]).epsilon(1e-12));
    CHECK(set.at(p, 2)[0] == doctest::Approx(x0[p] + 0.75).epsilon(1e-12));
    CHECK(set.at(p, 4)[0] == doctest::Approx(x0[p] + 1.5).epsilon(1e-12));
  }
}

TEST_CASE("rotation transport converges at fourth order") {
  const Grid g({AxisSpec{-4.0, 4.0, 64}, AxisSpec{-4.0, 4.0, 64}});
  auto f = field_on(g, 0.0, [](double, double y) { return -y; }, [](double x, double) { return x; });
  const double T = pi / 2.0;
  const FieldStack stack = static_stack(f, 0.0, T);

  auto endpoint_error = [&](double dt_path) {
    IntegrateOptions opt;
    opt.dt_path = dt_path;
    opt.cfl = 1e9;  // no substep subdivision: measure the bare scheme
    opt.record_every = 1 << 20;
    const std::vector<double> x0{2.0, 0.0};
    const TrajectorySet set = integrate(x0, stack, opt);
    const double* xT = set.at(0, set.n_records - 1);
    return std::hypot(xT[0] - 0.0, xT[1] - 2.0);  // quarter turn of (2, 0)
  };

  const double e1 = endpoint_error(T / 8.0);
  const double e2 = endpoint_error(T / 16.0);
  CHECK(e1 / e2 > 8.0);
  CHECK(e1 / e2 < 40.0);
  CHECK(e2 < 1e-4);
}

TEST_CASE("free packet trajectories preserve order and transport the density") {
  const Grid g({AxisSpec{-24.0, 24.0, 256}});
  const WaveFunction psi0 = [] {
    states::GaussianSpec s;
    s.center = {0.0};
    s.sigma = {1.0};
    s.kick = {0.5};
    return states::gaussian(Grid({AxisSpec{-24.0, 24.0, 256}}), s, 1.0, {1.0});
  }();
  Hamiltonian h{{1.0}, 1.0, Potential::free_space()};
  const auto snaps = evolve(psi0, h, PropagatorConfig{2e-3}, 1.0, 100);
  const FieldStack stack = analytic_field_stack(snaps, h, Representation::position);
  REQUIRE(stack.fields.size() == 6);

  const DensityField rho0 = position_density(snaps.front());
  const std::vector<double> x0 = sample_density(rho0, 20000, 99);
  IntegrateOptions opt;
  opt.dt_path = 0.05;
  opt.record_every = 1 << 20;
  const TrajectorySet set = integrate(x0, stack, opt);
  CHECK(set.escaped_fraction <= 0.01);

  // Single-axis flows cannot cross: endpoint order equals start order.
  std::vector<std::size_t> order(set.n_paths);
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x0[a] < x0[b]; });
  std::size_t inversions = 0;
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    if (set.escaped[order[i]] || set.escaped[order[i + 1]]) continue;
    const double a = set.at(order[i], set.n_records - 1)[0];
    const double b = set.at(order[i + 1], set.n_records - 1)[0];
    if (a > b + 1e-9) ++inversions;
  }
  CHECK(inversions == 0);

  std::vector<double> endpoints;
  for (std::size_t p = 0; p < set.n_paths; ++p)
    if (!set.escaped[p]) endpoints.push_back(set.at(p, set.n_records - 1)[0]);
  const auto cdf = stats::density_cdf(position_density(snaps.back()));
  CHECK(stats::ks_distance(endpoints, cdf) < 0.03);

  const DensityField transported = transport_density(x0, stack, opt);
  CHECK(transported.integral() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("paths freeze at masked regions and the budget trips") {
  const Grid g({AxisSpec{0.0, 8.0, 32}});
  auto f = field_on(g, 0.0, [](double, double) { return 1.0; }, [](double, double) { return 0.0; });
  for (std::size_t i = 16; i < 20; ++i) f.mask[i] = 1;  // wall at x in [4, 5)
  const FieldStack stack = static_stack(f, 0.0, 4.0);

  IntegrateOptions opt;
  opt.dt_path = 0.125;
  opt.max_escape_fraction = 1.0;
  const std::vector<double> x0{1.0, 6.0};
  const TrajectorySet set = integrate(x0, stack, opt);
  CHECK(set.escaped[0] == 1);  // ran into the wall and froze
  CHECK(set.escaped_fraction == doctest::Approx(0.5));
  const double frozen = set.at(0, set.n_records - 1)[0];
  CHECK(frozen > 3.0);
  CHECK(frozen < 4.1);
  CHECK(set.escape_time[0] < 4.0);
  CHECK(set.escaped[1] == 0);  // started past the wall, wraps around freely

  IntegrateOptions strict = opt;
  strict.max_escape_fraction = 0.25;
  CHECK_THROWS_AS(integrate(x0, stack, strict), std::runtime_error);
}

TEST_CASE("error bars propagate linearly within an interval, in quadrature across") {
  const Grid g({AxisSpec{-4.0, 4.0, 32}});
  auto f = field_on(g, 0.0, [](double, double) { return 0.5; }, [](double, double) { return 0.0; });
  f.provenance = VelocityField::Provenance::estimated;
  f.std_error[0].assign(g.size(), 0.2);

  const std::vector<double> x0{0.0};
  IntegrateOptions opt;
  opt.dt_path = 0.25;

  // One snapshot interval of length 2: fully correlated, std = se * T.
  const TrajectorySet one = integrate(x0, static_stack(f, 0.0, 2.0), opt);
  REQUIRE(one.propagated_std.size() == 1);
  CHECK(one.propagated_std[0] == doctest::Approx(0.2 * 2.0).epsilon(1e-9));

  // Two intervals of length 1 each: independent legs add in quadrature.
  VelocityField f2 = f, f3 = f;
  f2.time = 1.0;
  f3.time = 2.0;
  VelocityField f1 = f;
  f1.time = 0.0;
  const FieldStack three = FieldStack::from_fields({f1, f2, f3});
  const TrajectorySet two = integrate(x0, three, opt);
  CHECK(two.propagated_std[0] == doctest::Approx(0.2 * std::sqrt(2.0)).epsilon(1e-9));

  // Analytic stacks carry no error bars.
  VelocityField bare = field_on(g, 0.0, [](double, double) { return 0.5; }, [](double, double) { return 0.0; });
  const TrajectorySet none = integrate(x0, static_stack(bare, 0.0, 2.0), opt);
  CHECK(none.propagated_std.empty());
}

TEST_CASE("density sampling is reproducible and extends stably") {
  const Grid g({AxisSpec{-8.0, 8.0, 128}});
  states::GaussianSpec s;
  s.center = {1.0};
  s.sigma = {1.5};
  s.kick = {0.0};
  const DensityField rho = position_density(states::gaussian(g, s, 1.0, {1.0}));

  const auto small = sample_density(rho, 100, 7);
  const auto large = sample_density(rho, 10000, 7);
  REQUIRE(small.size() == 100);
  for (std::size_t i = 0; i < 100; ++i) CHECK(small[i] == large[i]);

  CHECK(stats::ks_distance(large, stats::density_cdf(rho)) < 0.02);

  const Grid g2({AxisSpec{-8.0, 8.0, 32}, AxisSpec{-8.0, 8.0, 32}});
  states::GaussianSpec s2;
  s2.center = {1.0, -2.0};
  s2.sigma = {1.0, 1.0};
  s2.kick = {0.0, 0.0};
  const DensityField rho2 = position_density(states::gaussian(g2, s2, 1.0, {1.0, 1.0}));
  const auto pts = sample_density(rho2, 4000, 7);
  REQUIRE(pts.size() == 8000);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < 4000; ++i) {
    mx += pts[2 * i];
    my += pts[2 * i + 1];
  }
  // Samples spread each node's mass over the cell to its right, so the
  // ensemble mean sits half a cell above the node-weighted mean.
  const double half = 0.5 * g2.spacing(0);
  CHECK(mx / 4000.0 == doctest::Approx(1.0 + half).epsilon(0.05));
  CHECK(my / 4000.0 == doctest::Approx(-2.0 + half).epsilon(0.05));
}

TEST_CASE("distribution helpers agree with hand-computed cases") {
  const auto ms = stats::mean_std(std::vector<double>{1.0, 2.0, 3.0, 4.0});
  CHECK(ms.mean == doctest::Approx(2.5));
  CHECK(ms.sd == doctest::Approx(std::sqrt(5.0 / 3.0)));

  // Uniform density on [0, 1): a single sample at 0.25 has KS distance 0.75.
  const Grid u({AxisSpec{0.0, 1.0, 8}});
  DensityField unif{u, Representation::position, 0.0, std::vector<double>(8, 1.0)};
  const auto cdf = stats::density_cdf(unif);
  CHECK(cdf(0.5) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(stats::ks_distance(std::vector<double>{0.25}, cdf) == doctest::Approx(0.75).epsilon(1e-12));

  const double d2 = stats::ks_distance(std::vector<double>{1.0, 2.0}, std::vector<double>{1.5, 2.5, 3.5});
  CHECK(d2 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

  const std::vector<double> samples{0.1, 0.4, 0.6, 0.9, 1.3};
  const DensityField emp = stats::empirical_density(samples, u);
  CHECK(emp.integral() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(emp.values[2] == doctest::Approx(1.0 / (5.0 * 0.125)).epsilon(1e-12));  // 1.3 wraps into cell 2

  CHECK(stats::kl_divergence(emp, emp) == doctest::Approx(0.0));
  CHECK(stats::kl_divergence(emp, unif) > 0.0);
}

TEST_CASE("marginals of a product density factorize") {
  const Grid g2({AxisSpec{-8.0, 8.0, 32}, AxisSpec{-8.0, 8.0, 64}});
  states::GaussianSpec s2;
  s2.center = {1.0, -2.0};
  s2.sigma = {1.2, 0.9};
  s2.kick = {0.0, 0.0};
  const DensityField rho = position_density(states::gaussian(g2, s2, 1.0, {1.0, 1.0}));
  const DensityField mx = stats::marginal_density(rho, 0);
  const DensityField my = stats::marginal_density(rho, 1);
  CHECK(mx.grid.dims() == 1);
  CHECK(mx.integral() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(my.integral() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(density_mean(mx)[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(density_std(my)[0] == doctest::Approx(0.9).epsilon(1e-6));
}

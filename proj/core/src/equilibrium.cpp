#include "bohmlab/equilibrium.hpp"

#include <cmath>
#include <stdexcept>

#include "bohmlab/stats.hpp"

namespace bohmlab {

PriorCandidate PriorCandidate::equilibrium() { return PriorCandidate(Kind::equilibrium, 1.0); }

PriorCandidate PriorCandidate::power(double p) {
  if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("prior exponent must be positive");
  return PriorCandidate(Kind::power, p);
}

PriorCandidate PriorCandidate::uniform() { return PriorCandidate(Kind::uniform, 0.0); }

PriorCandidate PriorCandidate::tabulated(std::vector<double> values) {
  for (double v : values)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("tabulated prior must be nonnegative and finite");
  PriorCandidate c(Kind::tabulated, 0.0);
  c.table_ = std::move(values);
  return c;
}

DensityField PriorCandidate::realize(const WaveFunction& psi) const {
  validate(psi);
  DensityField rho{psi.grid, psi.representation, psi.time, std::vector<double>(psi.grid.size(), 0.0)};
  switch (kind_) {
    case Kind::equilibrium:
      for (std::size_t i = 0; i < rho.values.size(); ++i) rho.values[i] = std::norm(psi.amplitudes[i]);
      break;
    case Kind::power:
      for (std::size_t i = 0; i < rho.values.size(); ++i)
        rho.values[i] = std::pow(std::norm(psi.amplitudes[i]), p_);
      break;
    case Kind::uniform:
      std::fill(rho.values.begin(), rho.values.end(), 1.0);
      break;
    case Kind::tabulated:
      if (table_.size() != psi.grid.size())
        throw std::invalid_argument("tabulated prior does not match the grid");
      rho.values = table_;
      break;
  }
  const double total = rho.integral();
  if (!(total > 0.0) || !std::isfinite(total)) throw std::runtime_error("prior rule produced no mass");
  for (double& v : rho.values) v /= total;
  return rho;
}

CovarianceReport covariance_residual(const PriorCandidate& prior, std::span<const WaveFunction> snapshots,
                                     const FieldStack& stack) {
  if (snapshots.size() != stack.fields.size())
    throw std::invalid_argument("snapshot and field stacks differ in length");
  std::vector<DensityField> candidate;
  candidate.reserve(snapshots.size());
  for (const WaveFunction& psi : snapshots) candidate.push_back(prior.realize(psi));
  const ResidualAccumulation acc = accumulate_continuity(candidate, stack);

  CovarianceReport rep;
  rep.residual_l2 = acc.residual_l2;
  rep.dpdt_l2 = acc.dpdt_l2;
  rep.div_l2 = acc.div_l2;
  rep.masked_fraction = acc.masked_fraction;

  // Same degeneracy scale as the continuity diagnostics: a term is "zero"
  // when it is ten digits below the density norm per unit snapshot spacing.
  const DensityField& mid = candidate[candidate.size() / 2];
  double p2 = 0.0;
  for (double v : mid.values) p2 += v * v;
  const double floor = 1e-10 * std::sqrt(p2 * mid.grid.cell_volume()) / stack.dt;
  const double denom = std::max(acc.dpdt_l2, acc.div_l2);
  if (denom <= floor) throw std::runtime_error("covariance test undefined for a stationary scenario");
  rep.residual_rel = acc.residual_l2 / denom;
  return rep;
}

double coarse_grained_H(const DensityField& empirical, const DensityField& equilibrium,
                        std::size_t cells_per_axis) {
  if (!(empirical.grid == equilibrium.grid))
    throw std::invalid_argument("coarse-grained H needs densities on the same grid");
  if (cells_per_axis == 0) throw std::invalid_argument("coarse cell must span at least one grid cell");
  const Grid& g = empirical.grid;
  const int nd = g.dims();
  for (int a = 0; a < nd; ++a)
    if (g.points(a) % cells_per_axis != 0)
      throw std::invalid_argument("coarse cell must be a whole number of grid cells");

  const std::size_t b0 = g.points(0) / cells_per_axis;
  const std::size_t b1 = (nd == 2) ? g.points(1) / cells_per_axis : 1;
  const std::size_t per_block = (nd == 2) ? cells_per_axis * cells_per_axis : cells_per_axis;
  const double block_volume = g.cell_volume() * static_cast<double>(per_block);

  double H = 0.0;
  for (std::size_t c0 = 0; c0 < b0; ++c0) {
    for (std::size_t c1 = 0; c1 < b1; ++c1) {
      double p = 0.0, q = 0.0;
      for (std::size_t i = 0; i < cells_per_axis; ++i) {
        const std::size_t i0 = c0 * cells_per_axis + i;
        if (nd == 1) {
          p += empirical.values[i0];
          q += equilibrium.values[i0];
          continue;
        }
        for (std::size_t j = 0; j < cells_per_axis; ++j) {
          const std::size_t flat = g.index(i0, c1 * cells_per_axis + j);
          p += empirical.values[flat];
          q += equilibrium.values[flat];
        }
      }
      p /= static_cast<double>(per_block);
      q /= static_cast<double>(per_block);
      if (p <= 0.0) continue;
      if (q <= 0.0) throw std::runtime_error("empirical mass in a cell of zero equilibrium mass");
      H += p * std::log(p / q) * block_volume;
    }
  }
  return std::max(H, 0.0);
}

HFunctionSeries relaxation_series(std::span<const WaveFunction> snapshots, const Hamiltonian& h,
                                  const DensityField& initial_density, const RelaxationConfig& cfg) {
  if (snapshots.size() < 2) throw std::invalid_argument("relaxation needs at least two snapshots");
  if (cfg.particles == 0) throw std::invalid_argument("relaxation needs particles");
  const FieldStack stack = analytic_field_stack(snapshots, h, Representation::position);
  if (!(initial_density.grid == stack.grid))
    throw std::invalid_argument("initial density must live on the scenario grid");

  const std::vector<double> x0 = sample_density(initial_density, cfg.particles, cfg.seed);

  IntegrateOptions io = cfg.integrate;
  const double dtp = io.dt_path > 0.0 ? io.dt_path : stack.dt;
  io.record_every = static_cast<std::size_t>(std::round(stack.dt / dtp));
  const TrajectorySet set = integrate(x0, stack, io);
  if (set.n_records != snapshots.size())
    throw std::logic_error("records do not line up with snapshots");

  std::vector<std::size_t> keep;
  keep.reserve(set.n_paths);
  for (std::size_t p = 0; p < set.n_paths; ++p)
    if (!set.escaped[p]) keep.push_back(p);
  if (keep.empty()) throw std::runtime_error("every path escaped; no ensemble left");

  HFunctionSeries series;
  series.cell_size = stack.grid.spacing(0) * static_cast<double>(cfg.cells_per_axis);
  series.n_particles = keep.size();

  const int nd = stack.grid.dims();
  std::vector<double> buf(keep.size() * static_cast<std::size_t>(nd));
  for (std::size_t rec = 0; rec < set.n_records; ++rec) {
    for (std::size_t i = 0; i < keep.size(); ++i) {
      const double* xp = set.at(keep[i], rec);
      for (int a = 0; a < nd; ++a) buf[i * static_cast<std::size_t>(nd) + static_cast<std::size_t>(a)] = xp[a];
    }
    const DensityField emp = stats::empirical_density(buf, stack.grid, set.times[rec]);
    const DensityField eq = position_density(snapshots[rec]);
    series.times.push_back(set.times[rec]);
    series.h_values.push_back(coarse_grained_H(emp, eq, cfg.cells_per_axis));
  }
  return series;
}

}  // namespace bohmlab

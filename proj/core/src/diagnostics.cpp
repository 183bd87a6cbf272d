#include "bohmlab/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

#include "bohmlab/spectral.hpp"

namespace bohmlab {

ResidualAccumulation accumulate_continuity(std::span<const DensityField> densities, const FieldStack& stack) {
  if (densities.size() < 3)
    throw std::invalid_argument("continuity residual needs at least three snapshots");
  if (densities.size() != stack.fields.size())
    throw std::invalid_argument("density and field stacks differ in length");
  const Grid& g = stack.grid;
  for (std::size_t k = 0; k < densities.size(); ++k) {
    if (!(densities[k].grid == g)) throw std::invalid_argument("density grid differs from the field grid");
    if (densities[k].representation != stack.representation)
      throw std::invalid_argument("density and field representations differ");
    const double expect = stack.t0 + stack.dt * static_cast<double>(k);
    if (std::abs(densities[k].time - expect) > 1e-9 * std::max(1.0, std::abs(expect)))
      throw std::invalid_argument("density and field snapshots are not co-registered in time");
  }
  if (!(stack.dt > 0.0)) throw std::invalid_argument("snapshot spacing must be positive");

  const std::size_t n = g.size();
  const int nd = g.dims();
  const double dv = g.cell_volume();

  ResidualAccumulation acc;
  acc.rms_field.assign(n, 0.0);
  std::vector<std::size_t> point_counts(n, 0);
  double res2 = 0.0, dpdt2 = 0.0, div2 = 0.0;
  std::size_t masked_total = 0;

  std::vector<double> flux(n), div(n), dtp(n);
  for (std::size_t k = 1; k + 1 < densities.size(); ++k) {
    const VelocityField& f = stack.fields[k];
    const DensityField& pk = densities[k];
    for (std::size_t i = 0; i < n; ++i)
      dtp[i] = (densities[k + 1].values[i] - densities[k - 1].values[i]) / (2.0 * stack.dt);

    std::fill(div.begin(), div.end(), 0.0);
    for (int a = 0; a < nd; ++a) {
      for (std::size_t i = 0; i < n; ++i)
        flux[i] = f.mask[i] ? 0.0 : f.components[a][i] * pk.values[i];
      const std::vector<double> d = spectral::derivative(g, flux, a);
      for (std::size_t i = 0; i < n; ++i) div[i] += d[i];
    }

    for (std::size_t i = 0; i < n; ++i) {
      if (f.mask[i]) {
        ++masked_total;
        continue;
      }
      const double r = dtp[i] + div[i];
      res2 += r * r * dv;
      dpdt2 += dtp[i] * dtp[i] * dv;
      div2 += div[i] * div[i] * dv;
      acc.rms_field[i] += r * r;
      ++point_counts[i];
    }
    ++acc.interior_times;
  }

  for (std::size_t i = 0; i < n; ++i)
    if (point_counts[i] > 0) acc.rms_field[i] = std::sqrt(acc.rms_field[i] / static_cast<double>(point_counts[i]));
  acc.residual_l2 = std::sqrt(res2);
  acc.dpdt_l2 = std::sqrt(dpdt2);
  acc.div_l2 = std::sqrt(div2);
  acc.masked_fraction =
      static_cast<double>(masked_total) / static_cast<double>(acc.interior_times * n);
  return acc;
}

namespace {

// Distinguishes "this density does not move" from "it moves slowly": the
// time-derivative norm is compared against the density's own norm over the
// snapshot spacing, with ten digits of headroom.
double degeneracy_floor(std::span<const DensityField> densities, const FieldStack& stack) {
  const DensityField& mid = densities[densities.size() / 2];
  double p2 = 0.0;
  for (double v : mid.values) p2 += v * v;
  return 1e-10 * std::sqrt(p2 * mid.grid.cell_volume()) / stack.dt;
}

}  // namespace

DiagnosticsReport continuity_residual(std::span<const DensityField> densities, const FieldStack& stack) {
  const ResidualAccumulation acc = accumulate_continuity(densities, stack);
  DiagnosticsReport rep;
  rep.representation = stack.representation;
  rep.grid = stack.grid;
  rep.grid_spacing = stack.grid.min_spacing();
  rep.snapshot_dt = stack.dt;
  rep.residual_field = acc.rms_field;
  rep.residual_l2 = acc.residual_l2;
  rep.dpdt_l2 = acc.dpdt_l2;
  rep.masked_fraction = acc.masked_fraction;
  rep.degenerate = acc.dpdt_l2 <= degeneracy_floor(densities, stack);
  rep.residual_rel = rep.degenerate ? 0.0 : acc.residual_l2 / acc.dpdt_l2;
  return rep;
}

DiagnosticsReport frame_residual(const ScenarioFrame& frame, Representation rep) {
  const double t_final = frame.psi0.time + frame.t_window;
  const std::vector<WaveFunction> snaps =
      evolve(frame.psi0, frame.hamiltonian, frame.propagation, t_final, frame.snapshot_stride);
  if (snaps.size() < 3)
    throw std::invalid_argument("diagnostic window too short for three snapshots at this stride");
  std::vector<DensityField> densities;
  densities.reserve(snaps.size());
  for (const WaveFunction& s : snaps)
    densities.push_back(rep == Representation::position ? position_density(s) : momentum_density(s));
  const FieldStack stack = analytic_field_stack(snaps, frame.hamiltonian, rep);
  return continuity_residual(densities, stack);
}

IncompatibilityResult incompatibility_score(const ScenarioFrame& frame, IncompatibilityThresholds thr) {
  IncompatibilityResult out;
  out.position_report = frame_residual(frame, Representation::position);
  out.momentum_report = frame_residual(frame, Representation::momentum);
  if (out.position_report.degenerate)
    throw std::runtime_error("continuity test undefined for a stationary scenario");
  out.position_rel = out.position_report.residual_rel;
  out.momentum_rel = out.momentum_report.residual_rel;
  out.momentum_degenerate = out.momentum_report.degenerate;

  if (out.momentum_degenerate) {
    // A static momentum density transported by a vanishing field: conserved
    // identically, nothing left to score.
    out.score = 1.0;
    out.verdict = out.position_rel < thr.compatible_rel ? "both compatible" : "inconclusive";
    return out;
  }
  out.score = out.momentum_rel / out.position_rel;
  if (out.score > thr.incompatible_score && out.momentum_rel > thr.compatible_rel)
    out.verdict = "momentum incompatible";
  else if (out.score < thr.compatible_score ||
           (out.momentum_rel < thr.compatible_rel && out.position_rel < thr.compatible_rel))
    out.verdict = "both compatible";
  else
    out.verdict = "inconclusive";
  return out;
}

RefinementStudy refinement_study(const std::function<ScenarioFrame(int)>& frame_at_level, int levels,
                                 Representation rep) {
  if (levels < 2) throw std::invalid_argument("a refinement study needs at least two levels");
  RefinementStudy study;
  bool any_degenerate = false;
  for (int level = 0; level < levels; ++level) {
    const DiagnosticsReport r = frame_residual(frame_at_level(level), rep);
    any_degenerate = any_degenerate || r.degenerate;
    study.residuals.push_back(r.residual_rel);
  }
  study.resolution_limited = true;
  if (any_degenerate) return study;  // identically zero counts as resolved away
  for (std::size_t k = 0; k + 1 < study.residuals.size(); ++k)
    if (!(study.residuals[k] >= 2.0 * study.residuals[k + 1])) study.resolution_limited = false;
  return study;
}

}  // namespace bohmlab

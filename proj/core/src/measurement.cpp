#include "bohmlab/measurement.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

#include "bohmlab/parallel.hpp"
#include "bohmlab/rng.hpp"
#include "bohmlab/spectral.hpp"

namespace bohmlab {

namespace {

// Everything shared by the runs of one ensemble; read-only once built.
struct ProtocolContext {
  WaveFunction obs_state;  // normalized initial state in the measured representation
  Grid position_grid;
  std::vector<double> weak_cum;  // running cell masses of the initial readout density
  Propagator propagator;
  int steps = 0;
  double state_std = 0.0;
  // Free evolution over the whole delay is one exact kinetic phase (the
  // half-kicks are identity and the per-step phases multiply), so a run
  // costs a single transform pair however many steps tau spans. Empty
  // whenever the potential is not free space.
  std::vector<cplx> fused_kinetic;
};

ProtocolContext make_context(const WaveFunction& psi, const Hamiltonian& h, const PointerModel& pointer,
                             const EnsembleConfig& cfg) {
  validate(psi);
  validate(h, psi.grid);
  if (psi.grid.dims() != 1) throw std::invalid_argument("the weak-then-strong protocol is one-dimensional");
  if (psi.representation != Representation::position)
    throw std::invalid_argument("protocol input must be a position-representation state");
  if (!(pointer.sigma > 0.0)) throw std::invalid_argument("pointer spread must be positive");
  if (cfg.runs == 0) throw std::invalid_argument("ensemble needs at least one run");
  const double dt = cfg.propagation.dt;
  if (!(dt > 0.0)) throw std::invalid_argument("propagation step must be positive");
  const double kf = cfg.tau / dt;
  const double kr = std::round(kf);
  if (!(kr >= 1.0) || std::abs(kf - kr) > 1e-9 * kr)
    throw std::invalid_argument("tau must be a positive multiple of the propagation step");
  if (!stability(psi.grid, h, cfg.propagation).within_guardrails())
    throw std::runtime_error("propagation step violates the stability guardrails");

  WaveFunction base = normalize(psi);
  WaveFunction obs =
      pointer.observable == Representation::position ? base : momentum_representation(base);

  const Grid& og = obs.grid;
  std::vector<double> cum(og.size());
  double acc = 0.0;
  const double d = og.spacing(0);
  for (std::size_t i = 0; i < og.size(); ++i) {
    acc += std::norm(obs.amplitudes[i]) * d;
    cum[i] = acc;
  }

  DensityField rho{og, pointer.observable, obs.time, {}};
  rho.values.resize(og.size());
  for (std::size_t i = 0; i < og.size(); ++i) rho.values[i] = std::norm(obs.amplitudes[i]);
  const double sd = density_std(rho)[0];

  std::vector<cplx> fused;
  if (h.potential.kind() == Potential::Kind::free_space) {
    const Grid& pg = base.grid;
    fused.resize(pg.size());
    const double t = kr * dt;
    const double invn = 1.0 / static_cast<double>(pg.size());
    for (std::size_t i = 0; i < pg.size(); ++i) {
      const double k = spectral::wavenumber(pg, 0, i);
      fused[i] = std::polar(invn, -h.hbar * k * k * t / (2.0 * h.mass[0]));
    }
  }

  return ProtocolContext{std::move(obs),
                         base.grid,
                         std::move(cum),
                         Propagator(base.grid, h, cfg.propagation),
                         static_cast<int>(kr),
                         sd,
                         std::move(fused)};
}

void free_advance(const ProtocolContext& ctx, std::vector<cplx>& amps, std::vector<cplx>& scratch) {
  spectral::dft_forward(ctx.position_grid, amps.data(), scratch.data());
  for (std::size_t i = 0; i < amps.size(); ++i) scratch[i] *= ctx.fused_kinetic[i];
  spectral::dft_inverse(ctx.position_grid, scratch.data(), amps.data());
}

std::size_t sample_cell(const std::vector<double>& cum, double u) {
  const auto it = std::lower_bound(cum.begin(), cum.end(), u * cum.back());
  return std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
}

std::size_t sample_amplitude_cell(const std::vector<cplx>& a, double u) {
  double total = 0.0;
  for (const cplx& z : a) total += std::norm(z);
  const double target = u * total;
  double run = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    run += std::norm(a[i]);
    if (run >= target) return i;
  }
  return a.size() - 1;
}

WeakMeasurementRecord run_protocol(const ProtocolContext& ctx, const PointerModel& pointer,
                                   const EnsembleConfig& cfg, std::uint32_t run,
                                   std::vector<cplx>& work, std::vector<cplx>& scratch,
                                   std::size_t& resampled) {
  RngStream rng(cfg.seed, run);
  const Grid& og = ctx.obs_state.grid;
  const double d = og.spacing(0);
  const double inv4s2 = 1.0 / (4.0 * pointer.sigma * pointer.sigma);

  double y = 0.0;
  double norm2 = 0.0;
  for (int attempt = 0;; ++attempt) {
    const std::size_t c = sample_cell(ctx.weak_cum, rng.uniform());
    const double q = og.coordinate(0, c) + rng.uniform() * d;
    y = q + pointer.sigma * rng.normal();
    norm2 = 0.0;
    for (std::size_t i = 0; i < og.size(); ++i) {
      const double qi = og.coordinate(0, i);
      work[i] = ctx.obs_state.amplitudes[i] * std::exp(-(y - qi) * (y - qi) * inv4s2);
      norm2 += std::norm(work[i]);
    }
    norm2 *= d;
    if (norm2 >= 1e-12) break;
    ++resampled;
    if (attempt >= 64) throw std::runtime_error("back-action keeps annihilating the state");
  }
  const double rescale = 1.0 / std::sqrt(norm2);
  for (cplx& w : work) w *= rescale;

  const std::vector<cplx>* final_amps = &work;
  WaveFunction fin;  // only populated on the momentum path
  if (pointer.observable == Representation::position) {
    if (ctx.fused_kinetic.empty()) {
      for (int s = 0; s < ctx.steps; ++s) ctx.propagator.step(work, scratch);
    } else {
      free_advance(ctx, work, scratch);
    }
  } else {
    WaveFunction cond = ctx.obs_state;
    cond.amplitudes = work;
    WaveFunction pos = position_representation(cond, ctx.position_grid);
    if (ctx.fused_kinetic.empty()) {
      for (int s = 0; s < ctx.steps; ++s) ctx.propagator.step(pos.amplitudes, scratch);
    } else {
      free_advance(ctx, pos.amplitudes, scratch);
    }
    fin = momentum_representation(pos);
    final_amps = &fin.amplitudes;
  }

  const std::size_t cs = sample_amplitude_cell(*final_amps, rng.uniform());
  const double strong = og.coordinate(0, cs) + rng.uniform() * d;
  return WeakMeasurementRecord{run, y, strong, cfg.tau};
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag, std::uint64_t k) {
  return RngStream(seed, tag + k).next_u64();
}

}  // namespace

WeakMeasurementRecord simulate_run(const WaveFunction& psi, const Hamiltonian& h, const PointerModel& pointer,
                                   const EnsembleConfig& cfg, std::uint32_t run_index) {
  ProtocolContext ctx = make_context(psi, h, pointer, cfg);
  std::vector<cplx> work(ctx.obs_state.grid.size()), scratch(ctx.obs_state.grid.size());
  std::size_t resampled = 0;
  return run_protocol(ctx, pointer, cfg, run_index, work, scratch, resampled);
}

EnsembleResult simulate_ensemble(const WaveFunction& psi, const Hamiltonian& h, const PointerModel& pointer,
                                 const EnsembleConfig& cfg) {
  const ProtocolContext ctx = make_context(psi, h, pointer, cfg);

  EnsembleResult out;
  out.records.resize(cfg.runs);
  out.tau = cfg.tau;
  out.sigma = pointer.sigma;
  out.state_std = ctx.state_std;
  out.weak_regime_warning = pointer.sigma < 3.0 * ctx.state_std;

  std::atomic<std::size_t> resampled_total{0};
  parallel_for(cfg.runs, cfg.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<cplx> work(ctx.obs_state.grid.size()), scratch(ctx.obs_state.grid.size());
    std::size_t resampled = 0;
    for (std::size_t r = begin; r < end; ++r)
      out.records[r] =
          run_protocol(ctx, pointer, cfg, static_cast<std::uint32_t>(r), work, scratch, resampled);
    resampled_total.fetch_add(resampled, std::memory_order_relaxed);
  });
  out.resampled = resampled_total.load();

  // Underflow resampling is a rounding safety valve. Seeing it at any rate
  // means the pointer model is being driven far outside its regime.
  if (out.resampled > std::max<std::size_t>(1, cfg.runs / 1000000))
    throw std::runtime_error("norm-underflow resampling exceeded its budget");
  return out;
}

Binning grid_binning(const Grid& grid, std::size_t coarsen) {
  if (grid.dims() != 1) throw std::invalid_argument("readout binning is one-dimensional");
  if (coarsen == 0 || grid.points(0) % coarsen != 0)
    throw std::invalid_argument("coarsening factor must divide the grid point count");
  const std::size_t bins = grid.points(0) / coarsen;
  if (bins < 4) throw std::invalid_argument("coarsening leaves too few bins");
  return Binning{grid.lo(0), grid.spacing(0) * static_cast<double>(coarsen), bins};
}

VelocityEstimate estimate_velocity(std::span<const WeakMeasurementRecord> records, const Binning& binning,
                                   double sigma, std::size_t min_count) {
  if (records.empty()) throw std::invalid_argument("no records to estimate from");
  if (binning.bins == 0 || !(binning.width > 0.0)) throw std::invalid_argument("empty binning");
  const double tau = records.front().tau;
  if (!(tau > 0.0)) throw std::invalid_argument("records carry a non-positive delay");

  VelocityEstimate est;
  est.binning = binning;
  est.tau = tau;
  est.sigma = sigma;
  est.n_total = records.size();
  est.bin_centers.resize(binning.bins);
  for (std::size_t b = 0; b < binning.bins; ++b)
    est.bin_centers[b] = binning.lo + (static_cast<double>(b) + 0.5) * binning.width;
  est.v_hat.assign(binning.bins, 0.0);
  est.std_error.assign(binning.bins, 0.0);
  est.counts.assign(binning.bins, 0);
  est.mask.assign(binning.bins, 0);

  auto bin_of = [&](const WeakMeasurementRecord& r) {
    if (std::abs(r.tau - tau) > 1e-12 * std::max(1.0, tau))
      throw std::invalid_argument("records mix different delays");
    const double u = (r.strong_readout - binning.lo) / binning.width;
    const auto b = static_cast<std::ptrdiff_t>(std::floor(u));
    if (b < 0 || b >= static_cast<std::ptrdiff_t>(binning.bins))
      throw std::invalid_argument("strong readout falls outside the binning");
    return static_cast<std::size_t>(b);
  };

  for (const auto& r : records) {
    const std::size_t b = bin_of(r);
    est.counts[b] += 1;
    est.v_hat[b] += (r.strong_readout - r.weak_readout) / tau;
  }
  for (std::size_t b = 0; b < binning.bins; ++b)
    if (est.counts[b] > 0) est.v_hat[b] /= static_cast<double>(est.counts[b]);

  std::vector<double> sq(binning.bins, 0.0);
  for (const auto& r : records) {
    const std::size_t b = bin_of(r);
    const double dev = (r.strong_readout - r.weak_readout) / tau - est.v_hat[b];
    sq[b] += dev * dev;
  }
  for (std::size_t b = 0; b < binning.bins; ++b) {
    const std::size_t n = est.counts[b];
    if (n >= 2) est.std_error[b] = std::sqrt(sq[b] / static_cast<double>(n - 1) / static_cast<double>(n));
    if (n < min_count) est.mask[b] = 1;
  }
  return est;
}

VelocityEstimate estimate_momentum_velocity(const WaveFunction& psi, const Hamiltonian& h, double sigma,
                                            const EnsembleConfig& cfg, std::size_t coarsen,
                                            std::size_t min_count) {
  const PointerModel pointer{sigma, Representation::momentum};
  const EnsembleResult r = simulate_ensemble(psi, h, pointer, cfg);
  const Binning binning = grid_binning(psi.grid.momentum_dual(psi.hbar), coarsen);
  return estimate_velocity(r.records, binning, sigma, min_count);
}

namespace {

bool same_binning(const Binning& a, const Binning& b) {
  const double scale = std::max({1.0, std::abs(a.lo), a.width});
  return a.bins == b.bins && std::abs(a.lo - b.lo) <= 1e-12 * scale &&
         std::abs(a.width - b.width) <= 1e-12 * scale;
}

// Solves the 3x3 system A x = rhs in place; A must be symmetric positive
// definite (it is a weighted design normal matrix).
void solve3(double A[3][3], double rhs[3], double x[3]) {
  int perm[3] = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(A[perm[r]][col]) > std::abs(A[perm[piv]][col])) piv = r;
    std::swap(perm[col], perm[piv]);
    const double p = A[perm[col]][col];
    if (!(std::abs(p) > 1e-300)) throw std::runtime_error("extrapolation design is singular; vary both tau and sigma");
    for (int r = col + 1; r < 3; ++r) {
      const double f = A[perm[r]][col] / p;
      for (int c = col; c < 3; ++c) A[perm[r]][c] -= f * A[perm[col]][c];
      rhs[perm[r]] -= f * rhs[perm[col]];
    }
  }
  for (int col = 2; col >= 0; --col) {
    double s = rhs[perm[col]];
    for (int c = col + 1; c < 3; ++c) s -= A[perm[col]][c] * x[c];
    x[col] = s / A[perm[col]][col];
  }
}

}  // namespace

ExtrapolatedEstimate extrapolate_bias(std::span<const VelocityEstimate> estimates) {
  if (estimates.size() < 3)
    throw std::invalid_argument("extrapolation needs at least three settings");
  const Binning& binning = estimates.front().binning;
  for (const auto& e : estimates)
    if (!same_binning(e.binning, binning)) throw std::invalid_argument("estimates use different binnings");

  auto distinct = [&](auto getter) {
    std::vector<double> vals;
    for (const auto& e : estimates) {
      const double v = getter(e);
      bool seen = false;
      for (double w : vals)
        if (std::abs(v - w) <= 1e-12 * std::max(1.0, std::abs(w))) seen = true;
      if (!seen) vals.push_back(v);
    }
    return vals.size();
  };
  if (distinct([](const VelocityEstimate& e) { return e.tau; }) < 2 ||
      distinct([](const VelocityEstimate& e) { return e.sigma; }) < 2)
    throw std::invalid_argument("extrapolation needs at least two distinct tau and sigma values");

  ExtrapolatedEstimate out;
  VelocityEstimate& est = out.estimate;
  est.binning = binning;
  est.bin_centers = estimates.front().bin_centers;
  est.tau = 0.0;
  est.sigma = 0.0;  // sentinel: the (tau -> 0, weak) limit
  est.v_hat.assign(binning.bins, 0.0);
  est.std_error.assign(binning.bins, 0.0);
  est.counts.assign(binning.bins, 0);
  est.mask.assign(binning.bins, 0);
  out.tau_slope.assign(binning.bins, 0.0);
  out.inv_sigma2_slope.assign(binning.bins, 0.0);
  for (const auto& e : estimates) est.n_total += e.n_total;

  for (std::size_t b = 0; b < binning.bins; ++b) {
    bool usable = true;
    double max_se2 = 0.0;
    for (const auto& e : estimates) {
      if (e.mask[b]) usable = false;
      max_se2 = std::max(max_se2, e.std_error[b] * e.std_error[b]);
    }
    if (!usable) {
      est.mask[b] = 1;
      continue;
    }
    // Zero errors (degenerate synthetic ensembles) get uniform weights via the floor.
    const double floor = 1e-30 + 1e-12 * max_se2;
    double A[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double rhs[3] = {0, 0, 0};
    for (const auto& e : estimates) {
      const double xv[3] = {1.0, e.tau, 1.0 / (e.sigma * e.sigma)};
      const double w = 1.0 / (e.std_error[b] * e.std_error[b] + floor);
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) A[i][j] += w * xv[i] * xv[j];
        rhs[i] += w * xv[i] * e.v_hat[b];
      }
    }
    double Acov[3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) Acov[i][j] = A[i][j];
    double beta[3];
    solve3(A, rhs, beta);
    double e0[3] = {1.0, 0.0, 0.0};
    double col0[3];
    solve3(Acov, e0, col0);  // first column of the inverse normal matrix

    est.v_hat[b] = beta[0];
    est.std_error[b] = std::sqrt(std::max(col0[0], 0.0));
    out.tau_slope[b] = beta[1];
    out.inv_sigma2_slope[b] = beta[2];
    std::size_t cmin = estimates.front().counts[b];
    for (const auto& e : estimates) cmin = std::min(cmin, e.counts[b]);
    est.counts[b] = cmin;
  }
  return out;
}

FieldEstimationDetail estimate_velocity_detail(const WaveFunction& psi, const Hamiltonian& h,
                                               Representation observable, const FieldEstimationConfig& cfg,
                                               bool keep_records) {
  if (cfg.settings.empty()) throw std::invalid_argument("field estimation needs at least one setting");
  const Grid obs_grid =
      observable == Representation::position ? psi.grid : psi.grid.momentum_dual(psi.hbar);
  const Binning binning = grid_binning(obs_grid, cfg.coarsen);
  if (!is_power_of_two(binning.bins) || binning.bins < 8)
    throw std::invalid_argument("coarse field needs a power-of-two bin count of at least 8");

  FieldEstimationDetail out;
  out.settings.reserve(cfg.settings.size());
  for (std::size_t k = 0; k < cfg.settings.size(); ++k) {
    const ProtocolSetting& s = cfg.settings[k];
    EnsembleConfig ec;
    ec.tau = s.tau;
    ec.runs = s.runs;
    ec.seed = derive_seed(cfg.seed, 0x53455454ull, k);  // per-setting substream
    ec.threads = cfg.threads;
    ec.propagation = cfg.propagation;
    const PointerModel pointer{s.sigma, observable};
    EnsembleResult r = simulate_ensemble(psi, h, pointer, ec);
    SettingOutcome outcome;
    outcome.estimate = estimate_velocity(r.records, binning, s.sigma, cfg.min_count);
    outcome.state_std = r.state_std;
    outcome.resampled = r.resampled;
    outcome.weak_regime_warning = r.weak_regime_warning;
    if (keep_records) outcome.records = std::move(r.records);
    out.settings.push_back(std::move(outcome));
  }

  const VelocityEstimate* final_est = &out.settings.front().estimate;
  std::set<double> taus, sigmas;
  for (const SettingOutcome& o : out.settings) {
    taus.insert(o.estimate.tau);
    sigmas.insert(o.estimate.sigma);
  }
  // Fewer settings than the fit needs is a valid protocol, just not an
  // extrapolable one; the first setting then stands as the final field.
  if (out.settings.size() >= 3 && taus.size() >= 2 && sigmas.size() >= 2) {
    std::vector<VelocityEstimate> per;
    per.reserve(out.settings.size());
    for (const SettingOutcome& o : out.settings) per.push_back(o.estimate);
    out.extrapolated = extrapolate_bias(per);
    out.has_extrapolated = true;
    final_est = &out.extrapolated.estimate;
  }

  // Half-bin shift puts the field's lattice points on the bin centers.
  const double half = 0.5 * binning.width;
  const Grid coarse({AxisSpec{binning.lo + half,
                              binning.lo + binning.width * static_cast<double>(binning.bins) + half,
                              binning.bins}});
  VelocityField f;
  f.grid = coarse;
  f.representation = observable;
  f.provenance = VelocityField::Provenance::estimated;
  f.time = psi.time;
  f.dims = 1;
  f.components[0].assign(binning.bins, 0.0);
  f.std_error[0].assign(binning.bins, 0.0);
  f.mask.assign(binning.bins, 0);
  for (std::size_t b = 0; b < binning.bins; ++b) {
    if (final_est->mask[b]) {
      f.mask[b] = 1;
      continue;
    }
    f.components[0][b] = final_est->v_hat[b];
    f.std_error[0][b] = final_est->std_error[b];
  }
  out.field = std::move(f);
  return out;
}

VelocityField estimate_velocity_field(const WaveFunction& psi, const Hamiltonian& h,
                                      Representation observable, const FieldEstimationConfig& cfg) {
  return estimate_velocity_detail(psi, h, observable, cfg, false).field;
}

FieldStack estimated_field_stack(std::span<const WaveFunction> snapshots, const Hamiltonian& h,
                                 Representation observable, const FieldEstimationConfig& cfg) {
  if (snapshots.size() < 2) throw std::invalid_argument("a field stack needs at least two snapshots");
  std::vector<VelocityField> fields;
  fields.reserve(snapshots.size());
  for (std::size_t s = 0; s < snapshots.size(); ++s) {
    FieldEstimationConfig per = cfg;
    per.seed = derive_seed(cfg.seed, 0x534e4150ull, s);  // per-snapshot substream
    fields.push_back(estimate_velocity_field(snapshots[s], h, observable, per));
  }
  return FieldStack::from_fields(std::move(fields));
}

}  // namespace bohmlab

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bohmlab/propagator.hpp"
#include "bohmlab/trajectories.hpp"

namespace bohmlab {

// Gaussian von Neumann pointer. The weak readout is the pointer sample
// itself; back-action is the Kraus factor exp(-(y - q)^2 / 4 sigma^2) in the
// measured representation. sigma well above the state spread keeps the
// disturbance negligible at the price of per-run noise.
struct PointerModel {
  double sigma = 1.0;
  Representation observable = Representation::position;
};

struct WeakMeasurementRecord {
  std::uint32_t run_index = 0;
  double weak_readout = 0.0;    // pointer sample at the start time
  double strong_readout = 0.0;  // projective readout after the delay
  double tau = 0.0;
};

struct EnsembleConfig {
  double tau = 0.0;  // weak-to-strong delay; must be a positive multiple of propagation.dt
  std::size_t runs = 0;
  std::uint64_t seed = 0;
  int threads = 1;
  PropagatorConfig propagation{};
};

struct EnsembleResult {
  std::vector<WeakMeasurementRecord> records;  // slot i belongs to run i
  double tau = 0.0;
  double sigma = 0.0;
  double state_std = 0.0;  // spread of the measured coordinate at the start time
  std::size_t resampled = 0;
  bool weak_regime_warning = false;  // sigma < 3x state_std
};

// One protocol run: weak readout, conditioned-state evolution over tau,
// strong readout. The stream must be dedicated to this run.
WeakMeasurementRecord simulate_run(const WaveFunction& psi, const Hamiltonian& h, const PointerModel& pointer,
                                   const EnsembleConfig& cfg, std::uint32_t run_index);

// cfg.runs independent runs; run i draws from stream (cfg.seed, i), so the
// record array is identical for any thread count.
EnsembleResult simulate_ensemble(const WaveFunction& psi, const Hamiltonian& h, const PointerModel& pointer,
                                 const EnsembleConfig& cfg);

// Uniform bins aligned with grid cells. Records falling outside are a caller
// error (the protocol's strong readout always lands inside the box).
struct Binning {
  double lo = 0.0;
  double width = 0.0;
  std::size_t bins = 0;
};
Binning grid_binning(const Grid& grid, std::size_t coarsen);

struct VelocityEstimate {
  Binning binning;
  std::vector<double> bin_centers;
  std::vector<double> v_hat;      // conditional mean of (strong - weak)/tau given strong in bin
  std::vector<double> std_error;  // sample std dev / sqrt(count)
  std::vector<std::size_t> counts;
  std::vector<std::uint8_t> mask;  // 1 = fewer than min_count records
  double tau = 0.0;
  double sigma = 0.0;  // 0 marks an extrapolated (weak, instantaneous) limit
  std::size_t n_total = 0;
};

VelocityEstimate estimate_velocity(std::span<const WeakMeasurementRecord> records, const Binning& binning,
                                   double sigma, std::size_t min_count = 100);

// Momentum-representation protocol: weak and strong readouts of p, binned on
// the dual grid. Estimates the drift of the momentum distribution.
VelocityEstimate estimate_momentum_velocity(const WaveFunction& psi, const Hamiltonian& h, double sigma,
                                            const EnsembleConfig& cfg, std::size_t coarsen = 4,
                                            std::size_t min_count = 100);

// Joint limit of the protocol. The finite-delay bias is linear in tau and the
// back-action bias linear in 1/sigma^2 at leading order, so a per-bin weighted
// fit against [1, tau, 1/sigma^2] extrapolates to (tau -> 0, sigma -> inf).
// Slopes are surfaced because the order of the two limits is a modeling
// choice, not something the estimator can decide.
struct ExtrapolatedEstimate {
  VelocityEstimate estimate;  // tau = 0, sigma = 0 sentinel, counts = per-bin minimum of the inputs
  std::vector<double> tau_slope;
  std::vector<double> inv_sigma2_slope;
};

ExtrapolatedEstimate extrapolate_bias(std::span<const VelocityEstimate> estimates);

struct ProtocolSetting {
  double tau = 0.0;
  double sigma = 0.0;
  std::size_t runs = 0;
};

struct FieldEstimationConfig {
  std::vector<ProtocolSetting> settings;  // one entry: direct estimate; several: extrapolated
  std::size_t coarsen = 4;
  std::size_t min_count = 100;
  PropagatorConfig propagation{};
  std::uint64_t seed = 0;
  int threads = 1;
};

// Runs the protocol at every setting and assembles a coarse-grid velocity
// field with per-bin standard errors. Masked bins carry value 0.
VelocityField estimate_velocity_field(const WaveFunction& psi, const Hamiltonian& h,
                                      Representation observable, const FieldEstimationConfig& cfg);

// Same computation with the per-setting results kept, for reporting. Records
// are bulky (tens of bytes a run), so they are dropped unless asked for.
struct SettingOutcome {
  VelocityEstimate estimate;
  double state_std = 0.0;
  std::size_t resampled = 0;
  bool weak_regime_warning = false;
  std::vector<WeakMeasurementRecord> records;  // populated only with keep_records
};

struct FieldEstimationDetail {
  std::vector<SettingOutcome> settings;
  ExtrapolatedEstimate extrapolated;  // meaningful only when has_extrapolated
  bool has_extrapolated = false;
  VelocityField field;
};

FieldEstimationDetail estimate_velocity_detail(const WaveFunction& psi, const Hamiltonian& h,
                                               Representation observable, const FieldEstimationConfig& cfg,
                                               bool keep_records = false);

// Field per snapshot, stacked for path integration. Snapshot k derives its
// ensemble seeds from (cfg.seed, k), so stacks are reproducible as a whole.
FieldStack estimated_field_stack(std::span<const WaveFunction> snapshots, const Hamiltonian& h,
                                 Representation observable, const FieldEstimationConfig& cfg);

}  // namespace bohmlab

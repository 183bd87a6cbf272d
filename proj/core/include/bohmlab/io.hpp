#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "bohmlab/equilibrium.hpp"
#include "bohmlab/measurement.hpp"

// Artifact writers. Every number goes through the same %.12g formatting, so
// re-running a seeded scenario reproduces files byte for byte; checksums of
// the results are what the manifest records.
namespace bohmlab::io {

std::string format_number(double v);  // %.12g

// Binary snapshot, little-endian: "BWL1", u32 dims, u32 N per axis,
// f64 (lo, hi) per axis, f64 time, then row-major interleaved (re, im) f64.
// Position representation only; hbar and mass travel in the manifest, not
// the file, and are supplied again on read.
void write_wavefunction(const std::filesystem::path& path, const WaveFunction& psi);
WaveFunction read_wavefunction(const std::filesystem::path& path, double hbar, std::vector<double> mass);

// Columns x[,y],value in row-major grid order.
void write_density_csv(const std::filesystem::path& path, const DensityField& rho);

// Columns x[,y],v[, vy][,se[, sey]],mask; error columns only when present.
void write_field_csv(const std::filesystem::path& path, const VelocityField& field);

// Columns run_index,weak,strong,tau.
void write_records_csv(const std::filesystem::path& path, std::span<const WeakMeasurementRecord> records);

// Columns center,v_hat,std_error,count,mask.
void write_estimate_csv(const std::filesystem::path& path, const VelocityEstimate& est);

// Adds tau_slope,inv_sigma2_slope columns.
void write_extrapolated_csv(const std::filesystem::path& path, const ExtrapolatedEstimate& est);

// Long format path_id,t,x[,y]; max_paths limits the bundle size (0 = all).
void write_paths_csv(const std::filesystem::path& path, const TrajectorySet& set, std::size_t max_paths = 0);

// Compact binary bundle: "BWP1", u32 dims, u64 n_paths, u64 n_records,
// f64 times, then per path u8 escaped, f64 escape_time, f32 positions.
void write_paths_binary(const std::filesystem::path& path, const TrajectorySet& set);
TrajectorySet read_paths_binary(const std::filesystem::path& path);

// Columns t,H.
void write_hseries_csv(const std::filesystem::path& path, const HFunctionSeries& series);

// Checksum recorded in manifests next to each artifact.
std::uint64_t fnv1a64_file(const std::filesystem::path& path);

}  // namespace bohmlab::io

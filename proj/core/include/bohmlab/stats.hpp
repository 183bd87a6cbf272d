#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bohmlab/wavefunction.hpp"

namespace bohmlab::stats {

struct MeanStd {
  double mean = 0.0;
  double sd = 0.0;  // unbiased
  std::size_t n = 0;
};
MeanStd mean_std(std::span<const double> x);

// Piecewise-constant-density CDF evaluated at x (periodic reduction applied).
// cum must be the per-cell cumulative built by density_cdf.
struct DensityCdf {
  Grid grid;
  int axis = 0;
  std::vector<double> cum;  // cum[i] = integral up to the right edge of cell i, cum.back() == 1
  double operator()(double x) const;
};
// 1D densities only (marginalize 2D first).
DensityCdf density_cdf(const DensityField& rho, int axis = 0);

DensityField marginal_density(const DensityField& rho, int axis);

// One-sample Kolmogorov-Smirnov distance against a piecewise-constant density.
// Samples may arrive unsorted.
double ks_distance(std::span<const double> samples, const DensityCdf& cdf);
// Two-sample KS distance.
double ks_distance(std::span<const double> a, std::span<const double> b);

// Histogram of samples on a grid -> normalized empirical DensityField.
// samples are packed [n][dims]; positions outside the box wrap periodically.
DensityField empirical_density(std::span<const double> samples, const Grid& grid, double time = 0.0);

// Kullback-Leibler divergence sum p log(p/q) dV over cells (p == 0 contributes 0).
double kl_divergence(const DensityField& p, const DensityField& q);

}  // namespace bohmlab::stats

#include "bohmlab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace bohmlab::stats {

MeanStd mean_std(std::span<const double> x) {
  MeanStd r;
  r.n = x.size();
  if (r.n == 0) return r;
  double s = 0.0;
  for (double v : x) s += v;
  r.mean = s / static_cast<double>(r.n);
  if (r.n < 2) return r;
  double q = 0.0;
  for (double v : x) q += (v - r.mean) * (v - r.mean);
  r.sd = std::sqrt(q / static_cast<double>(r.n - 1));
  return r;
}

DensityField marginal_density(const DensityField& rho, int axis) {
  if (axis < 0 || axis >= rho.grid.dims()) throw std::invalid_argument("marginal axis out of range");
  if (rho.grid.dims() == 1) return rho;
  const int other = 1 - axis;
  Grid g({AxisSpec{rho.grid.lo(axis), rho.grid.hi(axis), rho.grid.points(axis)}});
  DensityField out{g, rho.representation, rho.time, std::vector<double>(g.size(), 0.0)};
  const double dv = rho.grid.spacing(other);
  for (std::size_t i = 0; i < static_cast<std::size_t>(rho.grid.points(axis)); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < static_cast<std::size_t>(rho.grid.points(other)); ++j) {
      const std::size_t flat = (axis == 0) ? rho.grid.index(i, j) : rho.grid.index(j, i);
      s += rho.values[flat];
    }
    out.values[i] = s * dv;
  }
  return out;
}

DensityCdf density_cdf(const DensityField& rho, int axis) {
  const DensityField line = marginal_density(rho, axis);
  const std::size_t n = line.values.size();
  DensityCdf cdf{line.grid, 0, std::vector<double>(n, 0.0)};
  const double dx = line.grid.spacing(0);
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double mass = std::max(line.values[i], 0.0) * dx;
    acc += mass;
    cdf.cum[i] = acc;
  }
  if (!(acc > 0.0) || !std::isfinite(acc)) throw std::runtime_error("density has no mass, cannot build a CDF");
  for (double& c : cdf.cum) c /= acc;
  cdf.cum.back() = 1.0;
  return cdf;
}

double DensityCdf::operator()(double x) const {
  const double xr = grid.reduce(0, x);
  const std::size_t c = grid.cell(0, xr);
  const double left = grid.lo(0) + static_cast<double>(c) * grid.spacing(0);
  const double frac = std::clamp((xr - left) / grid.spacing(0), 0.0, 1.0);
  const double below = (c == 0) ? 0.0 : cum[c - 1];
  return below + frac * (cum[c] - below);
}

double ks_distance(std::span<const double> samples, const DensityCdf& cdf) {
  if (samples.empty()) throw std::invalid_argument("KS distance needs samples");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  const double n = static_cast<double>(s.size());
  double d = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double f = cdf(s[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
  }
  return d;
}

double ks_distance(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS distance needs samples");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  const double na = static_cast<double>(sa.size()), nb = static_cast<double>(sb.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < sa.size() && j < sb.size()) {
    if (sa[i] <= sb[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

DensityField empirical_density(std::span<const double> samples, const Grid& grid, double time) {
  const int dims = grid.dims();
  if (dims <= 0) throw std::invalid_argument("empirical density needs a grid");
  if (samples.size() % static_cast<std::size_t>(dims) != 0)
    throw std::invalid_argument("sample buffer does not pack into grid dimension");
  const std::size_t n = samples.size() / static_cast<std::size_t>(dims);
  if (n == 0) throw std::invalid_argument("empirical density needs samples");
  DensityField out{grid, Representation::position, time, std::vector<double>(grid.size(), 0.0)};
  for (std::size_t s = 0; s < n; ++s) {
    std::size_t flat;
    const std::size_t c0 = grid.cell(0, samples[s * dims]);
    if (dims == 1) {
      flat = c0;
    } else {
      const std::size_t c1 = grid.cell(1, samples[s * dims + 1]);
      flat = grid.index(c0, c1);
    }
    out.values[flat] += 1.0;
  }
  const double norm = 1.0 / (static_cast<double>(n) * grid.cell_volume());
  for (double& v : out.values) v *= norm;
  return out;
}

double kl_divergence(const DensityField& p, const DensityField& q) {
  if (!(p.grid == q.grid)) throw std::invalid_argument("KL divergence needs matching grids");
  const double dv = p.grid.cell_volume();
  double s = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double pi = p.values[i];
    if (pi <= 0.0) continue;
    const double qi = q.values[i];
    if (qi <= 0.0) return std::numeric_limits<double>::infinity();
    s += pi * std::log(pi / qi) * dv;
  }
  return s;
}

}  // namespace bohmlab::stats

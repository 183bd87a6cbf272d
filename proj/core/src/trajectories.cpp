#include "bohmlab/trajectories.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "bohmlab/parallel.hpp"
#include "bohmlab/rng.hpp"
#include "bohmlab/stats.hpp"

namespace bohmlab {

namespace {

void validate_field_shape(const VelocityField& f) {
  const std::size_t n = f.grid.size();
  if (f.mask.size() != n) throw std::invalid_argument("velocity field mask does not match its grid");
  for (int a = 0; a < f.grid.dims(); ++a)
    if (f.components[a].size() != n) throw std::invalid_argument("velocity component does not match its grid");
}

}  // namespace

FieldStack FieldStack::from_fields(std::vector<VelocityField> fields) {
  if (fields.empty()) throw std::invalid_argument("field stack needs at least one field");
  const Grid g = fields.front().grid;
  const Representation rep = fields.front().representation;
  const bool with_se = !fields.front().std_error[0].empty();
  for (const VelocityField& f : fields) {
    validate_field_shape(f);
    if (!(f.grid == g)) throw std::invalid_argument("field stack requires a shared grid");
    if (f.representation != rep) throw std::invalid_argument("field stack requires one representation");
    if ((!f.std_error[0].empty()) != with_se)
      throw std::invalid_argument("field stack mixes fields with and without error bars");
  }
  double dt = 0.0;
  const double t0 = fields.front().time;
  if (fields.size() > 1) {
    dt = fields[1].time - t0;
    if (!(dt > 0.0)) throw std::invalid_argument("field stack times must increase");
    for (std::size_t k = 0; k < fields.size(); ++k) {
      const double expect = t0 + dt * static_cast<double>(k);
      if (std::abs(fields[k].time - expect) > 1e-9 * std::max(1.0, std::abs(expect)))
        throw std::invalid_argument("field stack requires uniformly spaced snapshot times");
    }
  }
  FieldStack s;
  s.grid = g;
  s.representation = rep;
  s.t0 = t0;
  s.dt = dt;
  s.fields = std::move(fields);
  return s;
}

bool FieldStack::has_std_error() const { return !fields.empty() && !fields.front().std_error[0].empty(); }

bool FieldStack::sample(const double* x, double t, Interpolation mode, double* v, double* se) const {
  const int nd = grid.dims();
  const bool with_se = se != nullptr && has_std_error();
  std::size_t k = 0;
  double wt = 0.0;
  if (fields.size() > 1) {
    const double s = (t - t0) / dt;
    const double kf = std::clamp(std::floor(s), 0.0, static_cast<double>(fields.size() - 2));
    k = static_cast<std::size_t>(kf);
    wt = std::clamp(s - kf, 0.0, 1.0);
  }

  if (mode == Interpolation::nearest) {
    const VelocityField& f = fields[(fields.size() > 1 && wt >= 0.5) ? k + 1 : k];
    // Field values live on lattice points lo + i*dx; pick the closest one.
    std::size_t node[2] = {0, 0};
    for (int a = 0; a < nd; ++a) {
      const double u = (grid.reduce(a, x[a]) - grid.lo(a)) / grid.spacing(a);
      node[a] = grid.wrap(a, static_cast<std::ptrdiff_t>(std::llround(u)));
    }
    const std::size_t flat = (nd == 1) ? node[0] : grid.index(node[0], node[1]);
    if (f.mask[flat]) return false;
    for (int a = 0; a < nd; ++a) {
      v[a] = f.components[a][flat];
      if (with_se) se[a] = f.std_error[a][flat];
    }
    return true;
  }

  // Bilinear between lattice points, wrapping across the periodic boundary.
  std::size_t idx[2][2] = {{0, 0}, {0, 0}};
  double w[2][2] = {{1.0, 0.0}, {1.0, 0.0}};
  for (int a = 0; a < nd; ++a) {
    const double u = (grid.reduce(a, x[a]) - grid.lo(a)) / grid.spacing(a);
    const double fl = std::floor(u);
    const double f = u - fl;
    const auto i0 = static_cast<std::ptrdiff_t>(fl);
    idx[a][0] = grid.wrap(a, i0);
    idx[a][1] = grid.wrap(a, i0 + 1);
    w[a][0] = 1.0 - f;
    w[a][1] = f;
  }
  const VelocityField& fa = fields[k];
  const VelocityField& fb = fields[(fields.size() > 1) ? k + 1 : k];
  for (int a = 0; a < nd; ++a) {
    v[a] = 0.0;
    if (with_se) se[a] = 0.0;
  }
  const int corners = 1 << nd;
  for (int c = 0; c < corners; ++c) {
    const int s0 = c & 1;
    const int s1 = (c >> 1) & 1;
    const std::size_t flat = (nd == 1) ? idx[0][s0] : grid.index(idx[0][s0], idx[1][s1]);
    if (fa.mask[flat] || fb.mask[flat]) return false;
    const double wc = (nd == 1) ? w[0][s0] : w[0][s0] * w[1][s1];
    for (int a = 0; a < nd; ++a) {
      v[a] += wc * ((1.0 - wt) * fa.components[a][flat] + wt * fb.components[a][flat]);
      if (with_se) se[a] += wc * ((1.0 - wt) * fa.std_error[a][flat] + wt * fb.std_error[a][flat]);
    }
  }
  return true;
}

TrajectorySet integrate(std::span<const double> x0, const FieldStack& stack, const IntegrateOptions& opt) {
  const int nd = stack.grid.dims();
  if (stack.fields.size() < 2) throw std::invalid_argument("path integration needs at least two snapshots");
  if (x0.empty() || x0.size() % static_cast<std::size_t>(nd) != 0)
    throw std::invalid_argument("initial positions do not pack into the stack dimension");
  if (!(opt.cfl > 0.0) || opt.max_substeps < 1) throw std::invalid_argument("bad substep controls");
  const std::size_t n_paths = x0.size() / static_cast<std::size_t>(nd);

  const double dt_req = opt.dt_path > 0.0 ? opt.dt_path : stack.dt;
  const double ratio = stack.dt / dt_req;
  const double ratio_round = std::round(ratio);
  if (!(ratio_round >= 1.0) || std::abs(ratio - ratio_round) > 1e-9 * ratio_round)
    throw std::invalid_argument("path step must evenly divide the snapshot spacing");
  const auto per_interval = static_cast<std::size_t>(ratio_round);
  const double dt_path = stack.dt / static_cast<double>(per_interval);
  const std::size_t n_macro = per_interval * (stack.fields.size() - 1);

  const std::size_t rec_every = std::max<std::size_t>(opt.record_every, 1);
  std::vector<std::size_t> rec_at;
  for (std::size_t m = 0; m < n_macro; m += rec_every) {
    rec_at.push_back(m);
    if (rec_every > n_macro) break;  // guards the wraparound of m += rec_every
  }
  rec_at.push_back(n_macro);

  TrajectorySet out;
  out.dims = nd;
  out.n_paths = n_paths;
  out.n_records = rec_at.size();
  out.times.resize(rec_at.size());
  for (std::size_t i = 0; i < rec_at.size(); ++i)
    out.times[i] = stack.t0 + dt_path * static_cast<double>(rec_at[i]);
  out.positions.assign(n_paths * out.n_records * static_cast<std::size_t>(nd), 0.0);
  out.escaped.assign(n_paths, 0);
  out.escape_time.assign(n_paths, stack.t_final());
  const bool with_se = stack.has_std_error();
  if (with_se) out.propagated_std.assign(n_paths * static_cast<std::size_t>(nd), 0.0);

  parallel_for(n_paths, opt.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      double x[2] = {0.0, 0.0};
      for (int a = 0; a < nd; ++a) x[a] = x0[p * static_cast<std::size_t>(nd) + static_cast<std::size_t>(a)];
      double acc[2] = {0.0, 0.0};  // linear error growth within one snapshot interval
      double var[2] = {0.0, 0.0};  // quadrature across intervals
      std::size_t cur_interval = 0;
      bool esc = false;
      double esc_t = stack.t0;
      std::size_t cursor = 0;
      for (std::size_t m = 0; m <= n_macro; ++m) {
        if (cursor < rec_at.size() && rec_at[cursor] == m) {
          double* slot = out.positions.data() + (p * out.n_records + cursor) * static_cast<std::size_t>(nd);
          for (int a = 0; a < nd; ++a) slot[a] = x[a];
          ++cursor;
        }
        if (m == n_macro) break;
        const double tm = stack.t0 + dt_path * static_cast<double>(m);
        if (!esc) {
          double v0[2], e0[2] = {0.0, 0.0};
          if (!stack.sample(x, tm, opt.interpolation, v0, with_se ? e0 : nullptr)) {
            esc = true;
            esc_t = tm;
          } else {
            double need = 1.0;
            for (int a = 0; a < nd; ++a)
              need = std::max(need, std::abs(v0[a]) * dt_path / (opt.cfl * stack.grid.spacing(a)));
            const int n_sub = std::min(opt.max_substeps, static_cast<int>(std::ceil(need)));
            const double h = dt_path / static_cast<double>(n_sub);
            for (int s = 0; s < n_sub && !esc; ++s) {
              const double ts = tm + h * static_cast<double>(s);
              double k1[2], k2[2], k3[2], k4[2], xt[2], e1[2] = {0.0, 0.0};
              bool ok = stack.sample(x, ts, opt.interpolation, k1, with_se ? e1 : nullptr);
              if (ok) {
                for (int a = 0; a < nd; ++a) xt[a] = x[a] + 0.5 * h * k1[a];
                ok = stack.sample(xt, ts + 0.5 * h, opt.interpolation, k2);
              }
              if (ok) {
                for (int a = 0; a < nd; ++a) xt[a] = x[a] + 0.5 * h * k2[a];
                ok = stack.sample(xt, ts + 0.5 * h, opt.interpolation, k3);
              }
              if (ok) {
                for (int a = 0; a < nd; ++a) xt[a] = x[a] + h * k3[a];
                ok = stack.sample(xt, ts + h, opt.interpolation, k4);
              }
              if (!ok) {
                esc = true;
                esc_t = ts;
                break;
              }
              for (int a = 0; a < nd; ++a) x[a] += h / 6.0 * (k1[a] + 2.0 * k2[a] + 2.0 * k3[a] + k4[a]);
              if (with_se)
                for (int a = 0; a < nd; ++a) acc[a] += e1[a] * h;
            }
          }
        }
        const std::size_t next_interval = (m + 1) / per_interval;
        if (esc || next_interval != cur_interval) {
          for (int a = 0; a < nd; ++a) {
            var[a] += acc[a] * acc[a];
            acc[a] = 0.0;
          }
          cur_interval = next_interval;
        }
      }
      for (int a = 0; a < nd; ++a) var[a] += acc[a] * acc[a];
      if (esc) {
        out.escaped[p] = 1;
        out.escape_time[p] = esc_t;
      }
      if (with_se)
        for (int a = 0; a < nd; ++a)
          out.propagated_std[p * static_cast<std::size_t>(nd) + static_cast<std::size_t>(a)] = std::sqrt(var[a]);
    }
  });

  std::size_t n_esc = 0;
  for (auto e : out.escaped) n_esc += e;
  out.escaped_fraction = static_cast<double>(n_esc) / static_cast<double>(n_paths);
  if (out.escaped_fraction > opt.max_escape_fraction) {
    char msg[160];
    std::snprintf(msg, sizeof msg, "%zu of %zu paths left the resolved region (%.3g > limit %.3g)", n_esc,
                  n_paths, out.escaped_fraction, opt.max_escape_fraction);
    throw std::runtime_error(msg);
  }
  return out;
}

DensityField transport_density(std::span<const double> x0, const FieldStack& stack, const IntegrateOptions& opt) {
  IntegrateOptions o = opt;
  o.record_every = std::numeric_limits<std::size_t>::max() / 2;
  const TrajectorySet set = integrate(x0, stack, o);
  const int nd = set.dims;
  std::vector<double> finals;
  finals.reserve(set.n_paths * static_cast<std::size_t>(nd));
  for (std::size_t p = 0; p < set.n_paths; ++p) {
    if (set.escaped[p]) continue;
    const double* xp = set.at(p, set.n_records - 1);
    for (int a = 0; a < nd; ++a) finals.push_back(xp[a]);
  }
  return stats::empirical_density(finals, stack.grid, stack.t_final());
}

std::vector<double> sample_density(const DensityField& rho, std::size_t n, std::uint64_t seed,
                                   std::uint64_t stream_salt) {
  const int nd = rho.grid.dims();
  if (n == 0) throw std::invalid_argument("sample count must be positive");
  std::vector<double> out(n * static_cast<std::size_t>(nd));
  if (nd == 1) {
    const stats::DensityCdf cdf = stats::density_cdf(rho, 0);
    const double dx = rho.grid.spacing(0);
    const double lo = rho.grid.lo(0);
    for (std::size_t i = 0; i < n; ++i) {
      RngStream rng(seed, stream_salt + i);
      const double u = rng.uniform();
      const auto it = std::lower_bound(cdf.cum.begin(), cdf.cum.end(), u);
      const std::size_t c = std::min<std::size_t>(static_cast<std::size_t>(it - cdf.cum.begin()),
                                                  cdf.cum.size() - 1);
      const double below = (c == 0) ? 0.0 : cdf.cum[c - 1];
      const double mass = cdf.cum[c] - below;
      const double frac = (mass > 0.0) ? (u - below) / mass : rng.uniform();
      out[i] = lo + (static_cast<double>(c) + std::clamp(frac, 0.0, 1.0)) * dx;
    }
    return out;
  }
  double pmax = 0.0;
  for (double v : rho.values) pmax = std::max(pmax, v);
  if (!(pmax > 0.0)) throw std::runtime_error("density has no mass, cannot sample");
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(seed, stream_salt + i);
    bool accepted = false;
    for (int tries = 0; tries < 100000; ++tries) {
      double x[2];
      for (int a = 0; a < 2; ++a) x[a] = rho.grid.lo(a) + rng.uniform() * rho.grid.length(a);
      const std::size_t flat = rho.grid.index(rho.grid.cell(0, x[0]), rho.grid.cell(1, x[1]));
      if (rng.uniform() * pmax <= rho.values[flat]) {
        out[i * 2] = x[0];
        out[i * 2 + 1] = x[1];
        accepted = true;
        break;
      }
    }
    if (!accepted) throw std::runtime_error("rejection sampling failed to accept, density too peaked");
  }
  return out;
}

FieldStack analytic_field_stack(std::span<const WaveFunction> snapshots, const Hamiltonian& h,
                                Representation rep, const VelocityFieldOptions& opt) {
  std::vector<VelocityField> fields;
  fields.reserve(snapshots.size());
  for (const WaveFunction& psi : snapshots)
    fields.push_back(rep == Representation::position ? velocity_field(psi, h, opt)
                                                     : momentum_velocity_field(psi, h, opt));
  return FieldStack::from_fields(std::move(fields));
}

}  // namespace bohmlab

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bohmlab/velocity.hpp"

namespace bohmlab {

enum class Interpolation { linear, nearest };

// Velocity snapshots on a shared grid at uniformly spaced times. Sampling
// interpolates bilinearly in space (periodic wrap) and linearly in time;
// a query touching any masked node reports failure instead of a value.
struct FieldStack {
  Grid grid{{AxisSpec{0.0, 1.0, 8}}};
  Representation representation = Representation::position;
  double t0 = 0.0;
  double dt = 0.0;  // snapshot spacing; 0 when the stack holds a single field
  std::vector<VelocityField> fields;

  static FieldStack from_fields(std::vector<VelocityField> fields);

  double t_final() const { return t0 + dt * static_cast<double>(fields.empty() ? 0 : fields.size() - 1); }
  bool has_std_error() const;

  // x points at dims() coordinates, v and se at dims() outputs. se may be
  // null; it is written only when the stack carries per-node errors.
  bool sample(const double* x, double t, Interpolation mode, double* v, double* se = nullptr) const;
};

struct IntegrateOptions {
  double dt_path = 0.0;  // 0: one macro step per stack interval; must divide the stack spacing
  Interpolation interpolation = Interpolation::linear;
  double cfl = 0.5;            // per-substep displacement cap, in cells
  int max_substeps = 64;       // CFL subdivision ceiling within one macro step
  double max_escape_fraction = 0.01;  // integrate() throws above this; 1.0 disables
  std::size_t record_every = 1;       // macro steps between stored samples
  int threads = 1;
};

struct TrajectorySet {
  std::vector<double> times;  // recorded times, first = stack start, last = stack end
  int dims = 1;
  std::size_t n_paths = 0;
  std::size_t n_records = 0;
  std::vector<double> positions;  // [path][record][axis]
  std::vector<std::uint8_t> escaped;
  std::vector<double> escape_time;     // last valid time for escaped paths, final time otherwise
  std::vector<double> propagated_std;  // [path][axis]; empty when the stack has no error bars
  double escaped_fraction = 0.0;

  const double* at(std::size_t path, std::size_t record) const {
    return positions.data() + (path * n_records + record) * static_cast<std::size_t>(dims);
  }
};

// Fourth-order Runge-Kutta transport of x0 (packed [path][axis]) through the
// stack's time span. Paths that hit a masked region freeze in place and are
// flagged; more than max_escape_fraction of them is an error.
TrajectorySet integrate(std::span<const double> x0, const FieldStack& stack, const IntegrateOptions& opt = {});

// Endpoint histogram of the surviving paths, normalized on the stack grid.
DensityField transport_density(std::span<const double> x0, const FieldStack& stack,
                               const IntegrateOptions& opt = {});

// Draws n positions from a (nonnegative, cellwise constant) density. 1D uses
// inverse-CDF sampling, 2D rejection against the cell maximum. Sample i is a
// pure function of (seed, stream_salt + i), so the output never depends on
// scheduling.
std::vector<double> sample_density(const DensityField& rho, std::size_t n, std::uint64_t seed,
                                   std::uint64_t stream_salt = 0x504f53u);

// Velocity fields of the given snapshots assembled into a stack, either in
// position or in momentum representation.
FieldStack analytic_field_stack(std::span<const WaveFunction> snapshots, const Hamiltonian& h,
                                Representation rep, const VelocityFieldOptions& opt = {});

}  // namespace bohmlab

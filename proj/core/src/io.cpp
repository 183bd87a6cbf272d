#include "bohmlab/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace bohmlab::io {

static_assert(std::endian::native == std::endian::little,
              "artifact formats are little-endian; big-endian hosts are unsupported");

namespace {

[[noreturn]] void fail(const std::filesystem::path& path, const char* what) {
  throw std::runtime_error(path.string() + ": " + what);
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(path, "cannot open for writing");
  return f;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(path, "cannot open for reading");
  return f;
}

template <typename T>
void put(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& f, const std::filesystem::path& path) {
  T v{};
  f.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!f) fail(path, "truncated file");
  return v;
}

void finish(std::ofstream& f, const std::filesystem::path& path) {
  f.flush();
  if (!f) fail(path, "write failed");
}

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

void write_wavefunction(const std::filesystem::path& path, const WaveFunction& psi) {
  validate(psi);
  if (psi.representation != Representation::position)
    throw std::invalid_argument("binary dumps store position-representation states");
  std::ofstream f = open_out(path);
  f.write("BWL1", 4);
  put(f, static_cast<std::uint32_t>(psi.grid.dims()));
  for (int a = 0; a < psi.grid.dims(); ++a) put(f, static_cast<std::uint32_t>(psi.grid.points(a)));
  for (int a = 0; a < psi.grid.dims(); ++a) {
    put(f, psi.grid.lo(a));
    put(f, psi.grid.hi(a));
  }
  put(f, psi.time);
  for (const cplx& z : psi.amplitudes) {
    put(f, z.real());
    put(f, z.imag());
  }
  finish(f, path);
}

WaveFunction read_wavefunction(const std::filesystem::path& path, double hbar, std::vector<double> mass) {
  std::ifstream f = open_in(path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "BWL1", 4) != 0) fail(path, "not a BWL1 snapshot");
  const auto dims = get<std::uint32_t>(f, path);
  if (dims < 1 || dims > 2) fail(path, "unsupported dimension count");
  std::vector<AxisSpec> axes(dims);
  for (auto& ax : axes) ax.points = get<std::uint32_t>(f, path);
  for (auto& ax : axes) {
    ax.lo = get<double>(f, path);
    ax.hi = get<double>(f, path);
  }
  WaveFunction psi;
  psi.grid = Grid(axes);
  psi.representation = Representation::position;
  psi.time = get<double>(f, path);
  psi.hbar = hbar;
  psi.mass = std::move(mass);
  psi.amplitudes.resize(psi.grid.size());
  for (cplx& z : psi.amplitudes) {
    const double re = get<double>(f, path);
    const double im = get<double>(f, path);
    z = cplx(re, im);
  }
  validate(psi);
  return psi;
}

namespace {

void write_coordinates(std::ofstream& f, const Grid& g, std::size_t flat) {
  const auto ij = g.unravel(flat);
  f << format_number(g.coordinate(0, ij[0]));
  if (g.dims() == 2) f << ',' << format_number(g.coordinate(1, ij[1]));
}

}  // namespace

void write_density_csv(const std::filesystem::path& path, const DensityField& rho) {
  std::ofstream f = open_out(path);
  f << (rho.grid.dims() == 1 ? "x,value\n" : "x,y,value\n");
  for (std::size_t i = 0; i < rho.values.size(); ++i) {
    write_coordinates(f, rho.grid, i);
    f << ',' << format_number(rho.values[i]) << '\n';
  }
  finish(f, path);
}

void write_field_csv(const std::filesystem::path& path, const VelocityField& field) {
  std::ofstream f = open_out(path);
  const int nd = field.dims;
  const bool se = field.has_std_error();
  f << (nd == 1 ? "x" : "x,y");
  f << (nd == 1 ? ",v" : ",vx,vy");
  if (se) f << (nd == 1 ? ",se" : ",sex,sey");
  f << ",mask\n";
  for (std::size_t i = 0; i < field.mask.size(); ++i) {
    write_coordinates(f, field.grid, i);
    for (int a = 0; a < nd; ++a) f << ',' << format_number(field.components[a][i]);
    if (se)
      for (int a = 0; a < nd; ++a) f << ',' << format_number(field.std_error[a][i]);
    f << ',' << static_cast<int>(field.mask[i]) << '\n';
  }
  finish(f, path);
}

void write_records_csv(const std::filesystem::path& path, std::span<const WeakMeasurementRecord> records) {
  std::ofstream f = open_out(path);
  f << "run_index,weak,strong,tau\n";
  for (const auto& r : records)
    f << r.run_index << ',' << format_number(r.weak_readout) << ',' << format_number(r.strong_readout)
      << ',' << format_number(r.tau) << '\n';
  finish(f, path);
}

void write_estimate_csv(const std::filesystem::path& path, const VelocityEstimate& est) {
  std::ofstream f = open_out(path);
  f << "center,v_hat,std_error,count,mask\n";
  for (std::size_t b = 0; b < est.binning.bins; ++b)
    f << format_number(est.bin_centers[b]) << ',' << format_number(est.v_hat[b]) << ','
      << format_number(est.std_error[b]) << ',' << est.counts[b] << ','
      << static_cast<int>(est.mask[b]) << '\n';
  finish(f, path);
}

void write_extrapolated_csv(const std::filesystem::path& path, const ExtrapolatedEstimate& est) {
  std::ofstream f = open_out(path);
  f << "center,v_hat,std_error,count,mask,tau_slope,inv_sigma2_slope\n";
  const VelocityEstimate& e = est.estimate;
  for (std::size_t b = 0; b < e.binning.bins; ++b)
    f << format_number(e.bin_centers[b]) << ',' << format_number(e.v_hat[b]) << ','
      << format_number(e.std_error[b]) << ',' << e.counts[b] << ',' << static_cast<int>(e.mask[b])
      << ',' << format_number(est.tau_slope[b]) << ',' << format_number(est.inv_sigma2_slope[b])
      << '\n';
  finish(f, path);
}

void write_paths_csv(const std::filesystem::path& path, const TrajectorySet& set, std::size_t max_paths) {
  std::ofstream f = open_out(path);
  f << (set.dims == 1 ? "path_id,t,x\n" : "path_id,t,x,y\n");
  const std::size_t limit = max_paths == 0 ? set.n_paths : std::min(max_paths, set.n_paths);
  for (std::size_t p = 0; p < limit; ++p) {
    for (std::size_t r = 0; r < set.n_records; ++r) {
      const double* xp = set.at(p, r);
      f << p << ',' << format_number(set.times[r]) << ',' << format_number(xp[0]);
      if (set.dims == 2) f << ',' << format_number(xp[1]);
      f << '\n';
    }
  }
  finish(f, path);
}

void write_paths_binary(const std::filesystem::path& path, const TrajectorySet& set) {
  std::ofstream f = open_out(path);
  f.write("BWP1", 4);
  put(f, static_cast<std::uint32_t>(set.dims));
  put(f, static_cast<std::uint64_t>(set.n_paths));
  put(f, static_cast<std::uint64_t>(set.n_records));
  for (double t : set.times) put(f, t);
  for (std::size_t p = 0; p < set.n_paths; ++p) {
    put(f, set.escaped[p]);
    put(f, set.escape_time[p]);
    const double* xp = set.at(p, 0);
    for (std::size_t k = 0; k < set.n_records * static_cast<std::size_t>(set.dims); ++k)
      put(f, static_cast<float>(xp[k]));
  }
  finish(f, path);
}

TrajectorySet read_paths_binary(const std::filesystem::path& path) {
  std::ifstream f = open_in(path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "BWP1", 4) != 0) fail(path, "not a BWP1 path bundle");
  TrajectorySet set;
  set.dims = static_cast<int>(get<std::uint32_t>(f, path));
  if (set.dims < 1 || set.dims > 2) fail(path, "unsupported dimension count");
  set.n_paths = get<std::uint64_t>(f, path);
  set.n_records = get<std::uint64_t>(f, path);
  set.times.resize(set.n_records);
  for (double& t : set.times) t = get<double>(f, path);
  set.positions.resize(set.n_paths * set.n_records * static_cast<std::size_t>(set.dims));
  set.escaped.resize(set.n_paths);
  set.escape_time.resize(set.n_paths);
  std::size_t escapes = 0;
  for (std::size_t p = 0; p < set.n_paths; ++p) {
    set.escaped[p] = get<std::uint8_t>(f, path);
    escapes += set.escaped[p];
    set.escape_time[p] = get<double>(f, path);
    for (std::size_t k = 0; k < set.n_records * static_cast<std::size_t>(set.dims); ++k)
      set.positions[(p * set.n_records) * static_cast<std::size_t>(set.dims) + k] =
          static_cast<double>(get<float>(f, path));
  }
  set.escaped_fraction =
      set.n_paths == 0 ? 0.0 : static_cast<double>(escapes) / static_cast<double>(set.n_paths);
  return set;
}

void write_hseries_csv(const std::filesystem::path& path, const HFunctionSeries& series) {
  std::ofstream f = open_out(path);
  f << "t,H\n";
  for (std::size_t k = 0; k < series.times.size(); ++k)
    f << format_number(series.times[k]) << ',' << format_number(series.h_values[k]) << '\n';
  finish(f, path);
}

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream f = open_in(path);
  std::uint64_t hash = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (f) {
    f.read(buf, sizeof buf);
    const std::streamsize n = f.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ull;
    }
  }
  return hash;
}

}  // namespace bohmlab::io

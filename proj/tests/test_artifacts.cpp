// Artifact formats: byte-stable text, round-trip binary, checksums.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bohmlab/io.hpp"
#include "bohmlab/states.hpp"
#include "bohmlab/velocity.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace bohmlab;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "bohmlab_artifact_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(f, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("numbers render with twelve significant digits and no trailing zeros") {
  CHECK(io::format_number(0.5) == "0.5");
  CHECK(io::format_number(2.0) == "2");
  CHECK(io::format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(io::format_number(1e-10) == "1e-10");
  CHECK(io::format_number(123456789.25) == "123456789.25");
  CHECK(io::format_number(-1.5) == "-1.5");
  CHECK(io::format_number(0.0) == "0");
}

TEST_CASE("file checksums match the published fnv-1a test vectors") {
  const fs::path d = scratch();
  spit(d / "empty.bin", "");
  spit(d / "a.bin", "a");
  spit(d / "foobar.bin", "foobar");
  CHECK(io::fnv1a64_file(d / "empty.bin") == 0xcbf29ce484222325ull);
  CHECK(io::fnv1a64_file(d / "a.bin") == 0xaf63dc4c8601ec8cull);
  CHECK(io::fnv1a64_file(d / "foobar.bin") == 0x85944171f73967e8ull);
  CHECK_THROWS_AS(io::fnv1a64_file(d / "does_not_exist.bin"), std::runtime_error);
}

TEST_CASE("wavefunction snapshots survive a round trip bit for bit") {
  const fs::path d = scratch();
  Grid g({AxisSpec{-8.0, 8.0, 16}});
  states::GaussianSpec spec;
  spec.center = {0.75};
  spec.sigma = {1.25};
  spec.kick = {0.5};
  WaveFunction psi = states::gaussian(g, spec, 0.7, {1.3});
  psi.time = 0.375;

  const fs::path file = d / "psi.bwl";
  io::write_wavefunction(file, psi);
  const WaveFunction back = io::read_wavefunction(file, 0.7, {1.3});

  CHECK(back.grid.dims() == 1);
  CHECK(back.grid.lo(0) == psi.grid.lo(0));
  CHECK(back.grid.hi(0) == psi.grid.hi(0));
  CHECK(back.grid.points(0) == psi.grid.points(0));
  CHECK(back.time == psi.time);
  CHECK(back.hbar == 0.7);
  CHECK(back.mass == std::vector<double>{1.3});
  REQUIRE(back.amplitudes.size() == psi.amplitudes.size());
  for (std::size_t i = 0; i < psi.amplitudes.size(); ++i) {
    CHECK(back.amplitudes[i].real() == psi.amplitudes[i].real());
    CHECK(back.amplitudes[i].imag() == psi.amplitudes[i].imag());
  }

  // Rewriting the read-back state reproduces the file byte for byte.
  const fs::path file2 = d / "psi2.bwl";
  io::write_wavefunction(file2, back);
  CHECK(io::fnv1a64_file(file) == io::fnv1a64_file(file2));
}

TEST_CASE("two-axis snapshots round trip too") {
  const fs::path d = scratch();
  Grid g({AxisSpec{-4.0, 4.0, 8}, AxisSpec{0.0, 16.0, 8}});
  states::GaussianSpec spec;
  spec.center = {0.0, 8.0};
  spec.sigma = {1.0, 2.0};
  spec.kick = {0.25, -0.5};
  WaveFunction psi = states::gaussian(g, spec, 1.0, {1.0, 2.0});
  psi.time = 1.0;

  const fs::path file = d / "psi2d.bwl";
  io::write_wavefunction(file, psi);
  const WaveFunction back = io::read_wavefunction(file, 1.0, {1.0, 2.0});
  CHECK(back.grid.dims() == 2);
  CHECK(back.grid.points(1) == 8);
  for (std::size_t i = 0; i < psi.amplitudes.size(); ++i) {
    CHECK(back.amplitudes[i].real() == psi.amplitudes[i].real());
    CHECK(back.amplitudes[i].imag() == psi.amplitudes[i].imag());
  }
}

TEST_CASE("corrupt snapshot files are refused") {
  const fs::path d = scratch();
  spit(d / "bad_magic.bwl", "NOPE and some trailing junk");
  CHECK_THROWS_AS(io::read_wavefunction(d / "bad_magic.bwl", 1.0, {1.0}), std::runtime_error);
  spit(d / "truncated.bwl", std::string("BWL1") + std::string(6, '\0'));
  CHECK_THROWS_AS(io::read_wavefunction(d / "truncated.bwl", 1.0, {1.0}), std::runtime_error);
}

TEST_CASE("path bundles round trip through the compact binary format") {
  TrajectorySet set;
  set.dims = 2;
  set.n_paths = 3;
  set.n_records = 4;
  set.times = {0.0, 0.25, 0.5, 0.75};
  for (std::size_t p = 0; p < set.n_paths; ++p)
    for (std::size_t r = 0; r < set.n_records; ++r)
      for (int a = 0; a < 2; ++a)
        set.positions.push_back(static_cast<double>(p) * 10.0 + static_cast<double>(r) +
                                0.5 * a + 1.0 / 3.0);
  set.escaped = {0, 1, 0};
  set.escape_time = {0.75, 0.5, 0.75};
  set.escaped_fraction = 1.0 / 3.0;

  const fs::path file = scratch() / "paths.bwp";
  io::write_paths_binary(file, set);
  const TrajectorySet back = io::read_paths_binary(file);

  CHECK(back.dims == 2);
  CHECK(back.n_paths == 3);
  CHECK(back.n_records == 4);
  CHECK(back.times == set.times);
  CHECK(back.escaped == set.escaped);
  CHECK(back.escape_time == set.escape_time);
  CHECK(back.escaped_fraction == 1.0 / 3.0);
  CHECK(back.propagated_std.empty());
  // Positions are stored as f32, so expect single precision, not identity.
  REQUIRE(back.positions.size() == set.positions.size());
  for (std::size_t i = 0; i < set.positions.size(); ++i)
    CHECK(back.positions[i] == doctest::Approx(set.positions[i]).epsilon(1e-6));

  spit(scratch() / "bad.bwp", "WHAT");
  CHECK_THROWS_AS(io::read_paths_binary(scratch() / "bad.bwp"), std::runtime_error);
}

TEST_CASE("csv artifacts carry the documented headers and row counts") {
  const fs::path d = scratch();
  Grid g({AxisSpec{-2.0, 2.0, 8}});

  DensityField rho;
  rho.grid = g;
  rho.values.assign(8, 0.25);
  io::write_density_csv(d / "rho.csv", rho);
  auto rho_lines = lines_of(d / "rho.csv");
  REQUIRE(rho_lines.size() == 9);
  CHECK(rho_lines[0] == "x,value");
  CHECK(rho_lines[1] == "-2,0.25");

  VelocityField field;
  field.grid = g;
  field.dims = 1;
  field.components[0].assign(8, 1.5);
  field.mask.assign(8, 0);
  field.mask[7] = 1;
  io::write_field_csv(d / "field.csv", field);
  auto field_lines = lines_of(d / "field.csv");
  REQUIRE(field_lines.size() == 9);
  CHECK(field_lines[0] == "x,v,mask");
  CHECK(field_lines[1] == "-2,1.5,0");
  CHECK(field_lines[8] == "1.5,1.5,1");

  field.provenance = VelocityField::Provenance::estimated;
  field.std_error[0].assign(8, 0.125);
  io::write_field_csv(d / "field_se.csv", field);
  CHECK(lines_of(d / "field_se.csv")[0] == "x,v,se,mask");

  std::vector<WeakMeasurementRecord> records(2);
  records[0] = {0, 0.5, 1.5, 0.1};
  records[1] = {1, -0.25, 2.0, 0.1};
  io::write_records_csv(d / "records.csv", records);
  auto rec_lines = lines_of(d / "records.csv");
  REQUIRE(rec_lines.size() == 3);
  CHECK(rec_lines[0] == "run_index,weak,strong,tau");
  CHECK(rec_lines[1] == "0,0.5,1.5,0.1");
  CHECK(rec_lines[2] == "1,-0.25,2,0.1");

  VelocityEstimate est;
  est.binning = Binning{-2.0, 1.0, 4};
  est.bin_centers = {-1.5, -0.5, 0.5, 1.5};
  est.v_hat = {0.5, 0.25, 0.0, 0.0};
  est.std_error = {0.1, 0.2, 0.0, 0.0};
  est.counts = {10, 20, 3, 0};
  est.mask = {0, 0, 1, 1};
  io::write_estimate_csv(d / "est.csv", est);
  auto est_lines = lines_of(d / "est.csv");
  REQUIRE(est_lines.size() == 5);
  CHECK(est_lines[0] == "center,v_hat,std_error,count,mask");
  CHECK(est_lines[1] == "-1.5,0.5,0.1,10,0");
  CHECK(est_lines[4] == "1.5,0,0,0,1");

  ExtrapolatedEstimate ext;
  ext.estimate = est;
  ext.tau_slope = {0.01, 0.02, 0.0, 0.0};
  ext.inv_sigma2_slope = {1.0, 2.0, 0.0, 0.0};
  io::write_extrapolated_csv(d / "ext.csv", ext);
  auto ext_lines = lines_of(d / "ext.csv");
  CHECK(ext_lines[0] == "center,v_hat,std_error,count,mask,tau_slope,inv_sigma2_slope");
  CHECK(ext_lines[1] == "-1.5,0.5,0.1,10,0,0.01,1");

  HFunctionSeries series;
  series.times = {0.0, 0.5};
  series.h_values = {1.0 / 3.0, 0.25};
  io::write_hseries_csv(d / "h.csv", series);
  auto h_lines = lines_of(d / "h.csv");
  REQUIRE(h_lines.size() == 3);
  CHECK(h_lines[0] == "t,H");
  CHECK(h_lines[1] == "0,0.333333333333");
}

TEST_CASE("path tables honor the export cap") {
  TrajectorySet set;
  set.dims = 1;
  set.n_paths = 3;
  set.n_records = 2;
  set.times = {0.0, 1.0};
  set.positions = {0.0, 0.1, 1.0, 1.1, 2.0, 2.1};
  set.escaped = {0, 0, 0};
  set.escape_time = {1.0, 1.0, 1.0};

  const fs::path d = scratch();
  io::write_paths_csv(d / "paths_all.csv", set);
  CHECK(lines_of(d / "paths_all.csv").size() == 1 + 3 * 2);
  io::write_paths_csv(d / "paths_capped.csv", set, 2);
  auto capped = lines_of(d / "paths_capped.csv");
  REQUIRE(capped.size() == 1 + 2 * 2);
  CHECK(capped[0] == "path_id,t,x");
  CHECK(capped[1] == "0,0,0");
  CHECK(capped[4] == "1,1,1.1");

  // Caps above the bundle size are harmless.
  io::write_paths_csv(d / "paths_over.csv", set, 99);
  CHECK(lines_of(d / "paths_over.csv").size() == 1 + 3 * 2);
}

TEST_CASE("rewriting the same artifact is byte-identical") {
  const fs::path d = scratch();
  VelocityEstimate est;
  est.binning = Binning{0.0, 0.5, 4};
  est.bin_centers = {0.25, 0.75, 1.25, 1.75};
  est.v_hat = {1.0 / 3.0, 2.0 / 3.0, 1.0, 4.0 / 3.0};
  est.std_error = {0.1, 0.1, 0.1, 0.1};
  est.counts = {5, 5, 5, 5};
  est.mask = {0, 0, 0, 0};
  io::write_estimate_csv(d / "rw1.csv", est);
  io::write_estimate_csv(d / "rw2.csv", est);
  CHECK(io::fnv1a64_file(d / "rw1.csv") == io::fnv1a64_file(d / "rw2.csv"));
}

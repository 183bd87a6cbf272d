#include "bohmlab/potential.hpp"

#include <cmath>
#include <stdexcept>

#include "bohmlab/spectral.hpp"

namespace bohmlab {

Potential Potential::free_space() { return Potential{}; }

Potential Potential::harmonic(double omega) {
  if (!(omega >= 0)) throw std::invalid_argument("potential: harmonic omega must be >= 0");
  Potential p;
  p.kind_ = Kind::harmonic;
  p.omega_ = omega;
  return p;
}

Potential Potential::quartic(double lambda, double omega) {
  if (!(lambda > 0)) throw std::invalid_argument("potential: quartic lambda must be positive");
  if (omega < 0) throw std::invalid_argument("potential: quartic omega must be >= 0");
  Potential p;
  p.kind_ = Kind::quartic;
  p.lambda_ = lambda;
  p.omega_ = omega;
  return p;
}

Potential Potential::double_slit(const SlitGeometry& slits) {
  if (!(slits.height > 0) || !(slits.separation > 0) || !(slits.width > 0) || !(slits.thickness > 0))
    throw std::invalid_argument("potential: slit geometry values must be positive");
  Potential p;
  p.kind_ = Kind::double_slit;
  p.slits_ = slits;
  return p;
}

Potential Potential::tabulated(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("potential: empty table");
  Potential p;
  p.kind_ = Kind::tabulated;
  p.table_ = std::move(values);
  return p;
}

namespace {

void check_mass(const Grid& grid, std::span<const double> mass) {
  if (mass.size() != static_cast<std::size_t>(grid.dims()))
    throw std::invalid_argument("potential: one mass per axis required");
}

}  // namespace

std::vector<double> Potential::tabulate(const Grid& grid, std::span<const double> mass) const {
  check_mass(grid, mass);
  std::vector<double> v(grid.size(), 0.0);
  switch (kind_) {
    case Kind::free_space:
      break;
    case Kind::harmonic:
    case Kind::quartic: {
      const std::size_t n1 = grid.dims() == 2 ? grid.points(1) : 1;
      for (std::size_t flat = 0; flat < grid.size(); ++flat) {
        double val = 0.0;
        for (int a = 0; a < grid.dims(); ++a) {
          const std::size_t i = a == 0 ? flat / n1 : flat % n1;
          const double x = grid.coordinate(a, i);
          val += 0.5 * mass[static_cast<std::size_t>(a)] * omega_ * omega_ * x * x;
          if (kind_ == Kind::quartic) val += lambda_ * x * x * x * x;
        }
        v[flat] = val;
      }
      break;
    }
    case Kind::double_slit: {
      if (grid.dims() != 2) throw std::invalid_argument("potential: double_slit barrier needs a 2D grid");
      const std::size_t n1 = grid.points(1);
      for (std::size_t flat = 0; flat < grid.size(); ++flat) {
        const double x = grid.coordinate(0, flat / n1);
        const double y = grid.coordinate(1, flat % n1);
        const bool in_slab = std::abs(x) <= 0.5 * slits_.thickness;
        const bool in_opening = std::abs(std::abs(y) - 0.5 * slits_.separation) <= 0.5 * slits_.width;
        v[flat] = (in_slab && !in_opening) ? slits_.height : 0.0;
      }
      break;
    }
    case Kind::tabulated:
      if (table_.size() != grid.size())
        throw std::invalid_argument("potential: grid mismatch, table has wrong size");
      v = table_;
      break;
  }
  return v;
}

std::vector<double> Potential::tabulate_gradient(const Grid& grid, int axis, std::span<const double> mass) const {
  check_mass(grid, mass);
  if (axis < 0 || axis >= grid.dims()) throw std::invalid_argument("potential: gradient axis out of range");
  std::vector<double> g(grid.size(), 0.0);
  switch (kind_) {
    case Kind::free_space:
      break;
    case Kind::harmonic:
    case Kind::quartic: {
      const std::size_t n1 = grid.dims() == 2 ? grid.points(1) : 1;
      const double m = mass[static_cast<std::size_t>(axis)];
      for (std::size_t flat = 0; flat < grid.size(); ++flat) {
        const std::size_t i = axis == 0 ? flat / n1 : flat % n1;
        const double x = grid.coordinate(axis, i);
        double val = m * omega_ * omega_ * x;
        if (kind_ == Kind::quartic) val += 4.0 * lambda_ * x * x * x;
        g[flat] = val;
      }
      break;
    }
    case Kind::double_slit:
      throw std::invalid_argument("potential: slit barrier gradient is not defined");
    case Kind::tabulated: {
      if (table_.size() != grid.size())
        throw std::invalid_argument("potential: grid mismatch, table has wrong size");
      g = spectral::derivative(grid, std::span<const double>(table_), axis);
      break;
    }
  }
  return g;
}

double Potential::max_abs(const Grid& grid, std::span<const double> mass) const {
  const auto v = tabulate(grid, mass);
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

void validate(const Hamiltonian& h, const Grid& grid) {
  if (h.mass.size() != static_cast<std::size_t>(grid.dims()))
    throw std::invalid_argument("hamiltonian: one mass per axis required");
  for (double m : h.mass)
    if (!(m > 0)) throw std::invalid_argument("hamiltonian: mass must be positive");
  if (!(h.hbar > 0)) throw std::invalid_argument("hamiltonian: hbar must be positive");
}

}  // namespace bohmlab

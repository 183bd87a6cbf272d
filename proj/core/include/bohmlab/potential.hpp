#pragma once

#include <span>
#include <vector>

#include "bohmlab/grid.hpp"

namespace bohmlab {

// Scalar potential families. Mass enters the harmonic/quartic stiffness
// (V = sum_ax [lambda x^4 + m omega^2 x^2 / 2]), so evaluation takes the
// per-axis masses of the state being propagated.
class Potential {
 public:
  enum class Kind { free_space, harmonic, quartic, double_slit, tabulated };

  // Barrier slab along axis 0 with two openings in axis 1 (2D only):
  // V = height for |x| <= thickness/2 unless ||y| - separation/2| <= width/2.
  struct SlitGeometry {
    double height = 0.0;
    double separation = 0.0;
    double width = 0.0;
    double thickness = 0.0;
  };

  static Potential free_space();
  static Potential harmonic(double omega);
  static Potential quartic(double lambda, double omega = 0.0);
  static Potential double_slit(const SlitGeometry& slits);
  static Potential tabulated(std::vector<double> values);

  Kind kind() const { return kind_; }
  double omega() const { return omega_; }
  double lambda() const { return lambda_; }
  const SlitGeometry& slits() const { return slits_; }

  // True for potentials at most quadratic in x (free, harmonic).
  bool at_most_quadratic() const { return kind_ == Kind::free_space || kind_ == Kind::harmonic; }

  // V on the grid. Tabulated values must match the grid size ("grid mismatch").
  std::vector<double> tabulate(const Grid& grid, std::span<const double> mass) const;
  // dV/dx_axis on the grid: analytic for the named families (the slit barrier
  // has no meaningful gradient and throws), spectral for tabulated values.
  std::vector<double> tabulate_gradient(const Grid& grid, int axis, std::span<const double> mass) const;
  double max_abs(const Grid& grid, std::span<const double> mass) const;

 private:
  Kind kind_ = Kind::free_space;
  double omega_ = 0.0;
  double lambda_ = 0.0;
  SlitGeometry slits_{};
  std::vector<double> table_;
};

struct Hamiltonian {
  std::vector<double> mass;  // per axis, > 0
  double hbar = 1.0;
  Potential potential = Potential::free_space();
};

void validate(const Hamiltonian& h, const Grid& grid);

}  // namespace bohmlab

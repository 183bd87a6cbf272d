#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace bohmlab {

// Basis tag for grid-sampled objects. A momentum grid is the DFT dual of a
// position grid: p in [-pi*hbar/dx, +pi*hbar/dx), spacing dp = 2*pi*hbar/L.
enum class Representation { position, momentum };

const char* to_string(Representation r);

struct AxisSpec {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t points = 0;
};

// Uniform periodic grid, 1 or 2 axes. Point counts are powers of two, >= 8,
// so DFT round trips are exact to rounding. Row-major flat storage:
// flat = i0 * points(1) + i1.
class Grid {
 public:
  Grid() = default;
  explicit Grid(const std::vector<AxisSpec>& axes);

  int dims() const { return dims_; }
  std::size_t points(int axis) const { return axes_[check(axis)].points; }
  std::size_t size() const { return size_; }

  double lo(int axis) const { return axes_[check(axis)].lo; }
  double hi(int axis) const { return axes_[check(axis)].hi; }
  double length(int axis) const { return axes_[axis].hi - axes_[check(axis)].lo; }
  double spacing(int axis) const { return length(axis) / static_cast<double>(points(axis)); }
  // Volume of one cell (dx in 1D, dx*dy in 2D).
  double cell_volume() const;
  double min_spacing() const;

  double coordinate(int axis, std::size_t i) const { return lo(axis) + spacing(axis) * static_cast<double>(i); }
  std::size_t index(std::size_t i0, std::size_t i1 = 0) const {
    return dims_ == 1 ? i0 : i0 * axes_[1].points + i1;
  }
  std::array<std::size_t, 2> unravel(std::size_t flat) const {
    if (dims_ == 1) return {flat, 0};
    return {flat / axes_[1].points, flat % axes_[1].points};
  }
  // Periodic index wrap.
  std::size_t wrap(int axis, std::ptrdiff_t i) const {
    const auto n = static_cast<std::ptrdiff_t>(points(axis));
    i %= n;
    return static_cast<std::size_t>(i < 0 ? i + n : i);
  }
  // Cell containing physical coordinate x (periodic reduction).
  std::size_t cell(int axis, double x) const;
  // Map x into [lo, hi).
  double reduce(int axis, double x) const;

  // DFT-dual grid for hbar-scaled momenta.
  Grid momentum_dual(double hbar) const;

  bool operator==(const Grid& other) const;
  bool operator!=(const Grid& other) const { return !(*this == other); }

 private:
  int check(int axis) const;
  int dims_ = 0;
  std::size_t size_ = 0;
  std::array<AxisSpec, 2> axes_{};
};

bool is_power_of_two(std::size_t n);

}  // namespace bohmlab

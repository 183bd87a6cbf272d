#include "bohmlab/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bohmlab {

const char* to_string(Representation r) {
  return r == Representation::position ? "position" : "momentum";
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

Grid::Grid(const std::vector<AxisSpec>& axes) {
  if (axes.empty() || axes.size() > 2)
    throw std::invalid_argument("grid: 1 or 2 axes required, got " + std::to_string(axes.size()));
  dims_ = static_cast<int>(axes.size());
  size_ = 1;
  for (int a = 0; a < dims_; ++a) {
    const AxisSpec& ax = axes[static_cast<std::size_t>(a)];
    if (!(ax.hi > ax.lo))
      throw std::invalid_argument("grid: axis " + std::to_string(a) + " needs hi > lo");
    if (!std::isfinite(ax.lo) || !std::isfinite(ax.hi))
      throw std::invalid_argument("grid: axis extents must be finite");
    if (ax.points < 8 || !is_power_of_two(ax.points))
      throw std::invalid_argument("grid: axis " + std::to_string(a) +
                                  " needs a power-of-two point count >= 8, got " +
                                  std::to_string(ax.points));
    axes_[static_cast<std::size_t>(a)] = ax;
    size_ *= ax.points;
  }
}

int Grid::check(int axis) const {
  if (axis < 0 || axis >= dims_)
    throw std::invalid_argument("grid: axis " + std::to_string(axis) + " out of range");
  return axis;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int a = 0; a < dims_; ++a) v *= spacing(a);
  return v;
}

double Grid::min_spacing() const {
  double s = spacing(0);
  for (int a = 1; a < dims_; ++a) s = std::min(s, spacing(a));
  return s;
}

double Grid::reduce(int axis, double x) const {
  const double l = length(check(axis));
  double y = std::fmod(x - lo(axis), l);
  if (y < 0) y += l;
  // fmod can land exactly on l after the += when x-lo is a tiny negative.
  if (y >= l) y -= l;
  return lo(axis) + y;
}

std::size_t Grid::cell(int axis, double x) const {
  const double y = reduce(axis, x);
  auto i = static_cast<std::size_t>((y - lo(axis)) / spacing(axis));
  return i >= points(axis) ? points(axis) - 1 : i;
}

Grid Grid::momentum_dual(double hbar) const {
  if (hbar <= 0) throw std::invalid_argument("grid: hbar must be positive");
  std::vector<AxisSpec> axes;
  for (int a = 0; a < dims_; ++a) {
    const double pmax = std::numbers::pi * hbar / spacing(a);
    axes.push_back({-pmax, pmax, points(a)});
  }
  return Grid(axes);
}

bool Grid::operator==(const Grid& other) const {
  if (dims_ != other.dims_) return false;
  for (int a = 0; a < dims_; ++a) {
    if (axes_[static_cast<std::size_t>(a)].points != other.axes_[static_cast<std::size_t>(a)].points) return false;
    if (axes_[static_cast<std::size_t>(a)].lo != other.axes_[static_cast<std::size_t>(a)].lo) return false;
    if (axes_[static_cast<std::size_t>(a)].hi != other.axes_[static_cast<std::size_t>(a)].hi) return false;
  }
  return true;
}

}  // namespace bohmlab

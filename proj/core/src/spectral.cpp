#include "bohmlab/spectral.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>

namespace bohmlab::spectral {

namespace {

// Plan cache. FFTW planning is not thread safe; fftw_execute_dft on distinct
// buffers is. FFTW_ESTIMATE keeps plan selection deterministic and
// FFTW_UNALIGNED removes the alignment contract so plans work on any buffer.
class PlanCache {
 public:
  static fftw_plan get(std::size_t n0, std::size_t n1, int sign) {
    static PlanCache cache;
    std::scoped_lock lock(cache.mutex_);
    const Key key{n0, n1, sign};
    auto it = cache.plans_.find(key);
    if (it != cache.plans_.end()) return it->second;

    std::vector<cplx> a(n0 * std::max<std::size_t>(n1, 1));
    std::vector<cplx> b(a.size());
    auto* in = reinterpret_cast<fftw_complex*>(a.data());
    auto* out = reinterpret_cast<fftw_complex*>(b.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = n1 == 0
        ? fftw_plan_dft_1d(static_cast<int>(n0), in, out, sign, flags)
        : fftw_plan_dft_2d(static_cast<int>(n0), static_cast<int>(n1), in, out, sign, flags);
    if (!plan) throw std::runtime_error("spectral: fftw plan creation failed");
    cache.plans_.emplace(key, plan);
    return plan;
  }

 private:
  using Key = std::tuple<std::size_t, std::size_t, int>;
  std::mutex mutex_;
  std::map<Key, fftw_plan> plans_;
};

void execute(const Grid& grid, const cplx* in, cplx* out, int sign) {
  if (in == out) throw std::invalid_argument("spectral: in-place transform not supported");
  const std::size_t n0 = grid.points(0);
  const std::size_t n1 = grid.dims() == 2 ? grid.points(1) : 0;
  fftw_plan plan = PlanCache::get(n0, n1, sign);
  fftw_execute_dft(plan,
                   reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

}  // namespace

void dft_forward(const Grid& grid, const cplx* in, cplx* out) { execute(grid, in, out, FFTW_FORWARD); }
void dft_inverse(const Grid& grid, const cplx* in, cplx* out) { execute(grid, in, out, FFTW_BACKWARD); }

double wavenumber(const Grid& grid, int axis, std::size_t j) {
  const auto n = grid.points(axis);
  const auto m = j < n / 2 ? static_cast<double>(j)
                           : static_cast<double>(j) - static_cast<double>(n);
  return 2.0 * std::numbers::pi * m / grid.length(axis);
}

std::vector<double> wavenumbers(const Grid& grid, int axis) {
  std::vector<double> k(grid.points(axis));
  for (std::size_t j = 0; j < k.size(); ++j) k[j] = wavenumber(grid, axis, j);
  return k;
}

std::vector<cplx> derivative(const Grid& grid, std::span<const cplx> f, int axis) {
  if (f.size() != grid.size()) throw std::invalid_argument("spectral: field size does not match grid");
  std::vector<cplx> hat(f.size());
  dft_forward(grid, f.data(), hat.data());

  const double inv_n = 1.0 / static_cast<double>(grid.size());
  const std::size_t n0 = grid.points(0);
  const std::size_t n1 = grid.dims() == 2 ? grid.points(1) : 1;
  const std::size_t nyq0 = n0 / 2;
  const std::size_t nyq1 = grid.dims() == 2 ? grid.points(1) / 2 : static_cast<std::size_t>(-1);
  for (std::size_t j0 = 0; j0 < n0; ++j0) {
    for (std::size_t j1 = 0; j1 < n1; ++j1) {
      const std::size_t flat = j0 * n1 + j1;
      const std::size_t j = axis == 0 ? j0 : j1;
      const bool nyquist = axis == 0 ? j0 == nyq0 : j1 == nyq1;
      const double k = nyquist ? 0.0 : wavenumber(grid, axis, j);
      hat[flat] *= cplx(0.0, k) * inv_n;
    }
  }
  std::vector<cplx> out(f.size());
  dft_inverse(grid, hat.data(), out.data());
  return out;
}

std::vector<double> derivative(const Grid& grid, std::span<const double> f, int axis) {
  std::vector<cplx> fc(f.begin(), f.end());
  auto dc = derivative(grid, std::span<const cplx>(fc), axis);
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = dc[i].real();
  return out;
}

}  // namespace bohmlab::spectral

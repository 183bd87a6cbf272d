#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace bohmlab {

// Counter-addressed RNG: every Monte Carlo unit (measurement run, sampled
// trajectory) owns the stream keyed by (master_seed, stream_id), so results
// are independent of worker count and execution order. The generator is
// splitmix64, whose 64-bit avalanche also serves as the keying function.
// No std::*_distribution anywhere: their sequences are implementation
// defined, and byte-identical artifacts are part of the contract.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
      : state_(mix(mix(master_seed) ^ mix(stream_id ^ 0x9e3779b97f4a7c15ull))) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix_final(state_);
  }

  // Uniform on [0, 1), 53 bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; no cached spare, two uniforms per call.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  static std::uint64_t mix_final(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  static std::uint64_t mix(std::uint64_t z) { return mix_final(z + 0x9e3779b97f4a7c15ull); }

  std::uint64_t state_;
};

}  // namespace bohmlab

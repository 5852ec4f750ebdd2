#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <utility>

namespace drsf {

// Counter-based deterministic RNG. Every consumer derives its own stream from
// (seed, stream id, index), so parallel execution order never changes the draws.
//
// Generator: xoshiro256** seeded through splitmix64.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Stream ids; fixed constants so streams never collide across subsystems.
namespace stream {
inline constexpr std::uint64_t kTree = 0x01;
inline constexpr std::uint64_t kPatient = 0x02;
inline constexpr std::uint64_t kTreatment = 0x03;
inline constexpr std::uint64_t kKmeans = 0x04;
inline constexpr std::uint64_t kPermutation = 0x05;
inline constexpr std::uint64_t kCalibration = 0x06;
inline constexpr std::uint64_t kEvaluation = 0x07;
}  // namespace stream

class Rng {
 public:
  Rng() : Rng(0, 0, 0) {}

  Rng(std::uint64_t seed, std::uint64_t stream_id, std::uint64_t index) {
    std::uint64_t s = seed;
    s ^= 0x6a09e667f3bcc908ULL + splitmix64(s);
    s ^= stream_id * 0xd6e8feb86659fd93ULL;
    s ^= index * 0xa5cb3a1ed9e6e7ddULL;
    for (auto& word : state_) word = splitmix64(s);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on the open interval (0, 1); never returns 0 or 1, so log() and
  // inverse-CDF transforms are always finite.
  double uniform01() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Box-Muller; two uniforms per draw, no cached state.
  double normal() {
    const double u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Exponential with the given rate; rate 0 yields +infinity (no censoring).
  double exponential(double rate) {
    if (rate <= 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(uniform01()) / rate;
  }

  template <typename RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<std::uint64_t>(std::distance(first, last));
    for (std::uint64_t i = n; i > 1; --i) {
      const std::uint64_t j = uniform_int(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::array<std::uint64_t, 4> state_;
};

}  // namespace drsf

#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace flowldp {

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Seed for stream `index` derived from a master seed. Streams are a pure
// function of (seed, index), so replica results never depend on scheduling.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept;

// xoshiro256** engine. Satisfies UniformRandomBitGenerator.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

 private:
  std::uint64_t s_[4];
};

// Per-replica random source: uniform and standard normal variates.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t stream) : engine_(stream_seed(seed, stream)) {}

  double normal() { return normal_(engine_); }
  // Uniform on (0, 1].
  double uniform() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

 private:
  Xoshiro256 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace flowldp

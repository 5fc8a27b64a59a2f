#pragma once

#include <cstdint>
#include <random>

namespace slass {

// Named random streams. World randomness (measurement noise, true motion)
// must stay independent from filter randomness (particle init, jitter,
// resampling) and from control randomness, so that swapping one policy for
// another cannot perturb the simulated world.
enum class StreamRole : std::uint64_t {
  world = 1,
  filter = 2,
  control = 3,
};

// Deterministic seeded stream. Identical (seed, trial, role) triples produce
// identical draw sequences; distribution sampling is implemented explicitly
// (not via std:: distributions, whose output is implementation-defined) so
// sequences are reproducible everywhere. Single-owner: do not share one
// stream between logically independent consumers.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t trial, StreamRole role);

  std::uint64_t next_u64();

  // Uniform on [0, 1).
  double uniform();
  // Uniform on [lo, hi).
  double uniform(double lo, double hi);

  // Standard normal via Box-Muller (second value cached).
  double gaussian();
  double gaussian(double mean, double stddev);

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Factory matching the stream contract.
RandomStream rng_stream(std::uint64_t seed, std::uint64_t trial, StreamRole role);

}  // namespace slass

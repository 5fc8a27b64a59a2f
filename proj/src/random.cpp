#include "slass/random.hpp"

#include <cmath>
#include <numbers>

namespace slass {

namespace {

// splitmix64: standard 64-bit mixer used to derive well-separated engine
// seeds from (seed, trial, role) without correlated low bits.
std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_key(std::uint64_t seed, std::uint64_t trial,
                         StreamRole role) {
  std::uint64_t state = seed;
  std::uint64_t k = splitmix64(state);
  state = k ^ (trial * 0xd1342543de82ef95ULL);
  k = splitmix64(state);
  state = k ^ (static_cast<std::uint64_t>(role) * 0xaf251af3b0f025b5ULL);
  return splitmix64(state);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t trial,
                           StreamRole role)
    : engine_(derive_key(seed, trial, role)) {}

std::uint64_t RandomStream::next_u64() { return engine_(); }

double RandomStream::uniform() {
  // 53 random bits into [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RandomStream::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

double RandomStream::gaussian(double mean, double stddev) {
  return mean + stddev * gaussian();
}

RandomStream rng_stream(std::uint64_t seed, std::uint64_t trial,
                        StreamRole role) {
  return RandomStream(seed, trial, role);
}

}  // namespace slass

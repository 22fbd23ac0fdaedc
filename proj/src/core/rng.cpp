#include "reki/rng.hpp"

#include <cmath>
#include <numbers>

namespace reki::rng {

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t domain) { return mix(mix(seed) ^ mix(domain + 0x632BE59BD9B4E019ULL)); }

double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index, std::uint64_t counter) {
  std::uint64_t h = mix(seed);
  h = mix(h ^ stream);
  h = mix(h ^ (index * 0xD1B54A32D192ED03ULL));
  h = mix(h ^ counter);
  // 53 random bits, shifted off zero
  return (double(h >> 11) + 0.5) * 0x1.0p-53;
}

double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  const double u1 = uniform(seed, stream, index, 0);
  const double u2 = uniform(seed, stream, index, 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace reki::rng

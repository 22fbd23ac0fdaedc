#pragma once

#include <cstdint>

namespace reki::rng {

// Counter-based generator: every draw is a pure function of its key, so
// ensembles can be extended or evaluated out of order without reshuffling.

std::uint64_t mix(std::uint64_t x);

/// Derives an independent seed for a named purpose (noise, perturbations, ...).
std::uint64_t derive(std::uint64_t seed, std::uint64_t domain);

/// Uniform in (0, 1) keyed by (seed, stream, index, counter).
double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index, std::uint64_t counter = 0);

/// Standard normal keyed by (seed, stream, index), Box-Muller on two keyed uniforms.
double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

namespace domain {
inline constexpr std::uint64_t kTruth = 0x7472757468ULL;
inline constexpr std::uint64_t kNoise = 0x6e6f697365ULL;
inline constexpr std::uint64_t kPerturbation = 0x7065727475ULL;
inline constexpr std::uint64_t kEnsemble = 0x656e73656dULL;
}  // namespace domain

}  // namespace reki::rng

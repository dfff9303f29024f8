#pragma once

#include <cstdint>
#include <random>

namespace posctrl {

/// All randomness flows through a single engine type so that experiment
/// outputs are reproducible from one base seed.
using Rng = std::mt19937_64;

/// One step of the splitmix64 generator; advances `state` and returns the
/// next output. Used for seed derivation, not for sampling.
std::uint64_t splitmix64_next(std::uint64_t& state);

/// Deterministically derives an independent stream seed from a base seed.
/// Distinct `stream` values give decorrelated seeds; the mapping is fixed
/// so that recorded experiments can be replayed bit-for-bit.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

/// Uniform double in [lo, hi). Implemented from raw engine output (53-bit
/// mantissa path) instead of std::uniform_real_distribution so results do
/// not depend on the standard-library implementation.
double uniform_real(Rng& rng, double lo, double hi);

/// Uniform integer in the inclusive range [lo, hi], via rejection sampling
/// (unbiased, implementation-independent).
int uniform_int(Rng& rng, int lo, int hi);

}  // namespace posctrl

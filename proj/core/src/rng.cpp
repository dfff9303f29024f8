#include "posctrl/rng.hpp"

#include <stdexcept>

namespace posctrl {

std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // Hash-combine the base with the stream index; a single splitmix64 step
  // decorrelates nearby (base, stream) pairs.
  std::uint64_t state = base ^ (0xD1B54A32D192ED03ULL * (stream + 1));
  return splitmix64_next(state);
}

double uniform_real(Rng& rng, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("uniform_real: lo > hi");
  // Top 53 bits -> uniform in [0, 1) with full double resolution.
  const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + unit * (hi - lo);
}

int uniform_int(Rng& rng, int lo, int hi) {
  if (lo > hi) throw std::invalid_argument("uniform_int: lo > hi");
  const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
  // Rejection sampling: accept only draws below the largest multiple of
  // `span`, which removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % span + 1) % span;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw > limit);
  return lo + static_cast<int>(draw % span);
}

}  // namespace posctrl

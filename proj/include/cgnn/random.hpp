#pragma once

#include <cstdint>
#include <random>

namespace cgnn {

using Rng = std::mt19937_64;

/// Independent generator for (seed, stream). Each consumer of randomness
/// gets its own stream so that changing one knob does not shift the draws
/// of unrelated components.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x6367u};
  return Rng(seq);
}

}  // namespace cgnn

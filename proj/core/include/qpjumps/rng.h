#pragma once

#include <cstdint>
#include <random>

namespace qpj {

// Independent generator for (seed, stream). Simulation uses stream 0 for the
// chain and stream 1 for measurement noise; bootstrap resample b uses stream b.
inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace qpj

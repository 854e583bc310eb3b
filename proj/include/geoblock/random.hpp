#pragma once

// Portable uniform variates. std::uniform_real_distribution is
// implementation-defined, so reports would differ between standard libraries.

#include <cstdint>
#include <random>

namespace geoblock {

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace geoblock

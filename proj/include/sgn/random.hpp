#pragma once

#include <cstdint>
#include <random>

namespace sgn {

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace sgn

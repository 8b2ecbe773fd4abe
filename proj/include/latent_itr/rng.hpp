#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace litr {

using Rng = std::mt19937_64;

// Independent named sub-stream of a top-level seed ("init", "shuffle",
// "simulate", ...). `index` separates counters within one stream, e.g. subjects.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
  return Rng(derive_seed(seed, stream, index));
}

}  // namespace litr

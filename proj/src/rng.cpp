#include "latent_itr/rng.hpp"

namespace litr {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index) {
  // FNV-1a over the stream name, then splitmix64 finalisation.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : stream) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ h) ^ index);
}

}  // namespace litr

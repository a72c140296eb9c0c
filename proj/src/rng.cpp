#include "ssrd/rng.hpp"

namespace ssrd {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

Engine make_engine(std::uint64_t seed, std::uint64_t index, Stream stream) noexcept {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ (index * 0xD6E8FEB86659FD93ULL));
  h = splitmix64(h ^ static_cast<std::uint64_t>(stream));
  return Engine(h);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed) + 0xA24BAED4963EE407ULL * (index + 1));
}

}  // namespace ssrd

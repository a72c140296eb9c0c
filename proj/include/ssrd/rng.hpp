#pragma once

#include <cstdint>
#include <random>

namespace ssrd {

using Engine = std::mt19937_64;

/// Independent draw families. Each (seed, path, stream) triple owns its own
/// engine so that, e.g., jump counts do not shift when the spillover draw
/// consumes a different number of variates.
enum class Stream : std::uint64_t {
  Diffusion = 1,
  JumpCount = 2,
  JumpSize = 3,
  SpilloverParams = 4,
  Policy = 5,
  Scenario = 6,
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Deterministic engine for one (seed, index, stream) combination.
Engine make_engine(std::uint64_t seed, std::uint64_t index, Stream stream) noexcept;

/// Seed for a derived run (replicate r of a sweep, episode e, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept;

}  // namespace ssrd

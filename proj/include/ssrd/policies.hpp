#pragma once

#include "ssrd/scenario.hpp"
#include "ssrd/sequences.hpp"
#include "ssrd/valuation.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ssrd {

/// Plays the MDP choosing, at every step, the admissible action with the
/// largest immediate reward (skip counts as reward 0; ties keep the first
/// portfolio in lexicographic order).
InvestmentSequence greedy_sequence(const Scenario& scenario, std::uint64_t seed, int threads = 1);

/// Names accepted: myopia-h, myopia-l, greedy, random (drawn from the
/// Policy stream of `seed`), or a `[[..],..]` literal.
InvestmentSequence resolve_policy(const std::string& name, const Scenario& scenario, std::uint64_t seed,
                                  int threads = 1);

struct EnumerationSummary {
  std::uint64_t count = 0;
  InvestmentSequence best;
  double best_value = 0.0;
  double best_std_error = 0.0;
};

using EnumerationSink = std::function<void(std::uint64_t index, const InvestmentSequence&, const RoaResult&)>;

/// Values every feasible sequence with a common seed. The sink sees results
/// in enumeration order regardless of `threads`; the first maximum wins.
EnumerationSummary evaluate_all(const Scenario& scenario, std::uint64_t seed, int threads,
                                const EnumerationSink& sink = {});

}  // namespace ssrd

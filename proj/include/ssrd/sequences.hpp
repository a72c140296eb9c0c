#pragma once

#include "ssrd/demand.hpp"
#include "ssrd/scenario.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ssrd {

/// Regions invested together in one period. Order is kept for display only;
/// all set semantics go through mask().
struct Portfolio {
  std::vector<int> regions;

  int size() const { return static_cast<int>(regions.size()); }
  std::uint64_t mask() const;
  bool operator==(const Portfolio&) const = default;
};

/// Ordered list of portfolios; timing is decided by valuation, not stored.
struct InvestmentSequence {
  std::vector<Portfolio> portfolios;

  int length() const { return static_cast<int>(portfolios.size()); }
  /// Regions covered by portfolios [0, h).
  std::uint64_t covered_mask(int h) const;
  int covered_count(int h) const;
  bool operator==(const InvestmentSequence&) const = default;
};

/// Length ≤ T, every portfolio non-empty with ≤ k distinct regions, and the
/// portfolios partition {0..N-1}.
bool is_feasible(const InvestmentSequence& seq, int n_regions, int k, int horizon);

/// Streams every feasible sequence exactly once in lexicographic order of
/// the portfolio lists (portfolios compared as sorted id lists). Memory use
/// is O(N) regardless of the size of the sequence space.
class SequenceEnumerator {
 public:
  SequenceEnumerator(int n_regions, int k, int horizon);

  /// Advances to the next sequence; false once exhausted.
  bool next(InvestmentSequence& out);

 private:
  bool descend();

  int n_ = 0;
  int k_ = 0;
  int horizon_ = 0;
  std::uint64_t full_ = 0;
  std::vector<std::uint64_t> candidates_;  // all portfolios, lexicographic
  std::vector<std::size_t> choice_;        // candidate index per depth
  std::vector<std::uint64_t> remaining_;   // uncovered mask before each depth
  bool started_ = false;
  bool done_ = false;
};

/// Calls `visit` for each feasible sequence until it returns false.
void for_each_feasible(int n_regions, int k, int horizon,
                       const std::function<bool(const InvestmentSequence&)>& visit);

/// Ordered set partitions of N labelled regions into at most T blocks of
/// size at most k.
std::uint64_t count_feasible(int n_regions, int k, int horizon);

/// Σ_{i=1..k} C(N, i).
std::uint64_t portfolio_count(int n_regions, int k);

enum class MyopiaMode { High, Low };

/// Ranks regions by baseline demand (descending for High, ascending for Low,
/// ties by id) and fills portfolios of size min(k, remaining) in rank order.
InvestmentSequence myopia_sequence(const Scenario& scenario, MyopiaMode mode);

/// Uniformly random feasible sequence drawn by rejection-free recursive
/// counting.
InvestmentSequence random_feasible_sequence(int n_regions, int k, int horizon, Engine& rng);

/// Portfolio h is invested at period h (0-based), the earliest admissible
/// schedule.
InvestmentSchedule earliest_schedule(const InvestmentSequence& seq, int n_regions);

/// `[[4],[2],[1],[3]]`-style literal.
std::string format_sequence(const InvestmentSequence& seq);
InvestmentSequence parse_sequence(const std::string& text);

}  // namespace ssrd

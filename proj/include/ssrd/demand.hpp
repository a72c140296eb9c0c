#pragma once

#include "ssrd/rng.hpp"
#include "ssrd/scenario.hpp"

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

namespace ssrd {

/// Period at which each region is invested; drives the cumulative count I_t
/// in the nonstationary spillover term.
struct InvestmentSchedule {
  static constexpr int kNever = -1;
  std::vector<int> invest_time;

  static InvestmentSchedule never(int n_regions) {
    return {std::vector<int>(static_cast<std::size_t>(n_regions), kNever)};
  }
  /// I_t: regions invested at or before period t.
  int invested_count(int t) const;
};

/// Demand tensor [path][t = 0..T][origin][destination].
class DemandPathSet {
 public:
  DemandPathSet() = default;
  DemandPathSet(int n_paths, int horizon, int n_regions);

  int n_paths() const { return n_paths_; }
  int horizon() const { return horizon_; }
  int n_regions() const { return n_regions_; }

  double& at(int path, int t, int i, int j) { return values_[index(path, t, i, j)]; }
  double at(int path, int t, int i, int j) const { return values_[index(path, t, i, j)]; }

  /// Row-major N×N OD matrix of one (path, t).
  std::span<double> matrix(int path, int t);
  std::span<const double> matrix(int path, int t) const;

  std::uint64_t seed = 0;
  InvestmentSchedule schedule;
  /// OD entries clamped to zero after a jump factor went negative.
  std::uint64_t floored_entries = 0;

 private:
  std::size_t index(int path, int t, int i, int j) const {
    return ((static_cast<std::size_t>(path) * static_cast<std::size_t>(horizon_ + 1) + static_cast<std::size_t>(t)) *
                static_cast<std::size_t>(n_regions_) +
            static_cast<std::size_t>(i)) *
               static_cast<std::size_t>(n_regions_) +
           static_cast<std::size_t>(j);
  }

  int n_paths_ = 0;
  int horizon_ = 0;
  int n_regions_ = 0;
  std::vector<double> values_;
};

/// Draws the Gamma baseline (shape, scale) from the configured ranges, or
/// returns the fixed parameters when they are set.
SpilloverParams draw_spillover_params(const SpilloverSpec& spill, Engine& rng);

/// One spillover realization η = strength · draw. Lognormal, Normal and
/// Laplace draws share the mean and variance of Γ(shape, scale).
double sample_spillover(const SpilloverSpec& spill, const SpilloverParams& params, Engine& rng);

/// Convenience form that first draws the baseline parameters.
double sample_spillover(const SpilloverSpec& spill, Engine& rng);

/// f(I_t): 1 for stationary spillovers, I_t / N otherwise.
double spillover_intensity(const SpilloverSpec& spill, int invested, int n_regions);

/// Simulates `n_paths` demand paths over the scenario horizon. Each path
/// owns independent diffusion, jump-count and jump-size streams derived from
/// (seed, path), so the result does not depend on `threads`.
DemandPathSet simulate_paths(const Scenario& scenario, const InvestmentSchedule& schedule, int n_paths,
                             std::uint64_t seed, int threads = 1);

/// CSV dump: path,t,origin,destination,demand.
void write_paths_csv(const DemandPathSet& paths, std::ostream& out);

}  // namespace ssrd

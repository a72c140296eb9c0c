#pragma once

#include "ssrd/demand.hpp"
#include "ssrd/scenario.hpp"
#include "ssrd/sequences.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ssrd {

// Portfolio indices in this module are 0-based: h = 0 is the first portfolio.
// Time indices are periods t = 0..T.

/// New undirected inter-region links when a portfolio of `z_size` regions
/// brings coverage to `covered_after`.
int new_link_count(int z_size, int covered_after);

/// Cost drift (f_end)^{t/T}.
double f_time(double t, int horizon, double f_end);

/// x minus the service threshold of adding the portfolio at period t.
/// `covered_before` is the coverage prior to the portfolio.
double immediate_payoff(double x, int z_size, int covered_after, const CostModel& costs, int t, int horizon,
                        int covered_before);

/// Probabilists' Hermite polynomial He_j(x).
double hermite_basis(int j, double x);

struct LsmcFit {
  static constexpr const char* kBasis = "hermite_e";
  std::vector<double> beta;  ///< coefficients on He_0..He_{U-1} of the standardized input
  double x_mean = 0.0;
  double x_sd = 1.0;
  /// Input spread vanished; the fit is the cross-sectional mean of y.
  bool degenerate = false;
  /// The full basis was rank-deficient and a shorter leading basis was used.
  bool reduced = false;

  double predict(double x) const;
};

/// Least-squares fit of ys on He_0..He_{U-1} of standardized xs.
LsmcFit lsmc_fit(std::span<const double> xs, std::span<const double> ys, int n_basis);

/// Demand of `od` (row-major N×N) over ordered pairs inside `covered_after`
/// that touch `portfolio`, including the portfolio's intra demand.
double incremental_demand(std::span<const double> od, int n, std::uint64_t portfolio, std::uint64_t covered_after);

/// Incremental covered demand X_{z_h,t} per path: intra demand of z_h plus
/// every ordered OD pair among covered regions that touches z_h.
std::vector<double> state_variables(const DemandPathSet& paths, const InvestmentSequence& seq, int h, int t);

/// Latest admissible exercise period of portfolio h for a sequence of
/// length H over horizon T.
inline int latest_time(int h, int length, int horizon) { return horizon - (length - 1 - h); }

struct SurfacePoint {
  int h = 0;
  int t = 0;
  double value = 0.0;          ///< mean of F_h(t)
  double continuation = 0.0;   ///< mean fitted continuation; equals value at t_e
  double exercise_rate = 0.0;  ///< share of paths exercising at (h, t)
};

struct RoaDiagnostics {
  int degenerate_fits = 0;
  int reduced_fits = 0;
  std::uint64_t floored_entries = 0;
};

struct RoaResult {
  double option_value = 0.0;
  double std_error = 0.0;
  std::vector<std::vector<int>> stopping_times;  ///< [path][h]
  std::vector<double> mean_stopping_times;       ///< [h]
  std::vector<SurfacePoint> surface;
  int n_paths = 0;
  std::uint64_t seed = 0;
  RoaDiagnostics diagnostics;
};

/// Compound LSMC valuation on a pre-simulated path set. The sequence must be a valid
/// prefix (disjoint portfolios of size ≤ k, length ≤ T); full coverage is
/// not required here so that MDP prefixes share the same machinery.
RoaResult roa_evaluate_paths(const Scenario& scenario, const InvestmentSequence& seq, const DemandPathSet& paths);

/// Simulates scenario.n_paths paths under the earliest schedule of `seq`
/// and values it. Requires a feasible sequence.
RoaResult roa_evaluate(const Scenario& scenario, const InvestmentSequence& seq, std::uint64_t seed,
                       int threads = 1);

/// Same as roa_evaluate without the full-coverage requirement.
RoaResult roa_evaluate_prefix(const Scenario& scenario, const InvestmentSequence& prefix, std::uint64_t seed,
                              int threads = 1);

/// Throws InfeasibleError unless `seq` is a valid prefix for the scenario.
void check_prefix(const Scenario& scenario, const InvestmentSequence& seq);

struct ScheduleValue {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Mean over paths of Σ_h (1+ρ)^{-t_h} π_h(t_h) for fixed exercise periods.
ScheduleValue fixed_schedule_value(const Scenario& scenario, const InvestmentSequence& seq,
                                   const DemandPathSet& paths, const std::vector<int>& times);

/// fixed_schedule_value with portfolio h exercised at period h.
ScheduleValue earliest_schedule_value(const Scenario& scenario, const InvestmentSequence& seq,
                                      const DemandPathSet& paths);

/// CSV rows h,t,value,continuation,exercise_rate.
std::string format_surface_csv(const RoaResult& r);

}  // namespace ssrd

#pragma once

#include "ssrd/metrics.hpp"
#include "ssrd/scenario.hpp"
#include "ssrd/sequences.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ssrd {

enum class SweepAxis { K, Spillover, FEnd, Zeta, MuSigma };

SweepAxis parse_axis(const std::string& s);
std::string to_string(SweepAxis a);

/// Scenario variant at one grid point.
///   k, f_end, zeta: a number.
///   spillover: `strength`, `dist:strength` or `dist:strength:stationary`.
///   mu_sigma: L, M, H (0.5x, 1x, 1.5x of the calibrated μ and σ) or a
///   numeric multiplier.
Scenario apply_grid_point(const Scenario& base, SweepAxis axis, const std::string& point);

/// Replicate r runs with seed derive_seed(seed, r); every grid point and
/// policy reuses the same replicate seeds.
struct ReplicateSummary {
  std::vector<double> values;
  double mean = 0.0;
  double std_error = 0.0;
  /// Share of (replicate, path) pairs investing region i at period t: N×(T+1).
  Matrix invest_time;
  /// Share of (replicate, path) pairs investing i and j in the same period.
  Matrix co_invest;
};

ReplicateSummary run_replicates(const Scenario& scenario, const InvestmentSequence& seq, std::uint64_t seed,
                                int replicates, int threads);

struct CaseStudyRow {
  std::string policy;
  int k = 0;
  int replicate = 0;
  std::uint64_t seed = 0;
  std::string sequence;
  bool has_option_value = false;
  double option_value = 0.0;
  MetricResult npv;
  MetricResult profit;
};

/// Values `seq` and measures E[NPV] and profitability of the deployment it
/// induces (per-path stopping times). The congestion response applies when
/// the scenario carries congestion parameters and centroids.
CaseStudyRow staged_metrics(const Scenario& scenario, const std::string& policy, const InvestmentSequence& seq,
                            std::uint64_t seed, int threads);

/// Every region deployed at t_0. The option value is reported only when the
/// scenario's k admits the single all-region portfolio.
CaseStudyRow all_in_metrics(const Scenario& scenario, std::uint64_t seed, int threads);

std::string matrix_csv(const Matrix& m, const std::string& row_label, const std::string& col_prefix);

}  // namespace ssrd

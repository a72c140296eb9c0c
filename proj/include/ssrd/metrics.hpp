#pragma once

#include "ssrd/demand.hpp"
#include "ssrd/scenario.hpp"
#include "ssrd/sequences.hpp"
#include "ssrd/valuation.hpp"

#include <cstdint>
#include <vector>

namespace ssrd {

/// Deployment period of every portfolio, per path. A schedule with a single
/// row applies that row to all paths.
struct DeploymentSchedule {
  InvestmentSequence sequence;
  std::vector<std::vector<int>> deploy_time;  ///< [path or 0][h]; InvestmentSchedule::kNever allowed

  static DeploymentSchedule fixed(InvestmentSequence seq, std::vector<int> times);
  /// Portfolio h deployed at period h.
  static DeploymentSchedule earliest(InvestmentSequence seq);
  /// Per-path stopping times of a valuation.
  static DeploymentSchedule from_roa(InvestmentSequence seq, const RoaResult& roa);
  /// One portfolio with every region, deployed at t_0.
  static DeploymentSchedule all_in(int n_regions);

  int time(int path, int h) const;
  bool empty() const { return sequence.portfolios.empty(); }
};

struct RidershipResult {
  Matrix realized;
  double wait = 0.0;  ///< T_wait, minutes
  int iterations = 0;
  bool converged = false;
};

/// Fixed point of Q̃ = Q·exp(−δ[p + VOT·(TT + T_wait)]),
/// T_wait = c_w·(ΣQ̃)^{1/3}·v^{−2/3}, iterated from T_wait = 0.
RidershipResult realized_ridership(const Matrix& latent, const Matrix& travel_times, const CongestionParams& params);

/// Applies the congestion response to the covered OD submatrix before the
/// incremental demands are measured.
struct CongestionModel {
  CongestionParams params;
  Matrix travel_times;
};

struct MetricResult {
  double value = 0.0;      ///< mean over paths
  double std_error = 0.0;  ///< of the per-path totals
  std::uint64_t zero_demand_terms = 0;
  std::uint64_t unconverged = 0;  ///< congestion solves that hit max_iterations
  int max_iterations_used = 0;
};

/// Mean over paths of Σ_t (1+ρ)^{-t} Σ_{deployed h} π_h(t).
MetricResult expected_npv(const DemandPathSet& paths, const DeploymentSchedule& schedule, const CostModel& costs,
                          double rho, const CongestionModel* congestion = nullptr);

/// Mean over paths of Σ_t (1+ρ)^{-t} (Σ π_h(t)) / (Σ X_h(t)); terms with zero
/// covered demand (including periods before the first deployment)
/// contribute 0 and are counted.
MetricResult profitability(const DemandPathSet& paths, const DeploymentSchedule& schedule, const CostModel& costs,
                           double rho, const CongestionModel* congestion = nullptr);

struct CostPoint {
  int t = 0;
  double f_time = 1.0;
  double c_intra = 0.0;
  double c_inter = 0.0;  ///< at the given coverage
};

/// Per-period cost levels under the dynamic cost model at fixed coverage.
std::vector<CostPoint> cost_trajectory(const CostModel& costs, int horizon, int covered_before);

}  // namespace ssrd

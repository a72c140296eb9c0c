#include "ssrd/metrics.hpp"

#include "ssrd/error.hpp"

#include <fmt/core.h>

#include <bit>
#include <cmath>

namespace ssrd {

DeploymentSchedule DeploymentSchedule::fixed(InvestmentSequence seq, std::vector<int> times) {
  if (static_cast<int>(times.size()) != seq.length()) throw DataError("one deployment period per portfolio required");
  DeploymentSchedule s;
  s.sequence = std::move(seq);
  s.deploy_time.push_back(std::move(times));
  return s;
}

DeploymentSchedule DeploymentSchedule::earliest(InvestmentSequence seq) {
  std::vector<int> times(static_cast<std::size_t>(seq.length()));
  for (int h = 0; h < seq.length(); ++h) times[static_cast<std::size_t>(h)] = h;
  return fixed(std::move(seq), std::move(times));
}

DeploymentSchedule DeploymentSchedule::from_roa(InvestmentSequence seq, const RoaResult& roa) {
  for (const auto& row : roa.stopping_times)
    if (static_cast<int>(row.size()) != seq.length()) throw DataError("stopping times do not match the sequence");
  DeploymentSchedule s;
  s.sequence = std::move(seq);
  s.deploy_time = roa.stopping_times;
  return s;
}

DeploymentSchedule DeploymentSchedule::all_in(int n_regions) {
  Portfolio all;
  for (int i = 0; i < n_regions; ++i) all.regions.push_back(i);
  return fixed(InvestmentSequence{{all}}, {0});
}

int DeploymentSchedule::time(int path, int h) const {
  const auto& row = deploy_time.size() == 1 ? deploy_time[0] : deploy_time.at(static_cast<std::size_t>(path));
  return row.at(static_cast<std::size_t>(h));
}

// ---------------------------------------------------------------------------

RidershipResult realized_ridership(const Matrix& latent, const Matrix& travel_times, const CongestionParams& params) {
  params.validate();
  if (latent.rows() != latent.cols() || travel_times.rows() != latent.rows() || travel_times.cols() != latent.cols())
    throw DataError("latent and travel-time matrices must be square and equally sized");
  if ((latent.array() < 0.0).any()) throw DataError("latent demand must be non-negative");

  const double speed_term = std::pow(params.speed_kmh, -2.0 / 3.0);
  auto respond = [&](double wait) {
    return Matrix(latent.array() *
                  (-params.delta * (params.fare + params.vot * (travel_times.array() + wait))).exp());
  };
  auto wait_of = [&](const Matrix& q) { return params.wait_coefficient * std::cbrt(q.sum()) * speed_term; };

  RidershipResult r;
  double wait = 0.0;
  for (int it = 1; it <= params.max_iterations; ++it) {
    const double updated = wait_of(respond(wait));
    r.iterations = it;
    const bool done = std::abs(updated - wait) < params.tolerance;
    wait = updated;
    if (done) {
      r.converged = true;
      break;
    }
  }
  r.wait = wait;
  r.realized = respond(wait);
  return r;
}

// ---------------------------------------------------------------------------

namespace {

struct Accumulator {
  std::vector<double> totals;
  std::uint64_t zero_terms = 0;
  std::uint64_t unconverged = 0;
  int max_iterations = 0;
};

MetricResult finish(const Accumulator& acc) {
  MetricResult r;
  const auto n = static_cast<double>(acc.totals.size());
  double s = 0.0;
  for (double v : acc.totals) s += v;
  r.value = acc.totals.empty() ? 0.0 : s / n;
  if (acc.totals.size() > 1) {
    double ss = 0.0;
    for (double v : acc.totals) ss += (v - r.value) * (v - r.value);
    r.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  r.zero_demand_terms = acc.zero_terms;
  r.unconverged = acc.unconverged;
  r.max_iterations_used = acc.max_iterations;
  return r;
}

/// Calls fn(path, disc^t, Σπ, ΣX) for every (path, t) with the deployed
/// portfolios at t.
template <typename Fn>
Accumulator accumulate(const DemandPathSet& paths, const DeploymentSchedule& schedule, const CostModel& costs,
                       double rho, const CongestionModel* congestion, Fn&& fn) {
  const int n = paths.n_regions();
  const int horizon = paths.horizon();
  const auto& seq = schedule.sequence;
  for (const Portfolio& p : seq.portfolios)
    for (int r : p.regions)
      if (r < 0 || r >= n) throw DataError(fmt::format("schedule region {} outside 0..{}", r, n - 1));
  if (schedule.deploy_time.size() != 1 && static_cast<int>(schedule.deploy_time.size()) != paths.n_paths())
    throw DataError("deployment schedule rows must be 1 or one per path");

  std::vector<std::uint64_t> z, after;
  std::vector<int> before_count, after_count;
  std::uint64_t covered = 0;
  for (const Portfolio& p : seq.portfolios) {
    z.push_back(p.mask());
    before_count.push_back(std::popcount(covered));
    covered |= p.mask();
    after.push_back(covered);
    after_count.push_back(std::popcount(covered));
  }

  Accumulator acc;
  acc.totals.assign(static_cast<std::size_t>(paths.n_paths()), 0.0);
  const double disc = 1.0 / (1.0 + rho);
  std::vector<double> od(static_cast<std::size_t>(n * n));
  for (int p = 0; p < paths.n_paths(); ++p) {
    for (int t = 0; t <= horizon; ++t) {
      std::uint64_t deployed = 0;
      for (int h = 0; h < seq.length(); ++h) {
        const int when = schedule.time(p, h);
        if (when != InvestmentSchedule::kNever && when <= t) deployed |= z[static_cast<std::size_t>(h)];
      }
      const auto src = paths.matrix(p, t);
      std::copy(src.begin(), src.end(), od.begin());
      if (congestion && deployed) {
        std::vector<int> idx;
        for (int i = 0; i < n; ++i)
          if ((deployed >> i) & 1) idx.push_back(i);
        const auto m = static_cast<Eigen::Index>(idx.size());
        Matrix sub(m, m), tt(m, m);
        for (Eigen::Index a = 0; a < m; ++a)
          for (Eigen::Index b = 0; b < m; ++b) {
            sub(a, b) = od[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)] * n + idx[static_cast<std::size_t>(b)])];
            tt(a, b) = congestion->travel_times(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
          }
        const RidershipResult rr = realized_ridership(sub, tt, congestion->params);
        acc.unconverged += !rr.converged;
        acc.max_iterations = std::max(acc.max_iterations, rr.iterations);
        for (Eigen::Index a = 0; a < m; ++a)
          for (Eigen::Index b = 0; b < m; ++b)
            od[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)] * n + idx[static_cast<std::size_t>(b)])] =
                rr.realized(a, b);
      }
      double payoff = 0.0, demand = 0.0;
      for (int h = 0; h < seq.length(); ++h) {
        const auto uh = static_cast<std::size_t>(h);
        if (!(deployed & z[uh])) continue;
        const double x = incremental_demand(od, n, z[uh], after[uh]);
        demand += x;
        payoff += immediate_payoff(x, seq.portfolios[uh].size(), after_count[uh], costs, t, horizon, before_count[uh]);
      }
      fn(acc, p, std::pow(disc, t), payoff, demand, deployed != 0);
    }
  }
  return acc;
}

}  // namespace

MetricResult expected_npv(const DemandPathSet& paths, const DeploymentSchedule& schedule, const CostModel& costs,
                          double rho, const CongestionModel* congestion) {
  if (schedule.empty()) return {};
  const Accumulator acc = accumulate(paths, schedule, costs, rho, congestion,
                                     [](Accumulator& a, int p, double d, double payoff, double, bool) {
                                       a.totals[static_cast<std::size_t>(p)] += d * payoff;
                                     });
  return finish(acc);
}

MetricResult profitability(const DemandPathSet& paths, const DeploymentSchedule& schedule, const CostModel& costs,
                           double rho, const CongestionModel* congestion) {
  if (schedule.empty()) return {};
  const Accumulator acc = accumulate(paths, schedule, costs, rho, congestion,
                                     [](Accumulator& a, int p, double d, double payoff, double demand, bool) {
                                       if (demand == 0.0) {
                                         ++a.zero_terms;
                                         return;
                                       }
                                       a.totals[static_cast<std::size_t>(p)] += d * payoff / demand;
                                     });
  return finish(acc);
}

std::vector<CostPoint> cost_trajectory(const CostModel& costs, int horizon, int covered_before) {
  std::vector<CostPoint> out;
  for (int t = 0; t <= horizon; ++t) {
    const double ft = f_time(t, horizon, costs.f_end);
    out.push_back({t, ft, costs.c_intra * ft, costs.c_inter * ft / (1.0 + costs.zeta * covered_before)});
  }
  return out;
}

}  // namespace ssrd

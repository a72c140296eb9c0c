#include "ssrd/experiments.hpp"

#include "ssrd/error.hpp"
#include "ssrd/rng.hpp"
#include "ssrd/valuation.hpp"

#include <fmt/core.h>

#include <cmath>
#include <optional>
#include <sstream>

namespace ssrd {

SweepAxis parse_axis(const std::string& s) {
  if (s == "k") return SweepAxis::K;
  if (s == "spillover") return SweepAxis::Spillover;
  if (s == "f_end") return SweepAxis::FEnd;
  if (s == "zeta") return SweepAxis::Zeta;
  if (s == "mu_sigma") return SweepAxis::MuSigma;
  throw ParseError(fmt::format("unknown sweep axis '{}' (k, spillover, f_end, zeta, mu_sigma)", s));
}

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::K: return "k";
    case SweepAxis::Spillover: return "spillover";
    case SweepAxis::FEnd: return "f_end";
    case SweepAxis::Zeta: return "zeta";
    case SweepAxis::MuSigma: return "mu_sigma";
  }
  return "?";
}

namespace {

double number(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError(fmt::format("grid point '{}' is not a valid {}", s, what));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

}  // namespace

Scenario apply_grid_point(const Scenario& base, SweepAxis axis, const std::string& point) {
  Scenario s = base;
  switch (axis) {
    case SweepAxis::K: {
      const double v = number(point, "k");
      if (v != std::floor(v) || v < 1) throw ParseError(fmt::format("k grid point '{}' must be a positive integer", point));
      s.k = static_cast<int>(v);
      break;
    }
    case SweepAxis::Spillover: {
      const auto parts = split(point, ':');
      if (parts.empty() || parts.size() > 3) throw ParseError(fmt::format("bad spillover grid point '{}'", point));
      if (parts.size() == 1) {
        s.spillover.strength = number(parts[0], "strength");
      } else {
        s.spillover.distribution = parse_distribution(parts[0]);
        s.spillover.strength = number(parts[1], "strength");
        if (parts.size() == 3) {
          if (parts[2] == "stationary") s.spillover.stationary = true;
          else if (parts[2] == "nonstationary") s.spillover.stationary = false;
          else throw ParseError(fmt::format("bad stationarity '{}' in '{}'", parts[2], point));
        }
      }
      break;
    }
    case SweepAxis::FEnd: s.costs.f_end = number(point, "f_end"); break;
    case SweepAxis::Zeta: s.costs.zeta = number(point, "zeta"); break;
    case SweepAxis::MuSigma: {
      double m = 0.0;
      if (point == "L") m = 0.5;
      else if (point == "M") m = 1.0;
      else if (point == "H") m = 1.5;
      else m = number(point, "mu/sigma multiplier");
      if (!(m >= 0.0)) throw ParseError(fmt::format("mu/sigma multiplier '{}' must be >= 0", point));
      for (double& v : s.calib.mu) v *= m;
      for (double& v : s.calib.sigma) v *= m;
      break;
    }
  }
  s.validate();
  return s;
}

ReplicateSummary run_replicates(const Scenario& scenario, const InvestmentSequence& seq, std::uint64_t seed,
                                int replicates, int threads) {
  if (replicates < 1) throw DataError("replicates must be >= 1");
  const int n = scenario.n_regions();
  ReplicateSummary out;
  out.invest_time = Matrix::Zero(n, scenario.horizon + 1);
  out.co_invest = Matrix::Zero(n, n);
  std::vector<int> when(static_cast<std::size_t>(n));
  double samples = 0.0;
  for (int r = 0; r < replicates; ++r) {
    const RoaResult res = roa_evaluate(scenario, seq, derive_seed(seed, static_cast<std::uint64_t>(r)), threads);
    out.values.push_back(res.option_value);
    for (const auto& taus : res.stopping_times) {
      for (int h = 0; h < seq.length(); ++h)
        for (int reg : seq.portfolios[static_cast<std::size_t>(h)].regions)
          when[static_cast<std::size_t>(reg)] = taus[static_cast<std::size_t>(h)];
      for (int i = 0; i < n; ++i) {
        out.invest_time(i, when[static_cast<std::size_t>(i)]) += 1.0;
        for (int j = 0; j < n; ++j)
          if (when[static_cast<std::size_t>(i)] == when[static_cast<std::size_t>(j)]) out.co_invest(i, j) += 1.0;
      }
      samples += 1.0;
    }
  }
  out.invest_time /= samples;
  out.co_invest /= samples;
  double s = 0.0;
  for (double v : out.values) s += v;
  out.mean = s / replicates;
  if (replicates > 1) {
    double ss = 0.0;
    for (double v : out.values) ss += (v - out.mean) * (v - out.mean);
    out.std_error = std::sqrt(ss / (replicates - 1) / replicates);
  }
  return out;
}

namespace {

std::optional<CongestionModel> congestion_of(const Scenario& s) {
  if (!s.congestion) return std::nullopt;
  for (const Region& r : s.regions)
    if (!r.centroid) throw DataError(fmt::format("congestion needs a centroid for region '{}'", r.name));
  return CongestionModel{*s.congestion,
                         travel_time_matrix(s.regions, s.congestion->speed_kmh, s.congestion->peak_multiplier)};
}

}  // namespace

CaseStudyRow staged_metrics(const Scenario& scenario, const std::string& policy, const InvestmentSequence& seq,
                            std::uint64_t seed, int threads) {
  if (!is_feasible(seq, scenario.n_regions(), scenario.k, scenario.horizon))
    throw InfeasibleError(fmt::format("sequence {} is infeasible", format_sequence(seq)));
  const auto paths = simulate_paths(scenario, earliest_schedule(seq, scenario.n_regions()), scenario.n_paths, seed,
                                    threads);
  const RoaResult roa = roa_evaluate_paths(scenario, seq, paths);
  const auto cong = congestion_of(scenario);
  const auto schedule = DeploymentSchedule::from_roa(seq, roa);
  CaseStudyRow row;
  row.policy = policy;
  row.k = scenario.k;
  row.seed = seed;
  row.sequence = format_sequence(seq);
  row.has_option_value = true;
  row.option_value = roa.option_value;
  row.npv = expected_npv(paths, schedule, scenario.costs, scenario.rho, cong ? &*cong : nullptr);
  row.profit = profitability(paths, schedule, scenario.costs, scenario.rho, cong ? &*cong : nullptr);
  return row;
}

CaseStudyRow all_in_metrics(const Scenario& scenario, std::uint64_t seed, int threads) {
  const int n = scenario.n_regions();
  const auto schedule = DeploymentSchedule::all_in(n);
  InvestmentSchedule at_zero{std::vector<int>(static_cast<std::size_t>(n), 0)};
  const auto paths = simulate_paths(scenario, at_zero, scenario.n_paths, seed, threads);
  const auto cong = congestion_of(scenario);
  CaseStudyRow row;
  row.policy = "all-in";
  row.k = scenario.k;
  row.seed = seed;
  row.sequence = format_sequence(schedule.sequence);
  if (scenario.k >= n) {
    row.has_option_value = true;
    row.option_value = roa_evaluate_paths(scenario, schedule.sequence, paths).option_value;
  }
  row.npv = expected_npv(paths, schedule, scenario.costs, scenario.rho, cong ? &*cong : nullptr);
  row.profit = profitability(paths, schedule, scenario.costs, scenario.rho, cong ? &*cong : nullptr);
  return row;
}

std::string matrix_csv(const Matrix& m, const std::string& row_label, const std::string& col_prefix) {
  std::string out = row_label;
  for (Eigen::Index j = 0; j < m.cols(); ++j) out += fmt::format(",{}{}", col_prefix, j);
  out += "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out += fmt::format("{}", i);
    for (Eigen::Index j = 0; j < m.cols(); ++j) out += fmt::format(",{}", m(i, j));
    out += "\n";
  }
  return out;
}

}  // namespace ssrd

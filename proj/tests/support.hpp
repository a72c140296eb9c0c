#pragma once
// Test fixtures and independent oracles. Nothing here calls into the engine
// code it is meant to check.

#include "ssrd/scenario.hpp"
#include "ssrd/sequences.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <numbers>
#include <vector>

namespace ssrd::testing {

/// Synthetic regions with distinct area and density.
inline std::vector<Region> synthetic_regions(int n) {
  std::vector<Region> out;
  for (int i = 0; i < n; ++i) {
    Region r;
    r.id = i;
    r.name = "r" + std::to_string(i + 1);
    r.area_km2 = 10.0 + 7.0 * ((i * 5) % n) + 1.5 * i;
    r.density = 9000.0 + 2500.0 * ((i * 3) % n) - 300.0 * i;
    r.centroid = GeoPoint{40.6 + 0.01 * i, -73.95 + 0.013 * ((i * 2) % n)};
    out.push_back(r);
  }
  return out;
}

inline Scenario synthetic_scenario(int n, int k, int horizon, std::uint64_t seed = 7, double demand_scale = 1e-3) {
  Scenario s;
  s.name = "synthetic";
  s.regions = synthetic_regions(n);
  CalibrationRanges ranges;
  ranges.demand_scale = demand_scale;
  s.calib = calibrate(s.regions, ranges);
  s.costs = default_costs(s.calib.q0);
  s.horizon = horizon;
  s.k = k;
  s.seed = seed;
  return s;
}

/// σ = 0, λ = 0: demand follows q0 · e^{μ_i t} exactly.
inline Scenario deterministic(Scenario s) {
  for (auto& v : s.calib.sigma) v = 0.0;
  for (auto& v : s.calib.lambda) v = 0.0;
  return s;
}

// ---------------------------------------------------------------------------
// Deterministic timing oracle

inline double oracle_covered_sum(const std::vector<std::vector<double>>& q, const std::vector<bool>& covered) {
  double s = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j)
      if (covered[i] && covered[j]) s += q[i][j];
  return s;
}

inline double oracle_f_time(int t, int horizon, double f_end) {
  return std::exp(std::log(f_end) * t / horizon);
}

/// π_h(t) for the deterministic limit, built from first principles: X is a
/// difference of covered-demand sums and the link count is C(a,2) − C(b,2).
inline double oracle_payoff(const Scenario& s, const InvestmentSequence& seq, int h, int t) {
  const int n = s.n_regions();
  std::vector<std::vector<double>> q(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      q[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          s.calib.q0(i, j) * std::exp(s.calib.mu[static_cast<std::size_t>(i)] * t);
  std::vector<bool> before(static_cast<std::size_t>(n), false);
  for (int g = 0; g < h; ++g)
    for (int r : seq.portfolios[static_cast<std::size_t>(g)].regions) before[static_cast<std::size_t>(r)] = true;
  std::vector<bool> after = before;
  for (int r : seq.portfolios[static_cast<std::size_t>(h)].regions) after[static_cast<std::size_t>(r)] = true;
  const double x = oracle_covered_sum(q, after) - oracle_covered_sum(q, before);
  const auto nb = static_cast<long>(std::count(before.begin(), before.end(), true));
  const auto na = static_cast<long>(std::count(after.begin(), after.end(), true));
  const long links = na * (na - 1) / 2 - nb * (nb - 1) / 2;
  const double ft = oracle_f_time(t, s.horizon, s.costs.f_end);
  const double z = static_cast<double>(na - nb);
  return x - (z * s.costs.c_intra * ft + links * s.costs.c_inter * ft / (1.0 + s.costs.zeta * nb));
}

/// Best Σ_h (1+ρ)^{-τ_h} π_h(τ_h) over strictly increasing τ with
/// τ_h ≤ T − (H − 1 − h), found by exhaustive search.
inline double oracle_best_timing(const Scenario& s, const InvestmentSequence& seq) {
  const int H = seq.length();
  const int T = s.horizon;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> tau(static_cast<std::size_t>(H));
  std::function<void(int, int, double)> rec = [&](int h, int earliest, double acc) {
    if (h == H) {
      best = std::max(best, acc);
      return;
    }
    const int latest = T - (H - 1 - h);
    for (int t = earliest; t <= latest; ++t)
      rec(h + 1, t + 1, acc + std::pow(1.0 + s.rho, -t) * oracle_payoff(s, seq, h, t));
  };
  rec(0, 0, 0.0);
  return best;
}

// ---------------------------------------------------------------------------
// Geography oracle: central angle from the chord between unit vectors.

inline double oracle_distance_km(GeoPoint a, GeoPoint b) {
  constexpr double kDeg = std::numbers::pi / 180.0;
  auto unit = [&](GeoPoint p) {
    const double la = p.lat * kDeg, lo = p.lon * kDeg;
    return std::array<double, 3>{std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo), std::sin(la)};
  };
  const auto u = unit(a), v = unit(b);
  const double chord = std::sqrt((u[0] - v[0]) * (u[0] - v[0]) + (u[1] - v[1]) * (u[1] - v[1]) +
                                 (u[2] - v[2]) * (u[2] - v[2]));
  return 6371.0088 * 2.0 * std::asin(chord / 2.0);
}

// ---------------------------------------------------------------------------
// Congestion oracle: scalar bisection on T = c·(L·e^{−δ(p+VOT(TT+T))})^{1/3}·v^{−2/3}.

struct ScalarEquilibrium {
  double wait = 0.0;
  double realized = 0.0;
};

inline ScalarEquilibrium oracle_scalar_congestion(double latent, double tt, double fare, double delta, double vot,
                                                  double speed, double coeff) {
  auto realized = [&](double w) { return latent * std::exp(-delta * (fare + vot * (tt + w))); };
  auto gap = [&](double w) { return w - coeff * std::cbrt(realized(w)) * std::pow(speed, -2.0 / 3.0); };
  double lo = 0.0, hi = coeff * std::cbrt(latent) * std::pow(speed, -2.0 / 3.0) + 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) < 0.0 ? lo : hi) = mid;
  }
  const double w = 0.5 * (lo + hi);
  return {w, realized(w)};
}

// ---------------------------------------------------------------------------
// Counting oracle: ordered set partitions by brute-force labelling.

/// Counts assignments of N regions to block labels 1..T' (T' ≤ T) such
/// that labels 1..T' are all used and every block has size ≤ k.
inline long long oracle_count(int n, int k, int horizon) {
  long long total = 0;
  for (int blocks = 1; blocks <= horizon; ++blocks) {
    std::vector<int> label(static_cast<std::size_t>(n), 0);
    long long combos = 1;
    for (int i = 0; i < n; ++i) combos *= blocks;
    for (long long code = 0; code < combos; ++code) {
      long long c = code;
      std::vector<int> size(static_cast<std::size_t>(blocks), 0);
      for (int i = 0; i < n; ++i) {
        ++size[static_cast<std::size_t>(c % blocks)];
        c /= blocks;
      }
      bool ok = true;
      for (int b : size) ok = ok && b >= 1 && b <= k;
      total += ok;
    }
  }
  return total;
}

}  // namespace ssrd::testing

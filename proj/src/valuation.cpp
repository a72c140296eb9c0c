#include "ssrd/valuation.hpp"

#include "ssrd/error.hpp"

#include <Eigen/QR>
#include <fmt/core.h>

#include <bit>
#include <cmath>
#include <sstream>

namespace ssrd {

int new_link_count(int z_size, int covered_after) { return z_size * (2 * covered_after - z_size - 1) / 2; }

double f_time(double t, int horizon, double f_end) {
  if (f_end == 1.0 || horizon <= 0) return 1.0;
  if (t == horizon) return f_end;
  return std::pow(f_end, t / static_cast<double>(horizon));
}

double immediate_payoff(double x, int z_size, int covered_after, const CostModel& costs, int t, int horizon,
                        int covered_before) {
  const double ft = f_time(t, horizon, costs.f_end);
  const double intra = costs.c_intra * ft;
  const double inter = costs.c_inter * ft / (1.0 + costs.zeta * covered_before);
  return x - (z_size * intra + new_link_count(z_size, covered_after) * inter);
}

double hermite_basis(int j, double x) {
  if (j <= 0) return 1.0;
  double prev = 1.0, cur = x;
  for (int n = 1; n < j; ++n) {
    const double next = x * cur - n * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

double LsmcFit::predict(double x) const {
  const double z = (x - x_mean) / x_sd;
  double v = 0.0;
  for (std::size_t j = 0; j < beta.size(); ++j) v += beta[j] * hermite_basis(static_cast<int>(j), z);
  return v;
}

LsmcFit lsmc_fit(std::span<const double> xs, std::span<const double> ys, int n_basis) {
  if (xs.size() != ys.size()) throw DataError("lsmc_fit: xs and ys differ in length");
  if (xs.empty()) throw DataError("lsmc_fit: no observations");
  if (n_basis < 1) throw DataError("lsmc_fit: n_basis must be >= 1");
  const auto n = static_cast<Eigen::Index>(xs.size());

  double xm = 0.0, ym = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    xm += xs[static_cast<std::size_t>(i)];
    ym += ys[static_cast<std::size_t>(i)];
  }
  xm /= static_cast<double>(n);
  ym /= static_cast<double>(n);
  double ss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = xs[static_cast<std::size_t>(i)] - xm;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n));

  LsmcFit fit;
  fit.x_mean = xm;
  if (n < 2 || !(sd > 1e-12 * std::abs(xm)) || sd == 0.0) {
    fit.degenerate = true;
    fit.x_sd = 1.0;
    fit.beta = {ym};
    return fit;
  }
  fit.x_sd = sd;

  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = ys[static_cast<std::size_t>(i)];
  const int max_u = static_cast<int>(std::min<Eigen::Index>(n_basis, n));
  fit.reduced = max_u < n_basis;
  for (int u = max_u; u >= 1; --u) {
    Eigen::MatrixXd a(n, u);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = (xs[static_cast<std::size_t>(i)] - xm) / sd;
      for (int j = 0; j < u; ++j) a(i, j) = hermite_basis(j, z);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < u) {
      fit.reduced = true;
      continue;
    }
    const Eigen::VectorXd b = qr.solve(y);
    fit.beta.assign(b.data(), b.data() + b.size());
    return fit;
  }
  fit.beta = {ym};
  return fit;
}

// ---------------------------------------------------------------------------

namespace {

struct PortfolioGeometry {
  std::uint64_t z = 0;
  std::uint64_t after = 0;
  int size = 0;
  int covered_before = 0;
  int covered_after = 0;
};

std::vector<PortfolioGeometry> geometry(const InvestmentSequence& seq) {
  std::vector<PortfolioGeometry> g;
  std::uint64_t covered = 0;
  for (const Portfolio& p : seq.portfolios) {
    PortfolioGeometry pg;
    pg.z = p.mask();
    pg.size = p.size();
    pg.covered_before = std::popcount(covered);
    covered |= pg.z;
    pg.after = covered;
    pg.covered_after = std::popcount(covered);
    g.push_back(pg);
  }
  return g;
}

double incremental_demand(std::span<const double> q, int n, const PortfolioGeometry& g) {
  return ssrd::incremental_demand(q, n, g.z, g.after);
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_error_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

void check_paths(const Scenario& scenario, const DemandPathSet& paths) {
  if (paths.n_regions() != scenario.n_regions() || paths.horizon() != scenario.horizon)
    throw DataError(fmt::format("path set is {} regions x {} periods, scenario is {} x {}", paths.n_regions(),
                                paths.horizon(), scenario.n_regions(), scenario.horizon));
}

}  // namespace

double incremental_demand(std::span<const double> od, int n, std::uint64_t portfolio, std::uint64_t covered_after) {
  double x = 0.0;
  for (int i = 0; i < n; ++i) {
    if (!((covered_after >> i) & 1)) continue;
    const bool i_new = (portfolio >> i) & 1;
    for (int j = 0; j < n; ++j) {
      if (!((covered_after >> j) & 1)) continue;
      if (i_new || ((portfolio >> j) & 1)) x += od[static_cast<std::size_t>(i * n + j)];
    }
  }
  return x;
}

std::vector<double> state_variables(const DemandPathSet& paths, const InvestmentSequence& seq, int h, int t) {
  if (h < 0 || h >= seq.length()) throw DataError(fmt::format("portfolio index {} outside sequence", h));
  if (t < 0 || t > paths.horizon()) throw DataError(fmt::format("period {} outside 0..{}", t, paths.horizon()));
  const auto g = geometry(seq)[static_cast<std::size_t>(h)];
  std::vector<double> x(static_cast<std::size_t>(paths.n_paths()));
  for (int p = 0; p < paths.n_paths(); ++p)
    x[static_cast<std::size_t>(p)] = incremental_demand(paths.matrix(p, t), paths.n_regions(), g);
  return x;
}

void check_prefix(const Scenario& scenario, const InvestmentSequence& seq) {
  const int n = scenario.n_regions();
  if (seq.length() > scenario.horizon)
    throw InfeasibleError(fmt::format("sequence length {} exceeds horizon {}", seq.length(), scenario.horizon));
  std::uint64_t seen = 0;
  for (const Portfolio& p : seq.portfolios) {
    if (p.size() < 1 || p.size() > scenario.k)
      throw InfeasibleError(fmt::format("portfolio size {} outside 1..{}", p.size(), scenario.k));
    for (int r : p.regions) {
      if (r < 0 || r >= n) throw InfeasibleError(fmt::format("region id {} outside 0..{}", r, n - 1));
      if ((seen >> r) & 1) throw InfeasibleError(fmt::format("region {} appears twice", r));
      seen |= std::uint64_t{1} << r;
    }
  }
}

RoaResult roa_evaluate_paths(const Scenario& scenario, const InvestmentSequence& seq, const DemandPathSet& paths) {
  check_paths(scenario, paths);
  check_prefix(scenario, seq);
  const int n_paths = paths.n_paths();
  if (n_paths < 2) throw DataError("valuation needs at least 2 paths");
  const int n = scenario.n_regions();
  const int horizon = scenario.horizon;
  const int length = seq.length();
  const double disc = 1.0 / (1.0 + scenario.rho);
  const auto W = static_cast<std::size_t>(n_paths);

  RoaResult out;
  out.n_paths = n_paths;
  out.seed = paths.seed;
  out.diagnostics.floored_entries = paths.floored_entries;
  if (length == 0) {
    out.stopping_times.assign(W, {});
    return out;
  }

  const auto geo = geometry(seq);
  // x[h][t][ω], pi[h][t][ω]
  std::vector<std::vector<std::vector<double>>> x(static_cast<std::size_t>(length)), pi(x);
  for (int h = 0; h < length; ++h) {
    const auto& g = geo[static_cast<std::size_t>(h)];
    auto& xh = x[static_cast<std::size_t>(h)];
    auto& ph = pi[static_cast<std::size_t>(h)];
    xh.assign(static_cast<std::size_t>(horizon + 1), std::vector<double>(W));
    ph = xh;
    for (int t = 0; t <= horizon; ++t)
      for (int p = 0; p < n_paths; ++p) {
        const double v = incremental_demand(paths.matrix(p, t), n, g);
        xh[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] = v;
        ph[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)] =
            immediate_payoff(v, g.size, g.covered_after, scenario.costs, t, horizon, g.covered_before);
      }
  }

  // value[h][ω] at t+1 (next) and t (cur); stop[h][t][ω] = S_h(t).
  std::vector<std::vector<double>> next(static_cast<std::size_t>(length), std::vector<double>(W, 0.0)), cur(next);
  std::vector<std::vector<std::vector<int>>> stop(
      static_cast<std::size_t>(length),
      std::vector<std::vector<int>>(static_cast<std::size_t>(horizon + 1), std::vector<int>(W, -1)));
  std::vector<double> y_cont(W), y_next(W), phi_next(W), xs_sub, ys_sub;

  for (int t = horizon; t >= 0; --t) {
    for (int h = length - 1; h >= 0; --h) {
      const auto uh = static_cast<std::size_t>(h);
      const int te = latest_time(h, length, horizon);
      if (t < h || t > te) continue;
      const auto& pih = pi[uh][static_cast<std::size_t>(t)];
      auto& g = cur[uh];
      auto& s = stop[uh][static_cast<std::size_t>(t)];
      const bool last = h == length - 1;
      SurfacePoint sp{h, t, 0.0, 0.0, 0.0};

      if (t == te) {
        for (std::size_t p = 0; p < W; ++p) {
          g[p] = pih[p] + (last ? 0.0 : disc * next[uh + 1][p]);
          s[p] = t;
        }
        sp.value = mean_of(g);
        sp.continuation = sp.value;
        sp.exercise_rate = 1.0;
        out.surface.push_back(sp);
        continue;
      }

      for (std::size_t p = 0; p < W; ++p) y_cont[p] = disc * next[uh][p];
      if (last) {
        std::fill(phi_next.begin(), phi_next.end(), 0.0);
        std::fill(y_next.begin(), y_next.end(), 0.0);
      } else {
        for (std::size_t p = 0; p < W; ++p) y_next[p] = disc * next[uh + 1][p];
        const auto& xn = x[uh + 1][static_cast<std::size_t>(t)];
        const LsmcFit fn = lsmc_fit(xn, y_next, scenario.n_basis);
        out.diagnostics.degenerate_fits += fn.degenerate;
        out.diagnostics.reduced_fits += fn.reduced;
        for (std::size_t p = 0; p < W; ++p) phi_next[p] = fn.predict(xn[p]);
      }

      const auto& xc = x[uh][static_cast<std::size_t>(t)];
      LsmcFit fc;
      bool fitted = false;
      if (scenario.regression == RegressionSample::InTheMoney) {
        xs_sub.clear();
        ys_sub.clear();
        for (std::size_t p = 0; p < W; ++p)
          if (pih[p] + phi_next[p] > 0.0) {
            xs_sub.push_back(xc[p]);
            ys_sub.push_back(y_cont[p]);
          }
        if (xs_sub.size() >= 2) {
          fc = lsmc_fit(xs_sub, ys_sub, scenario.n_basis);
          fitted = true;
        }
      }
      if (!fitted) fc = lsmc_fit(xc, y_cont, scenario.n_basis);
      out.diagnostics.degenerate_fits += fc.degenerate;
      out.diagnostics.reduced_fits += fc.reduced;

      const auto& s_next = stop[uh][static_cast<std::size_t>(t + 1)];
      int exercised = 0;
      double cont_sum = 0.0;
      for (std::size_t p = 0; p < W; ++p) {
        const double phi = fc.predict(xc[p]);
        cont_sum += phi;
        const double exercise = pih[p] + phi_next[p];
        if (exercise >= phi) {
          ++exercised;
          g[p] = scenario.exercise_value == ExerciseValue::Fitted ? exercise : pih[p] + y_next[p];
          s[p] = t;
        } else {
          g[p] = y_cont[p];
          s[p] = s_next[p];
        }
      }
      sp.value = mean_of(g);
      sp.continuation = cont_sum / static_cast<double>(W);
      sp.exercise_rate = exercised / static_cast<double>(W);
      out.surface.push_back(sp);
    }
    std::swap(cur, next);
  }
  // After the final swap `next` holds the t = 0 layer.
  const auto& v0 = next[0];
  out.option_value = mean_of(v0);
  out.std_error = std_error_of(v0);

  out.stopping_times.assign(W, std::vector<int>(static_cast<std::size_t>(length)));
  out.mean_stopping_times.assign(static_cast<std::size_t>(length), 0.0);
  for (std::size_t p = 0; p < W; ++p) {
    int avail = 0;
    for (int h = 0; h < length; ++h) {
      const int tau = stop[static_cast<std::size_t>(h)][static_cast<std::size_t>(avail)][p];
      out.stopping_times[p][static_cast<std::size_t>(h)] = tau;
      out.mean_stopping_times[static_cast<std::size_t>(h)] += tau;
      avail = tau + 1;
    }
  }
  for (double& m : out.mean_stopping_times) m /= static_cast<double>(W);
  std::reverse(out.surface.begin(), out.surface.end());
  return out;
}

RoaResult roa_evaluate_prefix(const Scenario& scenario, const InvestmentSequence& prefix, std::uint64_t seed,
                              int threads) {
  check_prefix(scenario, prefix);
  if (scenario.n_paths < 2) throw DataError("valuation needs at least 2 paths");
  const auto paths = simulate_paths(scenario, earliest_schedule(prefix, scenario.n_regions()), scenario.n_paths,
                                    seed, threads);
  return roa_evaluate_paths(scenario, prefix, paths);
}

RoaResult roa_evaluate(const Scenario& scenario, const InvestmentSequence& seq, std::uint64_t seed, int threads) {
  if (!is_feasible(seq, scenario.n_regions(), scenario.k, scenario.horizon))
    throw InfeasibleError(fmt::format("sequence {} is infeasible for N={} k={} T={}", format_sequence(seq),
                                      scenario.n_regions(), scenario.k, scenario.horizon));
  return roa_evaluate_prefix(scenario, seq, seed, threads);
}

ScheduleValue fixed_schedule_value(const Scenario& scenario, const InvestmentSequence& seq,
                                   const DemandPathSet& paths, const std::vector<int>& times) {
  check_paths(scenario, paths);
  if (static_cast<int>(times.size()) != seq.length()) throw DataError("one exercise period per portfolio required");
  for (int t : times)
    if (t < 0 || t > scenario.horizon) throw DataError(fmt::format("exercise period {} outside horizon", t));
  const auto geo = geometry(seq);
  const double disc = 1.0 / (1.0 + scenario.rho);
  std::vector<double> total(static_cast<std::size_t>(paths.n_paths()), 0.0);
  for (int p = 0; p < paths.n_paths(); ++p)
    for (int h = 0; h < seq.length(); ++h) {
      const auto& g = geo[static_cast<std::size_t>(h)];
      const int t = times[static_cast<std::size_t>(h)];
      const double xv = incremental_demand(paths.matrix(p, t), paths.n_regions(), g);
      total[static_cast<std::size_t>(p)] +=
          std::pow(disc, t) *
          immediate_payoff(xv, g.size, g.covered_after, scenario.costs, t, scenario.horizon, g.covered_before);
    }
  return {mean_of(total), std_error_of(total)};
}

ScheduleValue earliest_schedule_value(const Scenario& scenario, const InvestmentSequence& seq,
                                      const DemandPathSet& paths) {
  std::vector<int> times(static_cast<std::size_t>(seq.length()));
  for (int h = 0; h < seq.length(); ++h) times[static_cast<std::size_t>(h)] = h;
  return fixed_schedule_value(scenario, seq, paths, times);
}

std::string format_surface_csv(const RoaResult& r) {
  std::ostringstream os;
  os << "h,t,value,continuation,exercise_rate\n";
  for (const auto& s : r.surface)
    os << fmt::format("{},{},{},{},{}\n", s.h, s.t, s.value, s.continuation, s.exercise_rate);
  return os.str();
}

}  // namespace ssrd

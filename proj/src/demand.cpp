#include "ssrd/demand.hpp"

#include "ssrd/error.hpp"
#include "ssrd/parallel.hpp"

#include <fmt/core.h>

#include <cmath>

namespace ssrd {

int InvestmentSchedule::invested_count(int t) const {
  int c = 0;
  for (int when : invest_time) {
    if (when != kNever && when <= t) ++c;
  }
  return c;
}

DemandPathSet::DemandPathSet(int n_paths, int horizon, int n_regions)
    : n_paths_(n_paths),
      horizon_(horizon),
      n_regions_(n_regions),
      values_(static_cast<std::size_t>(n_paths) * static_cast<std::size_t>(horizon + 1) *
                  static_cast<std::size_t>(n_regions) * static_cast<std::size_t>(n_regions),
              0.0) {}

std::span<double> DemandPathSet::matrix(int path, int t) {
  return {values_.data() + index(path, t, 0, 0), static_cast<std::size_t>(n_regions_ * n_regions_)};
}

std::span<const double> DemandPathSet::matrix(int path, int t) const {
  return {values_.data() + index(path, t, 0, 0), static_cast<std::size_t>(n_regions_ * n_regions_)};
}

SpilloverParams draw_spillover_params(const SpilloverSpec& spill, Engine& rng) {
  if (spill.params) return *spill.params;
  std::uniform_real_distribution<double> shape(spill.shape_range.lo, spill.shape_range.hi);
  std::uniform_real_distribution<double> scale(spill.scale_range.lo, spill.scale_range.hi);
  SpilloverParams p;
  p.shape = spill.shape_range.lo == spill.shape_range.hi ? spill.shape_range.lo : shape(rng);
  p.scale = spill.scale_range.lo == spill.scale_range.hi ? spill.scale_range.lo : scale(rng);
  return p;
}

double sample_spillover(const SpilloverSpec& spill, const SpilloverParams& params, Engine& rng) {
  const double mean = params.mean();
  const double var = params.variance();
  double draw = 0.0;
  switch (spill.distribution) {
    case SpilloverDistribution::Gamma: {
      std::gamma_distribution<double> g(params.shape, params.scale);
      draw = g(rng);
      break;
    }
    case SpilloverDistribution::Lognormal: {
      const double s2 = std::log1p(var / (mean * mean));
      std::lognormal_distribution<double> ln(std::log(mean) - 0.5 * s2, std::sqrt(s2));
      draw = ln(rng);
      break;
    }
    case SpilloverDistribution::Normal: {
      std::normal_distribution<double> n(mean, std::sqrt(var));
      draw = n(rng);
      break;
    }
    case SpilloverDistribution::Laplace: {
      // Inverse CDF; Var = 2 b².
      const double b = std::sqrt(var / 2.0);
      std::uniform_real_distribution<double> u(-0.5, 0.5);
      double v = u(rng);
      while (v == -0.5) v = u(rng);
      draw = mean - b * (v < 0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::abs(v));
      break;
    }
  }
  return spill.strength * draw;
}

double sample_spillover(const SpilloverSpec& spill, Engine& rng) {
  const SpilloverParams p = draw_spillover_params(spill, rng);
  return sample_spillover(spill, p, rng);
}

double spillover_intensity(const SpilloverSpec& spill, int invested, int n_regions) {
  if (spill.stationary) return 1.0;
  return static_cast<double>(invested) / static_cast<double>(n_regions);
}

DemandPathSet simulate_paths(const Scenario& scenario, const InvestmentSchedule& schedule, int n_paths,
                             std::uint64_t seed, int threads) {
  const int n = scenario.n_regions();
  const int horizon = scenario.horizon;
  if (static_cast<int>(schedule.invest_time.size()) != n)
    throw DataError(fmt::format("schedule has {} regions, scenario has {}", schedule.invest_time.size(), n));
  for (int when : schedule.invest_time) {
    if (when != InvestmentSchedule::kNever && (when < 0 || when > horizon))
      throw DataError(fmt::format("schedule period {} outside 0..{}", when, horizon));
  }
  if (n_paths < 1) throw DataError("n_paths must be >= 1");

  DemandPathSet out(n_paths, horizon, n);
  out.seed = seed;
  out.schedule = schedule;

  // Regional heterogeneity of the spillover law is fixed per run, not per path.
  std::vector<SpilloverParams> region_params(static_cast<std::size_t>(n));
  {
    Engine prng = make_engine(seed, 0, Stream::SpilloverParams);
    for (auto& p : region_params) p = draw_spillover_params(scenario.spillover, prng);
  }

  std::vector<double> drift(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double s = scenario.calib.sigma[static_cast<std::size_t>(i)];
    drift[static_cast<std::size_t>(i)] = scenario.calib.mu[static_cast<std::size_t>(i)] - 0.5 * s * s;
  }
  std::vector<double> intensity(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t)
    intensity[static_cast<std::size_t>(t)] =
        spillover_intensity(scenario.spillover, schedule.invested_count(t), n);

  std::vector<std::uint64_t> floored(static_cast<std::size_t>(n_paths), 0);

  parallel_for(n_paths, threads, [&](int p) {
    Engine diffusion = make_engine(seed, static_cast<std::uint64_t>(p), Stream::Diffusion);
    Engine jumps = make_engine(seed, static_cast<std::uint64_t>(p), Stream::JumpCount);
    Engine sizes = make_engine(seed, static_cast<std::uint64_t>(p), Stream::JumpSize);
    std::normal_distribution<double> z(0.0, 1.0);

    auto m0 = out.matrix(p, 0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m0[static_cast<std::size_t>(i * n + j)] = scenario.calib.q0(i, j);

    for (int t = 0; t < horizon; ++t) {
      const auto cur = out.matrix(p, t);
      auto next = out.matrix(p, t + 1);
      const double f = intensity[static_cast<std::size_t>(t)];
      for (int i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double lam = scenario.calib.lambda[ui];
        int n_jumps = 0;
        if (lam > 0.0) {
          std::poisson_distribution<int> pois(lam);
          n_jumps = pois(jumps);
        }
        // Origin-level jump factor shared by every destination.
        double jump_factor = 1.0;
        bool negative = false;
        for (int m = 0; m < n_jumps; ++m) {
          const double eta = sample_spillover(scenario.spillover, region_params[ui], sizes);
          const double factor = 1.0 + eta * f;
          if (factor < 0.0) negative = true;
          jump_factor *= factor;
        }
        const double sigma = scenario.calib.sigma[ui];
        for (int j = 0; j < n; ++j) {
          const auto idx = static_cast<std::size_t>(i * n + j);
          const double shock = z(diffusion);
          double v = cur[idx] * std::exp(drift[ui] + sigma * shock);
          if (negative) {
            if (v > 0.0) ++floored[static_cast<std::size_t>(p)];
            v = 0.0;
          } else {
            v *= jump_factor;
          }
          next[idx] = v;
        }
      }
    }
  });

  for (auto c : floored) out.floored_entries += c;
  return out;
}

void write_paths_csv(const DemandPathSet& paths, std::ostream& out) {
  out << "path,t,origin,destination,demand\n";
  const int n = paths.n_regions();
  for (int p = 0; p < paths.n_paths(); ++p)
    for (int t = 0; t <= paths.horizon(); ++t)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out << fmt::format("{},{},{},{},{}\n", p, t, i, j, paths.at(p, t, i, j));
}

}  // namespace ssrd

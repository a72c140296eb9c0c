#include "ssrd/policies.hpp"

#include "ssrd/error.hpp"
#include "ssrd/mdp_env.hpp"
#include "ssrd/parallel.hpp"
#include "ssrd/rng.hpp"

#include <fmt/core.h>

#include <bit>

namespace ssrd {

namespace {

void subsets_of(const std::vector<int>& pool, int lo, int hi, std::size_t start, std::vector<int>& cur,
                std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) >= lo && !cur.empty()) out.push_back(cur);
  if (static_cast<int>(cur.size()) == hi) return;
  for (std::size_t i = start; i < pool.size(); ++i) {
    cur.push_back(pool[i]);
    subsets_of(pool, lo, hi, i + 1, cur, out);
    cur.pop_back();
  }
}

}  // namespace

InvestmentSequence greedy_sequence(const Scenario& scenario, std::uint64_t seed, int threads) {
  MdpEnv env(scenario, MdpConfig{1.0, threads});
  env.reset(seed);
  const int n = scenario.n_regions();
  while (!env.done()) {
    const ActionMask m = env.mask();
    std::vector<int> pool;
    for (int i = 0; i < n; ++i)
      if (m.allowed[static_cast<std::size_t>(i)]) pool.push_back(i);
    std::vector<std::vector<int>> candidates;
    std::vector<int> cur;
    subsets_of(pool, std::max(1, m.min_size), m.max_size, 0, cur, candidates);

    const double base = env.prefix_value(env.state().partial);
    std::vector<int> best_action(static_cast<std::size_t>(n), 0);
    double best = m.skip_allowed ? 0.0 : -std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
      InvestmentSequence next = env.state().partial;
      next.portfolios.push_back(Portfolio{c});
      const double gain = env.prefix_value(next) - base;
      if (gain > best) {
        best = gain;
        std::fill(best_action.begin(), best_action.end(), 0);
        for (int r : c) best_action[static_cast<std::size_t>(r)] = 1;
      }
    }
    env.step(best_action);
  }
  return env.state().partial;
}

InvestmentSequence resolve_policy(const std::string& name, const Scenario& scenario, std::uint64_t seed,
                                  int threads) {
  if (name == "myopia-h") return myopia_sequence(scenario, MyopiaMode::High);
  if (name == "myopia-l") return myopia_sequence(scenario, MyopiaMode::Low);
  if (name == "greedy") return greedy_sequence(scenario, seed, threads);
  if (name == "random") {
    Engine rng = make_engine(seed, 0, Stream::Policy);
    return random_feasible_sequence(scenario.n_regions(), scenario.k, scenario.horizon, rng);
  }
  if (!name.empty() && name.front() == '[') {
    InvestmentSequence seq = parse_sequence(name);
    if (!is_feasible(seq, scenario.n_regions(), scenario.k, scenario.horizon))
      throw InfeasibleError(fmt::format("sequence {} is infeasible for this scenario", name));
    return seq;
  }
  throw DataError(fmt::format("unknown policy '{}'", name));
}

EnumerationSummary evaluate_all(const Scenario& scenario, std::uint64_t seed, int threads,
                                const EnumerationSink& sink) {
  constexpr std::size_t kChunk = 2048;
  SequenceEnumerator e(scenario.n_regions(), scenario.k, scenario.horizon);
  EnumerationSummary summary;
  std::vector<InvestmentSequence> batch;
  std::vector<RoaResult> results;
  bool more = true;
  while (more) {
    batch.clear();
    InvestmentSequence seq;
    while (batch.size() < kChunk && (more = e.next(seq))) batch.push_back(seq);
    results.assign(batch.size(), {});
    parallel_for(static_cast<int>(batch.size()), threads, [&](int i) {
      results[static_cast<std::size_t>(i)] = roa_evaluate(scenario, batch[static_cast<std::size_t>(i)], seed);
    });
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const RoaResult& r = results[i];
      if (summary.count == 0 || r.option_value > summary.best_value) {
        summary.best = batch[i];
        summary.best_value = r.option_value;
        summary.best_std_error = r.std_error;
      }
      if (sink) sink(summary.count, batch[i], r);
      ++summary.count;
    }
  }
  return summary;
}

}  // namespace ssrd

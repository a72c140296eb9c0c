#include "ssrd/error.hpp"
#include "ssrd/mdp_env.hpp"
#include "ssrd/policies.hpp"
#include "ssrd/rng.hpp"
#include "ssrd/scenario_io.hpp"
#include "ssrd/valuation.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

using namespace ssrd;

namespace {

Scenario small(int n = 4, int k = 2, int horizon = 5) {
  auto s = testing::synthetic_scenario(n, k, horizon, 3);
  s.n_paths = 60;
  return s;
}

std::vector<int> pick(int n, std::initializer_list<int> regions) {
  std::vector<int> a(static_cast<std::size_t>(n), 0);
  for (int r : regions) a[static_cast<std::size_t>(r)] = 1;
  return a;
}

/// Random admissible action drawn from the mask.
std::vector<int> random_action(const ActionMask& m, std::mt19937_64& rng) {
  std::vector<int> free;
  for (std::size_t i = 0; i < m.allowed.size(); ++i)
    if (m.allowed[i]) free.push_back(static_cast<int>(i));
  std::shuffle(free.begin(), free.end(), rng);
  std::uniform_int_distribution<int> size(m.min_size, m.max_size);
  const int z = size(rng);
  std::vector<int> a(m.allowed.size(), 0);
  for (int i = 0; i < z; ++i) a[static_cast<std::size_t>(free[static_cast<std::size_t>(i)])] = 1;
  return a;
}

}  // namespace

TEST_CASE("mask: fresh, exhausted and completion-pressure states") {
  MdpState fresh{std::vector<int>(6, 0), {}, 0};
  const auto m = action_mask(fresh, 6, 2, 5);
  CHECK(std::all_of(m.allowed.begin(), m.allowed.end(), [](bool b) { return b; }));
  CHECK(m.max_size == 2);
  CHECK(m.min_size == 0);
  CHECK(m.skip_allowed);

  MdpState full{std::vector<int>(6, 1), {}, 3};
  const auto f = action_mask(full, 6, 2, 5);
  CHECK(std::none_of(f.allowed.begin(), f.allowed.end(), [](bool b) { return b; }));
  CHECK(f.max_size == 0);

  // Six regions, three periods left at k = 2: every remaining step must take two.
  MdpState pressed{std::vector<int>(6, 0), {}, 3};
  const auto p = action_mask(pressed, 6, 2, 6);
  CHECK(p.min_size == 2);
  CHECK(!p.skip_allowed);

  MdpState three{{1, 1, 1, 0, 0, 0}, {}, 4};
  CHECK(action_mask(three, 6, 2, 6).min_size == 1);
  CHECK(action_mask(three, 6, 3, 5).min_size == 3);
  CHECK(action_mask(three, 6, 3, 5).max_size == 3);
}

TEST_CASE("mask never strands regions") {
  // Every state reachable under the mask can still be completed.
  for (int n = 2; n <= 6; ++n)
    for (int k = 1; k <= n; ++k)
      for (int horizon = (n + k - 1) / k; horizon <= 5; ++horizon)
        for (int step = 0; step < horizon; ++step)
          for (int done = 0; done <= n; ++done) {
            MdpState s{std::vector<int>(static_cast<std::size_t>(n), 0), {}, step};
            for (int i = 0; i < done; ++i) s.invested[static_cast<std::size_t>(i)] = 1;
            const int u = n - done;
            const auto m = action_mask(s, n, k, horizon);
            if (u == 0) continue;
            const bool reachable = u <= k * (horizon - step);
            if (!reachable) continue;
            CHECK(m.min_size <= m.max_size);
            // After taking min_size, the rest fits in the remaining periods.
            CHECK(u - m.min_size <= k * (horizon - step - 1));
            if (m.min_size > 0) CHECK(u - (m.min_size - 1) > k * (horizon - step - 1));
          }
}

TEST_CASE("features: shapes and initial values") {
  const auto s = load_scenario(std::filesystem::path(SSRD_DATA_DIR) / "scenarios" / "beijing9.scn");
  MdpEnv env(s);
  env.reset(5);
  const auto f = env.features();
  CHECK(f.n_regions == 9);
  CHECK(f.node.size() == 9 * kNodeFeatures);
  CHECK(f.global.size() == kGlobalFeatures);
  CHECK(f.global[0] == 0.0);
  CHECK(f.global[1] == 0.0);
  double qbar = 0.0;
  for (int i = 0; i < 9; ++i) {
    CHECK(f.node[static_cast<std::size_t>(i * 4 + 3)] == s.calib.q0(i, i));
    qbar += s.calib.q0(i, i) / 9.0;
  }
  CHECK(f.global[2] == doctest::Approx(qbar));
  MdpEnv again(s);
  again.reset(5);
  CHECK(again.features().node == f.node);
}

TEST_CASE("step: skip, invest and feature updates") {
  MdpEnv env(small());
  env.reset(11);
  auto out = env.step(pick(4, {}));
  CHECK(out.reward == 0.0);
  CHECK(out.state.step == 1);
  CHECK(out.state.partial.length() == 0);

  out = env.step(pick(4, {2, 0}));
  CHECK(out.state.invested == std::vector<int>{1, 0, 1, 0});
  CHECK(out.state.partial.length() == 1);
  CHECK(out.reward == doctest::Approx(roa_evaluate_prefix(env.scenario(), out.state.partial, 11).option_value));
  const auto f = env.features();
  CHECK(f.global[0] == doctest::Approx(2.0 / 5.0));
  CHECK(f.global[1] == doctest::Approx(0.5));
  CHECK(f.node[0] == 1.0);
  CHECK(f.node[4] == 0.0);
}

TEST_CASE("step: invalid actions leave the state untouched") {
  MdpEnv env(small());
  CHECK_THROWS_AS(env.step(pick(4, {0})), InvalidActionError);
  env.reset(1);
  env.step(pick(4, {1}));
  const MdpState before = env.state();
  const double cum = env.cumulative_reward();
  auto expect_constraint = [&](const std::vector<int>& a, const std::string& c) {
    try {
      env.step(a);
      FAIL("accepted an invalid action");
    } catch (const InvalidActionError& e) {
      CHECK(e.constraint() == c);
    }
    CHECK(env.state().invested == before.invested);
    CHECK(env.state().step == before.step);
    CHECK(env.cumulative_reward() == cum);
  };
  expect_constraint(pick(4, {1}), "masked_region");
  expect_constraint(pick(4, {0, 2, 3}), "max_size");
  expect_constraint({1, 0}, "action_length");
  expect_constraint({0, 0, 2, 0}, "action_value");
  // Three regions left; two skips leave two periods at k = 2.
  env.step(pick(4, {}));
  env.step(pick(4, {}));
  CHECK(env.mask().min_size == 1);
  CHECK(!env.mask().skip_allowed);
  try {
    env.step(pick(4, {}));
    FAIL("accepted a stranding skip");
  } catch (const InvalidActionError& e) {
    CHECK(e.constraint() == "min_size");
  }
}

TEST_CASE("episodes: telescoping, feasibility and determinism") {
  const auto s = small(5, 2, 5);
  std::mt19937_64 rng(2024);
  for (int e = 0; e < 12; ++e) {
    MdpEnv env(s, MdpConfig{0.9, 1});
    const std::uint64_t seed = derive_seed(77, static_cast<std::uint64_t>(e));
    env.reset(seed);
    std::vector<std::vector<int>> actions;
    while (!env.done()) {
      actions.push_back(random_action(env.mask(), rng));
      env.step(actions.back());
    }
    CHECK(env.state().step <= s.horizon);
    const auto& l = env.state().partial;
    REQUIRE(is_feasible(l, 5, 2, 5));
    const double v = roa_evaluate(s, l, seed).option_value;
    CHECK(std::abs(env.cumulative_reward() - v) <= 1e-9 * std::max(1.0, std::abs(v)));
    double disc = 0.0;
    for (std::size_t i = 0; i < env.rewards().size(); ++i) disc += std::pow(0.9, static_cast<double>(i)) * env.rewards()[i];
    CHECK(env.discounted_return() == doctest::Approx(disc));
    CHECK_THROWS_AS(env.step(pick(5, {})), InvalidActionError);

    MdpEnv replay(s, MdpConfig{0.9, 1});
    replay.reset(seed);
    for (const auto& a : actions) replay.step(a);
    CHECK(replay.rewards() == env.rewards());
  }
}

TEST_CASE("greedy policy is bounded by the enumeration optimum") {
  auto s = small(4, 2, 5);
  const auto best = evaluate_all(s, 9, 2);
  CHECK(best.count == 66);
  const auto g = greedy_sequence(s, 9);
  REQUIRE(is_feasible(g, 4, 2, 5));
  CHECK(roa_evaluate(s, g, 9).option_value <= best.best_value + 1e-9);
  CHECK(roa_evaluate(s, best.best, 9).option_value == doctest::Approx(best.best_value));
}

TEST_CASE("policies by name") {
  const auto s = small(5, 2, 5);
  CHECK(resolve_policy("myopia-h", s, 1) == myopia_sequence(s, MyopiaMode::High));
  CHECK(resolve_policy("myopia-l", s, 1) == myopia_sequence(s, MyopiaMode::Low));
  CHECK(resolve_policy("random", s, 1) == resolve_policy("random", s, 1));
  CHECK(is_feasible(resolve_policy("random", s, 2), 5, 2, 5));
  CHECK(format_sequence(resolve_policy("[[0,1],[2,3],[4]]", s, 1)) == "[[0,1],[2,3],[4]]");
  CHECK_THROWS_AS(resolve_policy("[[0,1,2],[3,4]]", s, 1), InfeasibleError);
  CHECK_THROWS_AS(resolve_policy("nope", s, 1), Error);
}

TEST_CASE("enumeration results do not depend on threads") {
  auto s = small(4, 2, 5);
  s.n_paths = 40;
  std::vector<double> a, b;
  const auto ra = evaluate_all(s, 4, 1, [&](std::uint64_t, const InvestmentSequence&, const RoaResult& r) {
    a.push_back(r.option_value);
  });
  const auto rb = evaluate_all(s, 4, 5, [&](std::uint64_t, const InvestmentSequence&, const RoaResult& r) {
    b.push_back(r.option_value);
  });
  CHECK(a == b);
  CHECK(ra.best == rb.best);
  CHECK(ra.best_value == *std::max_element(a.begin(), a.end()));
}

#include "ssrd/error.hpp"
#include "ssrd/rng.hpp"
#include "ssrd/sequences.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <map>
#include <tuple>
#include <set>

using namespace ssrd;

namespace {

InvestmentSequence seq(std::vector<std::vector<int>> ps) {
  InvestmentSequence s;
  for (auto& p : ps) s.portfolios.push_back(Portfolio{std::move(p)});
  return s;
}

Scenario with_baseline(const std::vector<double>& b, int k) {
  Scenario s;
  const int n = static_cast<int>(b.size());
  for (int i = 0; i < n; ++i) s.regions.push_back(Region{i, "r" + std::to_string(i), 1.0, b[static_cast<std::size_t>(i)], {}});
  s.calib = calibrate(s.regions, CalibrationRanges{});
  s.k = k;
  s.horizon = n;
  return s;
}

}  // namespace

TEST_CASE("feasibility rules") {
  CHECK(is_feasible(seq({{0, 1}, {2}, {3}}), 4, 2, 5));
  CHECK(!is_feasible(seq({{0, 1, 2}, {3}}), 4, 2, 5));
  CHECK(!is_feasible(seq({{0}, {1}, {2}, {3}, {4}, {5}}), 6, 2, 5));
  CHECK(!is_feasible(seq({{0, 1}, {1, 2}, {3}}), 4, 2, 5));
  CHECK(!is_feasible(seq({{0, 1}, {2}}), 4, 2, 5));
  CHECK(!is_feasible(seq({{0, 1}, {}, {2, 3}}), 4, 2, 5));
  CHECK(!is_feasible(seq({{0, 0}, {1}}), 2, 2, 5));
  CHECK(!is_feasible(seq({{0, 4}}), 2, 2, 5));
}

TEST_CASE("published counts") {
  CHECK(count_feasible(4, 2, 5) == 66);
  CHECK(count_feasible(4, 4, 5) == 75);
  CHECK(count_feasible(5, 2, 5) == 450);
  CHECK(count_feasible(5, 4, 5) == 540);
  CHECK(count_feasible(6, 2, 5) == 2970);
  CHECK(count_feasible(6, 3, 5) == 3830);
  CHECK(count_feasible(6, 4, 5) == 3950);
  CHECK(count_feasible(7, 2, 5) == 15120);
  CHECK(count_feasible(7, 3, 5) == 25410);
  CHECK(count_feasible(1, 1, 1) == 1);
  CHECK(count_feasible(3, 1, 2) == 0);
}

TEST_CASE("count matches a brute-force labelling oracle") {
  for (int n = 1; n <= 6; ++n)
    for (int k = 1; k <= n; ++k)
      for (int t = 1; t <= 5; ++t) {
        CAPTURE(n);
        CAPTURE(k);
        CAPTURE(t);
        CHECK(count_feasible(n, k, t) == static_cast<std::uint64_t>(testing::oracle_count(n, k, t)));
      }
}

TEST_CASE("enumerator streams each feasible sequence once, in order") {
  for (int n = 1; n <= 6; ++n)
    for (int k = 1; k <= n; ++k)
      for (int t = 1; t <= 5; ++t) {
        CAPTURE(n);
        CAPTURE(k);
        CAPTURE(t);
        SequenceEnumerator e(n, k, t);
        InvestmentSequence s;
        std::set<std::string> seen;
        std::vector<std::vector<int>> prev;
        std::uint64_t count = 0;
        bool ordered = true;
        while (e.next(s)) {
          REQUIRE(is_feasible(s, n, k, t));
          seen.insert(format_sequence(s));
          std::vector<std::vector<int>> key;
          for (const auto& p : s.portfolios) {
            auto r = p.regions;
            std::sort(r.begin(), r.end());
            key.push_back(r);
          }
          if (count > 0 && !(prev < key)) ordered = false;
          prev = key;
          ++count;
        }
        CHECK(ordered);
        CHECK(count == count_feasible(n, k, t));
        CHECK(seen.size() == count);
      }
}

TEST_CASE("enumerator: larger instances match the closed count") {
  for (auto [n, k, t] : {std::tuple{7, 2, 5}, std::tuple{7, 3, 5}, std::tuple{8, 3, 4}, std::tuple{7, 7, 6}}) {
    std::uint64_t count = 0;
    for_each_feasible(n, k, t, [&](const InvestmentSequence&) { return ++count, true; });
    CHECK(count == count_feasible(n, k, t));
  }
  std::uint64_t stopped = 0;
  for_each_feasible(4, 2, 5, [&](const InvestmentSequence&) { return ++stopped < 10; });
  CHECK(stopped == 10);

  SequenceEnumerator one(1, 1, 1);
  InvestmentSequence s;
  REQUIRE(one.next(s));
  CHECK(format_sequence(s) == "[[0]]");
  CHECK(!one.next(s));
}

TEST_CASE("portfolio counts") {
  CHECK(portfolio_count(7, 3) == 63);
  for (int n = 1; n <= 9; ++n) CHECK(portfolio_count(n, 1) == static_cast<std::uint64_t>(n));
  CHECK(portfolio_count(4, 4) == 15);
}

TEST_CASE("myopia baselines") {
  const auto s = with_baseline({5, 9, 1}, 2);
  CHECK(myopia_sequence(s, MyopiaMode::High) == seq({{1, 0}, {2}}));
  CHECK(myopia_sequence(s, MyopiaMode::Low) == seq({{2, 0}, {1}}));

  const auto four = with_baseline({3, 8, 1, 6}, 1);
  CHECK(myopia_sequence(four, MyopiaMode::High) == seq({{1}, {3}, {0}, {2}}));
  CHECK(myopia_sequence(four, MyopiaMode::Low) == seq({{2}, {0}, {3}, {1}}));

  const auto ties = with_baseline({4, 4, 4}, 1);
  CHECK(myopia_sequence(ties, MyopiaMode::High) == seq({{0}, {1}, {2}}));
  CHECK(myopia_sequence(ties, MyopiaMode::Low) == seq({{0}, {1}, {2}}));
}

TEST_CASE("random feasible sequences are feasible and cover the space") {
  Engine rng = make_engine(4, 0, Stream::Policy);
  std::set<std::string> seen;
  for (int i = 0; i < 4000; ++i) {
    const auto s = random_feasible_sequence(4, 2, 5, rng);
    REQUIRE(is_feasible(s, 4, 2, 5));
    seen.insert(format_sequence(s));
  }
  CHECK(seen.size() == 66);
  for (int i = 0; i < 200; ++i) CHECK(is_feasible(random_feasible_sequence(7, 3, 5, rng), 7, 3, 5));
  CHECK_THROWS_AS(random_feasible_sequence(5, 1, 4, rng), InfeasibleError);
}

TEST_CASE("random sequences are uniform over the feasible set") {
  // 66 cells, 66000 draws: chi-square with 65 dof has mean 65, sd ~11.4.
  Engine rng = make_engine(12, 0, Stream::Policy);
  std::map<std::string, int> hist;
  const int draws = 66000;
  for (int i = 0; i < draws; ++i) ++hist[format_sequence(random_feasible_sequence(4, 2, 5, rng))];
  double chi2 = 0.0;
  for (const auto& [_, c] : hist) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
  CHECK(hist.size() == 66);
  CHECK(chi2 < 65.0 + 5.0 * 11.4);
}

TEST_CASE("masks and the earliest schedule") {
  const auto s = seq({{3, 1}, {0}, {2}});
  CHECK(s.portfolios[0].mask() == 0b1010u);
  CHECK(s.covered_mask(0) == 0);
  CHECK(s.covered_mask(2) == 0b1011u);
  CHECK(s.covered_count(3) == 4);
  const auto e = earliest_schedule(s, 4);
  CHECK(e.invest_time == std::vector<int>{1, 0, 2, 0});
}

TEST_CASE("sequence literals") {
  const auto s = seq({{4}, {2, 0}, {1}, {3}});
  CHECK(format_sequence(s) == "[[4],[2,0],[1],[3]]");
  CHECK(parse_sequence(format_sequence(s)) == s);
  CHECK(parse_sequence(" [ [4] , [2, 0],[1],[3] ] ") == s);
  CHECK_THROWS_AS(parse_sequence("[[1],[2]"), ParseError);
  CHECK_THROWS_AS(parse_sequence("[[a]]"), ParseError);
  CHECK_THROWS_AS(parse_sequence("[1,2]"), ParseError);
  CHECK_THROWS_AS(parse_sequence("[[1]] x"), ParseError);
  CHECK_THROWS_AS(parse_sequence("[[-1]]"), ParseError);
}

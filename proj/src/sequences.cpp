#include "ssrd/sequences.hpp"

#include "ssrd/error.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <bit>
#include <cctype>
#include <numeric>

namespace ssrd {

std::uint64_t Portfolio::mask() const {
  std::uint64_t m = 0;
  for (int r : regions) m |= (std::uint64_t{1} << r);
  return m;
}

std::uint64_t InvestmentSequence::covered_mask(int h) const {
  std::uint64_t m = 0;
  for (int i = 0; i < h && i < length(); ++i) m |= portfolios[static_cast<std::size_t>(i)].mask();
  return m;
}

int InvestmentSequence::covered_count(int h) const { return std::popcount(covered_mask(h)); }

bool is_feasible(const InvestmentSequence& seq, int n_regions, int k, int horizon) {
  if (n_regions < 1 || n_regions > 63) return false;
  if (seq.length() > horizon) return false;
  std::uint64_t seen = 0;
  for (const Portfolio& p : seq.portfolios) {
    if (p.size() < 1 || p.size() > k) return false;
    for (int r : p.regions) {
      if (r < 0 || r >= n_regions) return false;
      const std::uint64_t bit = std::uint64_t{1} << r;
      if (seen & bit) return false;
      seen |= bit;
    }
  }
  return seen == (std::uint64_t{1} << n_regions) - 1;
}

// ---------------------------------------------------------------------------

namespace {

void list_portfolios(int n, int k, int start, std::uint64_t mask, int size, std::vector<std::uint64_t>& out) {
  for (int i = start; i < n; ++i) {
    const std::uint64_t m = mask | (std::uint64_t{1} << i);
    out.push_back(m);
    if (size + 1 < k) list_portfolios(n, k, i + 1, m, size + 1, out);
  }
}

Portfolio portfolio_from_mask(std::uint64_t m) {
  Portfolio p;
  while (m) {
    p.regions.push_back(std::countr_zero(m));
    m &= m - 1;
  }
  return p;
}

}  // namespace

SequenceEnumerator::SequenceEnumerator(int n_regions, int k, int horizon)
    : n_(n_regions), k_(std::min(k, n_regions)), horizon_(horizon) {
  if (n_ < 1 || n_ > 63) throw DataError("enumeration supports 1..63 regions");
  if (k_ < 1 || horizon_ < 1 || static_cast<long>(k_) * horizon_ < n_) {
    done_ = true;
    return;
  }
  full_ = (std::uint64_t{1} << n_) - 1;
  list_portfolios(n_, k_, 0, 0, 0, candidates_);
  remaining_.push_back(full_);
}

bool SequenceEnumerator::descend() {
  // Resumes the depth-first search at the current depth, trying candidates
  // from `start` on; reaches either a complete sequence or exhaustion.
  std::size_t start = 0;
  if (!choice_.empty() && remaining_.back() == 0) {
    start = choice_.back() + 1;
    choice_.pop_back();
    remaining_.pop_back();
  }
  while (true) {
    const std::size_t depth = choice_.size();
    const std::uint64_t rem = remaining_.back();
    if (rem == 0) return true;
    std::size_t found = candidates_.size();
    const long slots = horizon_ - static_cast<long>(depth);
    if (slots > 0 && std::popcount(rem) <= k_ * slots) {
      for (std::size_t c = start; c < candidates_.size(); ++c) {
        if ((candidates_[c] & ~rem) == 0) {
          found = c;
          break;
        }
      }
    }
    if (found < candidates_.size()) {
      choice_.push_back(found);
      remaining_.push_back(rem & ~candidates_[found]);
      start = 0;
      continue;
    }
    if (choice_.empty()) return false;
    start = choice_.back() + 1;
    choice_.pop_back();
    remaining_.pop_back();
  }
}

bool SequenceEnumerator::next(InvestmentSequence& out) {
  if (done_) return false;
  started_ = true;
  if (!descend()) {
    done_ = true;
    return false;
  }
  out.portfolios.clear();
  for (std::size_t c : choice_) out.portfolios.push_back(portfolio_from_mask(candidates_[c]));
  return true;
}

void for_each_feasible(int n_regions, int k, int horizon,
                       const std::function<bool(const InvestmentSequence&)>& visit) {
  SequenceEnumerator e(n_regions, k, horizon);
  InvestmentSequence seq;
  while (e.next(seq)) {
    if (!visit(seq)) return;
  }
}

// ---------------------------------------------------------------------------

namespace {

__extension__ using u128 = unsigned __int128;

std::vector<std::vector<u128>> binomials(int n) {
  std::vector<std::vector<u128>> c(static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i) {
    c[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(i + 1), 1);
    for (int j = 1; j < i; ++j)
      c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
          c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)] +
          c[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j)];
  }
  return c;
}

// within[r][b]: ordered partitions of r labelled items into at most b blocks
// of size ≤ k (within[0][b] = 1).
std::vector<std::vector<u128>> partition_table(int n, int k, int horizon) {
  const auto c = binomials(n);
  std::vector<std::vector<u128>> within(static_cast<std::size_t>(n + 1),
                                        std::vector<u128>(static_cast<std::size_t>(horizon + 1), 0));
  for (int b = 0; b <= horizon; ++b) within[0][static_cast<std::size_t>(b)] = 1;
  for (int r = 1; r <= n; ++r) {
    for (int b = 1; b <= horizon; ++b) {
      u128 total = 0;
      for (int s = 1; s <= std::min(k, r); ++s)
        total += c[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)] *
                 within[static_cast<std::size_t>(r - s)][static_cast<std::size_t>(b - 1)];
      within[static_cast<std::size_t>(r)][static_cast<std::size_t>(b)] = total;
    }
  }
  return within;
}

}  // namespace

std::uint64_t count_feasible(int n_regions, int k, int horizon) {
  if (n_regions < 1 || k < 1 || horizon < 1) return 0;
  if (n_regions > 30) throw DataError("count_feasible supports at most 30 regions");
  const auto within = partition_table(n_regions, k, horizon);
  const u128 v = within[static_cast<std::size_t>(n_regions)][static_cast<std::size_t>(horizon)];
  if (v > std::numeric_limits<std::uint64_t>::max()) throw DataError("sequence count overflows 64 bits");
  return static_cast<std::uint64_t>(v);
}

std::uint64_t portfolio_count(int n_regions, int k) {
  if (n_regions < 1 || k < 1) return 0;
  if (n_regions > 63) throw DataError("portfolio_count supports at most 63 regions");
  const auto c = binomials(n_regions);
  u128 total = 0;
  for (int i = 1; i <= std::min(k, n_regions); ++i)
    total += c[static_cast<std::size_t>(n_regions)][static_cast<std::size_t>(i)];
  return static_cast<std::uint64_t>(total);
}

// ---------------------------------------------------------------------------

InvestmentSequence myopia_sequence(const Scenario& scenario, MyopiaMode mode) {
  const auto b = scenario.calib.baseline_demand();
  std::vector<int> order(b.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
    const double bx = b[static_cast<std::size_t>(x)], by = b[static_cast<std::size_t>(y)];
    return mode == MyopiaMode::High ? bx > by : bx < by;
  });
  InvestmentSequence seq;
  const int k = std::max(1, scenario.k);
  for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(k)) {
    Portfolio p;
    for (std::size_t j = i; j < std::min(order.size(), i + static_cast<std::size_t>(k)); ++j)
      p.regions.push_back(order[j]);
    seq.portfolios.push_back(std::move(p));
  }
  return seq;
}

InvestmentSequence random_feasible_sequence(int n_regions, int k, int horizon, Engine& rng) {
  if (count_feasible(n_regions, k, horizon) == 0)
    throw InfeasibleError(fmt::format("no feasible sequence for N={} k={} T={}", n_regions, k, horizon));
  const auto within = partition_table(n_regions, k, horizon);
  const auto c = binomials(n_regions);
  std::vector<int> remaining(static_cast<std::size_t>(n_regions));
  std::iota(remaining.begin(), remaining.end(), 0);
  InvestmentSequence seq;
  int blocks = horizon;
  while (!remaining.empty()) {
    const int r = static_cast<int>(remaining.size());
    std::vector<double> w;
    for (int s = 1; s <= std::min(k, r); ++s)
      w.push_back(static_cast<double>(c[static_cast<std::size_t>(r)][static_cast<std::size_t>(s)] *
                                      within[static_cast<std::size_t>(r - s)][static_cast<std::size_t>(blocks - 1)]));
    std::discrete_distribution<int> pick(w.begin(), w.end());
    const int size = pick(rng) + 1;
    std::shuffle(remaining.begin(), remaining.end(), rng);
    Portfolio p;
    p.regions.assign(remaining.begin(), remaining.begin() + size);
    std::sort(p.regions.begin(), p.regions.end());
    remaining.erase(remaining.begin(), remaining.begin() + size);
    std::sort(remaining.begin(), remaining.end());
    seq.portfolios.push_back(std::move(p));
    --blocks;
  }
  return seq;
}

InvestmentSchedule earliest_schedule(const InvestmentSequence& seq, int n_regions) {
  InvestmentSchedule s = InvestmentSchedule::never(n_regions);
  for (int h = 0; h < seq.length(); ++h)
    for (int r : seq.portfolios[static_cast<std::size_t>(h)].regions) {
      if (r >= 0 && r < n_regions) s.invest_time[static_cast<std::size_t>(r)] = h;
    }
  return s;
}

// ---------------------------------------------------------------------------

std::string format_sequence(const InvestmentSequence& seq) {
  std::string out = "[";
  for (std::size_t h = 0; h < seq.portfolios.size(); ++h) {
    if (h) out += ",";
    out += "[";
    const auto& regs = seq.portfolios[h].regions;
    for (std::size_t i = 0; i < regs.size(); ++i) {
      if (i) out += ",";
      out += std::to_string(regs[i]);
    }
    out += "]";
  }
  return out + "]";
}

InvestmentSequence parse_sequence(const std::string& text) {
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  auto expect = [&](char c) {
    skip_ws();
    if (pos >= text.size() || text[pos] != c)
      throw ParseError(fmt::format("sequence literal: expected '{}' at offset {} in '{}'", c, pos, text));
    ++pos;
  };
  auto peek = [&]() -> char {
    skip_ws();
    return pos < text.size() ? text[pos] : '\0';
  };

  InvestmentSequence seq;
  expect('[');
  if (peek() == ']') {
    ++pos;
  } else {
    while (true) {
      expect('[');
      Portfolio p;
      if (peek() != ']') {
        while (true) {
          skip_ws();
          std::size_t start = pos;
          while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
          if (start == pos) throw ParseError(fmt::format("sequence literal: expected region id at offset {}", pos));
          p.regions.push_back(std::stoi(text.substr(start, pos - start)));
          if (peek() == ',') {
            ++pos;
            continue;
          }
          break;
        }
      }
      expect(']');
      seq.portfolios.push_back(std::move(p));
      if (peek() == ',') {
        ++pos;
        continue;
      }
      break;
    }
    expect(']');
  }
  skip_ws();
  if (pos != text.size()) throw ParseError("sequence literal: trailing characters in '" + text + "'");
  return seq;
}

}  // namespace ssrd

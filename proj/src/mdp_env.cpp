#include "ssrd/mdp_env.hpp"

#include "ssrd/error.hpp"
#include "ssrd/valuation.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>

namespace ssrd {

int MdpState::invested_count() const {
  return static_cast<int>(std::count(invested.begin(), invested.end(), 1));
}

ActionMask action_mask(const MdpState& state, int n_regions, int k, int horizon) {
  ActionMask m;
  m.allowed.assign(static_cast<std::size_t>(n_regions), false);
  int uninvested = 0;
  for (int i = 0; i < n_regions; ++i) {
    const bool free = state.invested[static_cast<std::size_t>(i)] == 0;
    m.allowed[static_cast<std::size_t>(i)] = free;
    uninvested += free;
  }
  if (uninvested == 0 || state.step >= horizon) return m;
  const int after = horizon - state.step - 1;
  m.min_size = std::max(0, uninvested - k * after);
  m.max_size = std::min(k, uninvested);
  m.skip_allowed = m.min_size == 0;
  return m;
}

MdpFeatures state_features(const MdpState& state, const Scenario& scenario) {
  const int n = scenario.n_regions();
  const double nu = static_cast<double>(state.invested_count()) / n;
  const double tbar = static_cast<double>(state.step) / scenario.horizon;
  MdpFeatures f;
  f.n_regions = n;
  f.node.reserve(static_cast<std::size_t>(n * kNodeFeatures));
  double q_bar = 0.0;
  for (int i = 0; i < n; ++i) {
    const double qii = scenario.calib.q0(i, i);
    q_bar += qii;
    f.node.insert(f.node.end(), {static_cast<double>(state.invested[static_cast<std::size_t>(i)]), nu, tbar, qii});
  }
  f.global = {tbar, nu, q_bar / n};
  return f;
}

MdpEnv::MdpEnv(Scenario scenario, MdpConfig config) : scenario_(std::move(scenario)), config_(config) {
  scenario_.validate();
  if (!(config_.gamma > 0.0 && config_.gamma <= 1.0)) throw DataError("gamma must lie in (0, 1]");
}

const MdpState& MdpEnv::reset(std::uint64_t episode_seed) {
  state_ = MdpState{std::vector<int>(static_cast<std::size_t>(scenario_.n_regions()), 0), {}, 0};
  episode_seed_ = episode_seed;
  active_ = true;
  current_value_ = 0.0;
  cumulative_ = 0.0;
  discounted_ = 0.0;
  rewards_.clear();
  cache_.clear();
  return state_;
}

bool MdpEnv::done() const {
  return active_ && (state_.invested_count() == scenario_.n_regions() || state_.step >= scenario_.horizon);
}

ActionMask MdpEnv::mask() const { return action_mask(state_, scenario_.n_regions(), scenario_.k, scenario_.horizon); }

MdpFeatures MdpEnv::features() const { return state_features(state_, scenario_); }

double MdpEnv::prefix_value(const InvestmentSequence& prefix) {
  if (prefix.portfolios.empty()) return 0.0;
  const std::string key = format_sequence(prefix);
  if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  const double v = roa_evaluate_prefix(scenario_, prefix, episode_seed_, config_.threads).option_value;
  cache_.emplace(key, v);
  return v;
}

StepOutcome MdpEnv::step(const std::vector<int>& action) {
  const int n = scenario_.n_regions();
  if (!active_) throw InvalidActionError("episode_inactive", "reset must precede step");
  if (done()) throw InvalidActionError("episode_done", "episode already finished");
  if (static_cast<int>(action.size()) != n)
    throw InvalidActionError("action_length", fmt::format("action has {} entries, expected {}", action.size(), n));
  const ActionMask m = mask();
  Portfolio z;
  for (int i = 0; i < n; ++i) {
    const int a = action[static_cast<std::size_t>(i)];
    if (a != 0 && a != 1)
      throw InvalidActionError("action_value", fmt::format("action entry {} is {}, expected 0 or 1", i, a));
    if (a == 1) {
      if (!m.allowed[static_cast<std::size_t>(i)])
        throw InvalidActionError("masked_region", fmt::format("region {} is already invested", i));
      z.regions.push_back(i);
    }
  }
  if (z.size() > m.max_size)
    throw InvalidActionError("max_size", fmt::format("portfolio size {} exceeds max_size {}", z.size(), m.max_size));
  if (z.size() < m.min_size)
    throw InvalidActionError("min_size", fmt::format("portfolio size {} below min_size {} needed to finish by T",
                                                     z.size(), m.min_size));

  double reward = 0.0;
  if (z.size() > 0) {
    InvestmentSequence next = state_.partial;
    next.portfolios.push_back(z);
    const double v = prefix_value(next);
    reward = v - current_value_;
    current_value_ = v;
    for (int r : z.regions) state_.invested[static_cast<std::size_t>(r)] = 1;
    state_.partial = std::move(next);
  }
  discounted_ += std::pow(config_.gamma, state_.step) * reward;
  cumulative_ += reward;
  rewards_.push_back(reward);
  ++state_.step;
  return {state_, reward, done()};
}

}  // namespace ssrd

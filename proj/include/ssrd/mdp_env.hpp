#pragma once

#include "ssrd/scenario.hpp"
#include "ssrd/sequences.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ssrd {

struct MdpConfig {
  double gamma = 1.0;  ///< return discount; rewards themselves are undiscounted
  int threads = 1;     ///< path simulation workers per prefix valuation
};

struct MdpState {
  std::vector<int> invested;  ///< 0/1 per region
  InvestmentSequence partial;
  int step = 0;  ///< n, periods consumed

  int invested_count() const;
};

inline constexpr int kNodeFeatures = 4;
inline constexpr int kGlobalFeatures = 3;

/// Flat feature arrays: node is N×4 row-major [I, ν, t̄, Q_ii], global is
/// [t̄, ν, Q̄] with Q̄ the mean initial intra demand.
struct MdpFeatures {
  int n_regions = 0;
  std::vector<double> node;
  std::vector<double> global;
};

struct ActionMask {
  std::vector<bool> allowed;  ///< region uninvested
  int min_size = 0;           ///< smallest size that still completes within T
  int max_size = 0;
  bool skip_allowed = false;
};

struct StepOutcome {
  MdpState state;
  double reward = 0.0;
  bool done = false;
};

/// Action bounds at a state. min_size = max(0, U − k(T − n − 1)) where U
/// counts uninvested regions, so that the remaining periods can always
/// absorb the rest.
ActionMask action_mask(const MdpState& state, int n_regions, int k, int horizon);

MdpFeatures state_features(const MdpState& state, const Scenario& scenario);

/// Finite-horizon sequencing MDP with marginal option-value rewards. One
/// instance serves one episode at a time and is not thread-safe.
class MdpEnv {
 public:
  explicit MdpEnv(Scenario scenario, MdpConfig config = {});

  const MdpState& reset(std::uint64_t episode_seed);
  /// Throws InvalidActionError and leaves the state untouched when the
  /// action breaks the mask or size bounds.
  StepOutcome step(const std::vector<int>& action);

  ActionMask mask() const;
  MdpFeatures features() const;
  const MdpState& state() const { return state_; }
  bool done() const;
  bool active() const { return active_; }

  /// V_ROA of a prefix under the episode seed, cached per episode.
  double prefix_value(const InvestmentSequence& prefix);

  std::uint64_t episode_seed() const { return episode_seed_; }
  double cumulative_reward() const { return cumulative_; }
  double discounted_return() const { return discounted_; }
  const std::vector<double>& rewards() const { return rewards_; }
  const Scenario& scenario() const { return scenario_; }
  const MdpConfig& config() const { return config_; }

 private:
  Scenario scenario_;
  MdpConfig config_;
  MdpState state_;
  std::uint64_t episode_seed_ = 0;
  bool active_ = false;
  double current_value_ = 0.0;
  double cumulative_ = 0.0;
  double discounted_ = 0.0;
  std::vector<double> rewards_;
  std::map<std::string, double> cache_;
};

}  // namespace ssrd

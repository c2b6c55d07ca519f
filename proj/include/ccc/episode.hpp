#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ccc/game.hpp"
#include "ccc/policy.hpp"

namespace ccc {

// Everything an agent may learn about a finished turn. `partner_action` and
// `state_before` (the world state before the joint action) are only filled
// for agents that declare needs_full_info(); everyone else gets -1/null, so
// consequence-based agents provably act on own observation and own reward
// alone.
struct TurnInfo {
  const Game* game = nullptr;
  const State* state_before = nullptr;
  int player = -1;
  int my_action = -1;
  int partner_action = -1;
  double my_reward = 0.0;
};

// A test-time strategy. One instance serves one match: implementations may
// keep arbitrary per-match state. The per-turn protocol is act, then exactly
// one observe_turn.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual int act(std::span<const double> obs, Rng& rng) = 0;
  virtual void observe_turn(const TurnInfo& info) { (void)info; }

  // Full-information agents receive the partner's action and the pre-step
  // world state, and are only legal on fully observed games.
  virtual bool needs_full_info() const { return false; }
};

// Unconditional strategy: samples the wrapped policy, ignores rewards.
class PolicyAgent final : public Agent {
 public:
  explicit PolicyAgent(Policy policy) : policy_(std::move(policy)) {}

  int act(std::span<const double> obs, Rng& rng) override { return policy_.sample(obs, rng); }

  const Policy& policy() const { return policy_; }

 private:
  Policy policy_;
};

struct EpisodeTrace {
  uint64_t seed = 0;
  int turns = 0;
  std::vector<std::array<int, 2>> actions;
  std::vector<std::array<double, 2>> rewards;
  // cumulative[t] is the exact prefix sum of rewards[0..t].
  std::vector<std::array<double, 2>> cumulative;
  std::array<double, 2> total{};
  // Filled only when requested; observations[p][t] is player p's view
  // before acting at turn t.
  std::array<std::vector<std::vector<double>>, 2> observations;
};

struct RateEstimate {
  double rate = 0.0;        // mean reward per turn
  double half_width = 0.0;  // 95% confidence half-width across episodes
  int64_t turns_used = 0;
  int episodes_used = 0;
};

// Plays `length` turns (fewer if the game ends itself). Deterministic in
// (game, agents, seed); world and both action streams are derived
// independently from `seed`.
EpisodeTrace run_episode(const Game& game, Agent& agent1, Agent& agent2, int length,
                         uint64_t seed, bool record_observations = false);

// Monte Carlo average-reward rate over independent episodes, one child seed
// per episode index.
std::array<RateEstimate, 2> estimate_rate(const Game& game, const Policy& pi1, const Policy& pi2,
                                          int episodes, int length, uint64_t seed);

}  // namespace ccc

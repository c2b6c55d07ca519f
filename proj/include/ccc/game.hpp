#pragma once

#include <array>
#include <iterator>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ccc/errors.hpp"
#include "ccc/rng.hpp"

namespace ccc {

// Static description of a two-player game. Observation lengths may differ
// per seat; reward_bound is a hard bound on |per-turn reward| used to
// sanity-check rate estimates.
struct GameSpec {
  std::string name;
  std::array<int, 2> action_count{};
  std::array<int, 2> observation_length{};
  int max_episode_length = 0;  // 0 = unbounded, driver picks the horizon
  double reward_bound = 0.0;
  bool fully_observed = false;
};

// One additive piece of a player's per-turn reward. Environments only emit
// these for components that a reward wrapper may want to transform;
// `penalty` marks losses inflicted by the opponent.
struct RewardComponent {
  int player = 0;
  double amount = 0.0;
  bool penalty = false;
};

struct StepOutcome {
  std::array<double, 2> rewards{};
  bool terminal = false;
  std::vector<RewardComponent> penalty_events;
};

// Mutable world state. Concrete environments subclass and keep all hidden
// state here, including the RNG: advancing two equal states with equal
// actions yields bit-identical successors.
class State {
 public:
  virtual ~State() = default;
  virtual std::unique_ptr<State> clone() const = 0;

  int turn() const { return turn_; }
  bool terminal() const { return terminal_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

 protected:
  explicit State(uint64_t seed) : rng_(seed) {}
  State(const State&) = default;

  int turn_ = 0;
  bool terminal_ = false;
  Rng rng_;
};

// A game instance is immutable; all mutation happens on State. The public
// entry points validate the caller contract, then defer to the environment.
class Game {
 public:
  virtual ~Game() = default;

  virtual const GameSpec& spec() const = 0;
  virtual std::unique_ptr<State> new_game(uint64_t seed) const = 0;

  std::vector<double> observe(const State& state, int player) const {
    std::vector<double> out(spec().observation_length[check_player(player)]);
    observe_into(state, player, out);
    return out;
  }

  void observe(const State& state, int player, std::span<double> out) const {
    if (std::ssize(out) != spec().observation_length[check_player(player)])
      throw ContractError("observation buffer has wrong length for " + spec().name);
    observe_into(state, player, out);
  }

  StepOutcome step(State& state, int action1, int action2) const {
    if (state.terminal()) throw ContractError("step on a terminal state of " + spec().name);
    check_action(0, action1);
    check_action(1, action2);
    return step_impl(state, action1, action2);
  }

 protected:
  virtual void observe_into(const State& state, int player, std::span<double> out) const = 0;
  virtual StepOutcome step_impl(State& state, int action1, int action2) const = 0;

  int check_player(int player) const {
    if (player != 0 && player != 1) throw ContractError("player index must be 0 or 1");
    return player;
  }

  void check_action(int player, int action) const {
    if (action < 0 || action >= spec().action_count[player])
      throw ContractError("action " + std::to_string(action) + " out of range for player " +
                          std::to_string(player) + " in " + spec().name);
  }
};

}  // namespace ccc

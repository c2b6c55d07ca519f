#pragma once

#include <memory>

#include "ccc/game.hpp"

namespace ccc {

class RiskyState final : public State {
 public:
  RiskyState(uint64_t seed, std::unique_ptr<State> inner)
      : State(derive_seed(seed, "risk")), inner_(std::move(inner)) {}
  RiskyState(const RiskyState& other) : State(other), inner_(other.inner_->clone()) {}

  std::unique_ptr<State> clone() const override { return std::make_unique<RiskyState>(*this); }

  State& inner() { return *inner_; }
  const State& inner() const { return *inner_; }

 private:
  std::unique_ptr<State> inner_;
  friend class RiskyGame;
};

// Reward decorator: every penalty component v the base game emits is
// replaced by v/p with probability p and by 0 otherwise, preserving its
// expectation while making consequences rare and severe. Non-penalty rewards
// pass through untouched. p = 1 reproduces the base game exactly, draw for
// draw.
class RiskyGame final : public Game {
 public:
  RiskyGame(std::shared_ptr<const Game> base, double p);

  const GameSpec& spec() const override { return spec_; }
  std::unique_ptr<State> new_game(uint64_t seed) const override;

  const Game& base() const { return *base_; }
  double p() const { return p_; }

 protected:
  void observe_into(const State& state, int player, std::span<double> out) const override;
  StepOutcome step_impl(State& state, int action1, int action2) const override;

 private:
  std::shared_ptr<const Game> base_;
  double p_;
  GameSpec spec_;
};

}  // namespace ccc

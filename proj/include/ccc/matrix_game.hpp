#pragma once

#include "ccc/game.hpp"

namespace ccc {

// Symmetric 2x2 social dilemma, optionally extended with a costly "gift"
// action. Payoffs are the row player's own rewards; construction rejects
// tables that are not a social dilemma (need dc > cc > dd > cd and
// 2*cc > dc + cd).
//
// defect_hit_prob < 1 makes a defection's consequence land sparsely: the
// defector's gain (dc - cc) is paid deterministically every defect turn, but
// the victim's share arrives as a hit of (cd - cc)/defect_hit_prob with that
// probability, preserving the payoff table in expectation (this requires the
// additive identity dd = dc + cd - cc). At 1 this is exactly the table.
// Sparse landings model games where defection always pays the defector but
// only occasionally harms the victim, which is what makes consequence-based
// detection slow while intention-based detection stays easy.
struct MatrixGameConfig {
  double cc = 2.0;
  double cd = 0.0;
  double dc = 3.0;
  double dd = 1.0;
  double defect_hit_prob = 1.0;
  bool gift_action = false;    // adds action G = cooperate + transfer
  double gift_transfer = 2.0;  // paid by the giver, received by the partner
};

class MatrixState final : public State {
 public:
  MatrixState(uint64_t seed) : State(seed) {}
  std::unique_ptr<State> clone() const override { return std::make_unique<MatrixState>(*this); }

  int prev1 = -1;  // -1 before the first turn
  int prev2 = -1;

 private:
  friend class MatrixGame;
};

class MatrixGame final : public Game {
 public:
  static constexpr int kCooperate = 0;
  static constexpr int kDefect = 1;
  static constexpr int kGift = 2;

  explicit MatrixGame(const MatrixGameConfig& cfg);

  const GameSpec& spec() const override { return spec_; }
  std::unique_ptr<State> new_game(uint64_t seed) const override;

  const MatrixGameConfig& config() const { return cfg_; }

  // Expected per-turn rewards for a fixed joint action, marginalizing the
  // landing draws. Equals the payoff table for every defect_hit_prob.
  std::array<double, 2> expected_rewards(int action1, int action2) const;

  // Observation the acting player would see when the previous joint action
  // was (mine, theirs); -1/-1 encodes the start of a game.
  std::vector<double> obs_pattern(int mine, int theirs) const;

 protected:
  void observe_into(const State& state, int player, std::span<double> out) const override;
  StepOutcome step_impl(State& state, int action1, int action2) const override;

 private:
  double pay(int a1, int a2) const;  // row player's table entry, gift folded to C

  MatrixGameConfig cfg_;
  GameSpec spec_;
};

}  // namespace ccc

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ccc/game.hpp"

namespace ccc {

struct FisheryFish {
  int row = 0;
  int col = 0;
  bool mature = false;  // true iff the fish has crossed the midline
  int origin = 0;       // side whose outer column it spawned in
};

struct FisheryConfig {
  double spawn_prob = 0.25;   // per side per turn
  int max_fish_per_side = 6;  // cap on fish located on one half
  double young_reward = 1.0;
  double mature_reward = 3.0;
  std::array<int, 2> start_row{2, 2};
  std::array<int, 2> start_col{2, 7};
};

class FisheryState final : public State {
 public:
  explicit FisheryState(uint64_t seed) : State(seed) {}
  std::unique_ptr<State> clone() const override { return std::make_unique<FisheryState>(*this); }

  std::array<int, 2> agent_row{};
  std::array<int, 2> agent_col{};
  std::vector<FisheryFish> fish;

  // Lifetime accounting: every spawned fish is on the grid, consumed, or
  // despawned off the far edge.
  int64_t spawned = 0;
  int64_t consumed = 0;
  int64_t despawned = 0;
  double value_extracted = 0.0;

 private:
  friend class FisheryGame;
};

// 5x10 lake split into two 5x5 halves, one per player. Fish spawn young in a
// side's outermost column and swim toward the other side — young fish one
// column every other turn, mature fish one column every turn — maturing when
// they cross the midline and despawning off the far edge. An agent catches by
// walking onto a fish's cell: only an agent that changed cells this turn
// consumes the fish at its landing cell, so a parked agent never catches.
// Each player observes only its own half. Actions are in a seat-canonical
// frame (outward = toward own outer column), so one policy can play either
// seat; observations mirror columns for seat 1 the same way.
class FisheryGame final : public Game {
 public:
  static constexpr int kUp = 0;
  static constexpr int kDown = 1;
  static constexpr int kOutward = 2;
  static constexpr int kInward = 3;
  static constexpr int kStay = 4;
  static constexpr int kRows = 5;
  static constexpr int kCols = 10;
  static constexpr int kHalf = 5;

  explicit FisheryGame(const FisheryConfig& cfg = {});

  const GameSpec& spec() const override { return spec_; }
  std::unique_ptr<State> new_game(uint64_t seed) const override;

  const FisheryConfig& config() const { return cfg_; }

  static int half_of(int col) { return col < kHalf ? 0 : 1; }

 protected:
  void observe_into(const State& state, int player, std::span<double> out) const override;
  StepOutcome step_impl(State& state, int action1, int action2) const override;

 private:
  FisheryConfig cfg_;
  GameSpec spec_;
};

}  // namespace ccc

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "ccc/game.hpp"

namespace ccc {

struct Coin {
  int row = 0;
  int col = 0;
  int color = 0;  // index of the player whose color it is
};

struct CoinsConfig {
  double spawn_prob = 0.2;
  int max_coins = 4;
  double pickup_reward = 1.0;
  double victim_penalty = -2.0;  // to the owner when the other player takes their coin
  std::array<int, 2> start_row{0, 7};
  std::array<int, 2> start_col{0, 7};
};

class CoinsState final : public State {
 public:
  explicit CoinsState(uint64_t seed) : State(seed) {}
  std::unique_ptr<State> clone() const override { return std::make_unique<CoinsState>(*this); }

  std::array<int, 2> agent_row{};
  std::array<int, 2> agent_col{};
  std::vector<Coin> coins;

 private:
  friend class CoinsGame;
};

// 8x8 board where colored coins appear at random empty cells. Any player may
// pick up any coin for +1 by walking onto its cell (standing still never
// collects — a coin that spawns under a parked agent waits to be walked
// over); taking the other player's color costs the owner 2 points (emitted
// as a penalty component, so a reward wrapper can transform it). Fully
// observed. Seat 1 sees and acts through a 180-degree rotation of the board,
// making the two seats interchangeable for one policy.
class CoinsGame final : public Game {
 public:
  static constexpr int kUp = 0;
  static constexpr int kDown = 1;
  static constexpr int kLeft = 2;
  static constexpr int kRight = 3;
  static constexpr int kStay = 4;
  static constexpr int kSize = 8;

  explicit CoinsGame(const CoinsConfig& cfg = {});

  const GameSpec& spec() const override { return spec_; }
  std::unique_ptr<State> new_game(uint64_t seed) const override;

  const CoinsConfig& config() const { return cfg_; }

 protected:
  void observe_into(const State& state, int player, std::span<double> out) const override;
  StepOutcome step_impl(State& state, int action1, int action2) const override;

 private:
  CoinsConfig cfg_;
  GameSpec spec_;
};

}  // namespace ccc

#include "ccc/coins.hpp"

#include <algorithm>

#include "ccc/errors.hpp"

namespace ccc {

namespace {
constexpr int kCells = CoinsGame::kSize * CoinsGame::kSize;

int canonical_index(int player, int row, int col) {
  if (player == 1) {
    row = CoinsGame::kSize - 1 - row;
    col = CoinsGame::kSize - 1 - col;
  }
  return row * CoinsGame::kSize + col;
}
}  // namespace

CoinsGame::CoinsGame(const CoinsConfig& cfg) : cfg_(cfg) {
  if (!(cfg.spawn_prob >= 0.0 && cfg.spawn_prob <= 1.0))
    throw ConfigError("spawn_prob must be in [0, 1]");
  if (cfg.max_coins < 1 || cfg.max_coins > kCells) throw ConfigError("max_coins out of range");
  if (cfg.victim_penalty > 0.0) throw ConfigError("victim_penalty must be <= 0");
  for (int p = 0; p < 2; ++p)
    if (cfg.start_row[p] < 0 || cfg.start_row[p] >= kSize || cfg.start_col[p] < 0 ||
        cfg.start_col[p] >= kSize)
      throw ConfigError("start position outside the board");
  spec_.name = "coins";
  spec_.action_count = {5, 5};
  spec_.observation_length = {4 * kCells, 4 * kCells};
  spec_.max_episode_length = 0;
  spec_.reward_bound = cfg.pickup_reward - cfg.victim_penalty;
  spec_.fully_observed = true;
}

std::unique_ptr<State> CoinsGame::new_game(uint64_t seed) const {
  auto s = std::make_unique<CoinsState>(seed);
  s->agent_row = cfg_.start_row;
  s->agent_col = cfg_.start_col;
  return s;
}

void CoinsGame::observe_into(const State& state, int player, std::span<double> out) const {
  const auto& s = static_cast<const CoinsState&>(state);
  std::fill(out.begin(), out.end(), 0.0);
  out[0 * kCells + canonical_index(player, s.agent_row[player], s.agent_col[player])] = 1.0;
  int other = 1 - player;
  out[1 * kCells + canonical_index(player, s.agent_row[other], s.agent_col[other])] = 1.0;
  for (const Coin& c : s.coins) {
    int ch = c.color == player ? 2 : 3;
    out[ch * kCells + canonical_index(player, c.row, c.col)] += 1.0;
  }
}

StepOutcome CoinsGame::step_impl(State& state, int action1, int action2) const {
  auto& s = static_cast<CoinsState&>(state);
  StepOutcome out;
  const std::array<int, 2> actions{action1, action2};
  const std::array<int, 2> prev_row = s.agent_row;
  const std::array<int, 2> prev_col = s.agent_col;

  for (int p = 0; p < 2; ++p) {
    int dr = 0, dc = 0;
    switch (actions[p]) {
      case kUp: dr = -1; break;
      case kDown: dr = 1; break;
      case kLeft: dc = -1; break;
      case kRight: dc = 1; break;
      default: break;
    }
    if (p == 1) {
      dr = -dr;  // seat 1 acts in the rotated frame
      dc = -dc;
    }
    s.agent_row[p] = std::clamp(s.agent_row[p] + dr, 0, kSize - 1);
    s.agent_col[p] = std::clamp(s.agent_col[p] + dc, 0, kSize - 1);
  }

  // Pickup is by moving over a coin; standing still never collects one (a
  // coin that spawns under a stationary agent stays until someone walks over
  // it). Matches the fishery catch rule.
  for (size_t i = 0; i < s.coins.size();) {
    const Coin& c = s.coins[i];
    const auto moved = [&](int p) {
      return s.agent_row[p] != prev_row[p] || s.agent_col[p] != prev_col[p];
    };
    bool at0 = moved(0) && s.agent_row[0] == c.row && s.agent_col[0] == c.col;
    bool at1 = moved(1) && s.agent_row[1] == c.row && s.agent_col[1] == c.col;
    if (!at0 && !at1) {
      ++i;
      continue;
    }
    int picker = at0 && at1 ? static_cast<int>(s.rng().next_below(2)) : (at0 ? 0 : 1);
    out.rewards[picker] += cfg_.pickup_reward;
    if (c.color != picker) {
      out.rewards[c.color] += cfg_.victim_penalty;
      out.penalty_events.push_back({c.color, cfg_.victim_penalty, true});
    }
    s.coins[i] = s.coins.back();
    s.coins.pop_back();
  }

  if (s.rng().next_bernoulli(cfg_.spawn_prob) &&
      static_cast<int>(s.coins.size()) < cfg_.max_coins) {
    int color = static_cast<int>(s.rng().next_below(2));
    std::array<bool, kCells> occupied{};
    for (const Coin& c : s.coins) occupied[c.row * kSize + c.col] = true;
    int n_open = kCells - static_cast<int>(s.coins.size());
    int pick = static_cast<int>(s.rng().next_below(static_cast<uint32_t>(n_open)));
    for (int cell = 0; cell < kCells; ++cell) {
      if (occupied[cell]) continue;
      if (pick == 0) {
        s.coins.push_back({cell / kSize, cell % kSize, color});
        break;
      }
      pick -= 1;
    }
  }

  s.turn_ += 1;
  return out;
}

}  // namespace ccc

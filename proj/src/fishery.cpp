#include "ccc/fishery.hpp"

#include <algorithm>

#include "ccc/errors.hpp"

namespace ccc {

namespace {

// Column as seen from a seat: 0 is the seat's outermost column, kHalf-1 is
// adjacent to the midline.
int canonical_col(int player, int col) {
  return player == 0 ? col : FisheryGame::kCols - 1 - col;
}

int outer_col(int side) { return side == 0 ? 0 : FisheryGame::kCols - 1; }

}  // namespace

FisheryGame::FisheryGame(const FisheryConfig& cfg) : cfg_(cfg) {
  if (!(cfg.spawn_prob >= 0.0 && cfg.spawn_prob <= 1.0))
    throw ConfigError("spawn_prob must be in [0, 1]");
  if (cfg.max_fish_per_side < 1) throw ConfigError("max_fish_per_side must be >= 1");
  if (cfg.young_reward < 0.0 || cfg.mature_reward < 0.0)
    throw ConfigError("fish rewards must be nonnegative");
  for (int p = 0; p < 2; ++p) {
    if (cfg.start_row[p] < 0 || cfg.start_row[p] >= kRows)
      throw ConfigError("start_row outside the grid");
    if (half_of(cfg.start_col[p]) != p) throw ConfigError("start_col outside the player's half");
  }
  spec_.name = "fishery";
  spec_.action_count = {5, 5};
  spec_.observation_length = {3 * kRows * kHalf, 3 * kRows * kHalf};
  spec_.max_episode_length = 0;
  spec_.reward_bound =
      std::max(cfg.young_reward, cfg.mature_reward) * (2 * cfg.max_fish_per_side);
  spec_.fully_observed = false;
}

std::unique_ptr<State> FisheryGame::new_game(uint64_t seed) const {
  auto s = std::make_unique<FisheryState>(seed);
  s->agent_row = cfg_.start_row;
  s->agent_col = cfg_.start_col;
  return s;
}

void FisheryGame::observe_into(const State& state, int player, std::span<double> out) const {
  const auto& s = static_cast<const FisheryState&>(state);
  std::fill(out.begin(), out.end(), 0.0);
  constexpr int kCells = kRows * kHalf;
  out[0 * kCells + s.agent_row[player] * kHalf + canonical_col(player, s.agent_col[player])] =
      1.0;
  for (const FisheryFish& f : s.fish) {
    if (half_of(f.col) != player) continue;
    int ch = f.mature ? 2 : 1;
    out[ch * kCells + f.row * kHalf + canonical_col(player, f.col)] += 1.0;
  }
}

StepOutcome FisheryGame::step_impl(State& state, int action1, int action2) const {
  auto& s = static_cast<FisheryState&>(state);
  StepOutcome out;
  const std::array<int, 2> actions{action1, action2};
  const std::array<int, 2> prev_row = s.agent_row;
  const std::array<int, 2> prev_col = s.agent_col;

  for (int p = 0; p < 2; ++p) {
    int dr = 0, dc = 0;
    switch (actions[p]) {
      case kUp: dr = -1; break;
      case kDown: dr = 1; break;
      case kOutward: dc = p == 0 ? -1 : 1; break;
      case kInward: dc = p == 0 ? 1 : -1; break;
      default: break;
    }
    int lo = p == 0 ? 0 : kHalf;
    s.agent_row[p] = std::clamp(s.agent_row[p] + dr, 0, kRows - 1);
    s.agent_col[p] = std::clamp(s.agent_col[p] + dc, lo, lo + kHalf - 1);
  }

  // Catching is by walking over a fish: only an agent that changed cells this
  // turn consumes the fish on its landing cell. A stationary agent never
  // catches — fish swim across an occupied cell unharmed — so leaving a fish
  // alone costs no movement. Catches resolve before fish move; the two agents
  // occupy disjoint halves, so at most one can claim a given fish.
  for (size_t i = 0; i < s.fish.size();) {
    const FisheryFish& f = s.fish[i];
    int p = half_of(f.col);
    const bool moved = s.agent_row[p] != prev_row[p] || s.agent_col[p] != prev_col[p];
    if (moved && s.agent_row[p] == f.row && s.agent_col[p] == f.col) {
      double value = f.mature ? cfg_.mature_reward : cfg_.young_reward;
      out.rewards[p] += value;
      s.consumed += 1;
      s.value_extracted += value;
      s.fish[i] = s.fish.back();
      s.fish.pop_back();
    } else {
      ++i;
    }
  }

  // Young fish dawdle at half speed (one column every other turn), so they
  // are easy pickings for their own side; mature fish swim a column every
  // turn. The speed gap is what makes grabbing young both tempting and
  // wasteful: they linger in reach, but each one eaten is a mature fish the
  // partner never sees.
  for (size_t i = 0; i < s.fish.size();) {
    FisheryFish& f = s.fish[i];
    if (!f.mature && s.turn_ % 2 == 0) {
      ++i;
      continue;
    }
    f.col += f.origin == 0 ? 1 : -1;
    if (f.col < 0 || f.col >= kCols) {
      s.despawned += 1;
      s.fish[i] = s.fish.back();
      s.fish.pop_back();
      continue;
    }
    if (half_of(f.col) != f.origin) f.mature = true;
    ++i;
  }

  for (int side = 0; side < 2; ++side) {
    if (!s.rng().next_bernoulli(cfg_.spawn_prob)) continue;
    int on_half = 0;
    for (const FisheryFish& f : s.fish)
      if (half_of(f.col) == side) on_half += 1;
    if (on_half >= cfg_.max_fish_per_side) continue;
    int col = outer_col(side);
    std::array<int, kRows> open{};
    int n_open = 0;
    for (int r = 0; r < kRows; ++r) {
      bool occupied = false;
      for (const FisheryFish& f : s.fish)
        if (f.row == r && f.col == col) occupied = true;
      if (!occupied) open[n_open++] = r;
    }
    if (n_open == 0) continue;
    int row = open[s.rng().next_below(static_cast<uint32_t>(n_open))];
    s.fish.push_back({row, col, false, side});
    s.spawned += 1;
  }

  s.turn_ += 1;
  return out;
}

}  // namespace ccc

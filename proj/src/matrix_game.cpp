#include "ccc/matrix_game.hpp"

#include <algorithm>
#include <cmath>

namespace ccc {

MatrixGame::MatrixGame(const MatrixGameConfig& cfg) : cfg_(cfg) {
  if (!(cfg.dc > cfg.cc && cfg.cc > cfg.dd && cfg.dd > cfg.cd))
    throw ConfigError("payoff table is not a social dilemma: need dc > cc > dd > cd");
  if (!(2.0 * cfg.cc > cfg.dc + cfg.cd))
    throw ConfigError("payoff table rewards alternating exploitation: need 2*cc > dc + cd");
  if (!(cfg.defect_hit_prob > 0.0 && cfg.defect_hit_prob <= 1.0))
    throw ConfigError("defect_hit_prob must be in (0, 1]");
  if (cfg.defect_hit_prob < 1.0 &&
      std::abs(cfg.dd - (cfg.dc + cfg.cd - cfg.cc)) > 1e-12)
    throw ConfigError(
        "defect_hit_prob < 1 needs an additively decomposable table (dd == dc + cd - cc)");
  if (cfg.gift_transfer < 0.0) throw ConfigError("gift_transfer must be >= 0");

  int actions = cfg.gift_action ? 3 : 2;
  spec_.name = cfg.gift_action ? "matrix_pd_gift" : "matrix_pd";
  spec_.action_count = {actions, actions};
  spec_.observation_length = {actions * actions + 1, actions * actions + 1};
  spec_.max_episode_length = 0;
  double bound = std::max({std::abs(cfg.cc), std::abs(cfg.cd), std::abs(cfg.dc), std::abs(cfg.dd)});
  spec_.reward_bound = bound + (cfg.gift_action ? cfg.gift_transfer : 0.0);
  spec_.fully_observed = true;
}

std::unique_ptr<State> MatrixGame::new_game(uint64_t seed) const {
  return std::make_unique<MatrixState>(seed);
}

double MatrixGame::pay(int a1, int a2) const {
  bool d1 = a1 == kDefect;
  bool d2 = a2 == kDefect;
  if (d1 && d2) return cfg_.dd;
  if (d1) return cfg_.dc;
  if (d2) return cfg_.cd;
  return cfg_.cc;
}

std::array<double, 2> MatrixGame::expected_rewards(int action1, int action2) const {
  // Sparse landings rescale the victim's share to loss/p at probability p, so
  // the expectation equals the plain payoff table for every defect_hit_prob
  // (this needs the additive decomposability enforced at construction).
  std::array<double, 2> r = {pay(action1, action2), pay(action2, action1)};
  if (action1 == kGift) {
    r[0] -= cfg_.gift_transfer;
    r[1] += cfg_.gift_transfer;
  }
  if (action2 == kGift) {
    r[1] -= cfg_.gift_transfer;
    r[0] += cfg_.gift_transfer;
  }
  return r;
}

std::vector<double> MatrixGame::obs_pattern(int mine, int theirs) const {
  int a = spec_.action_count[0];
  std::vector<double> out(a * a + 1, 0.0);
  if (mine < 0 || theirs < 0)
    out[a * a] = 1.0;
  else
    out[mine * a + theirs] = 1.0;
  return out;
}

void MatrixGame::observe_into(const State& state, int player, std::span<double> out) const {
  const auto& s = static_cast<const MatrixState&>(state);
  std::fill(out.begin(), out.end(), 0.0);
  int a = spec_.action_count[0];
  if (s.prev1 < 0) {
    out[a * a] = 1.0;
    return;
  }
  int mine = player == 0 ? s.prev1 : s.prev2;
  int theirs = player == 0 ? s.prev2 : s.prev1;
  out[mine * a + theirs] = 1.0;
}

StepOutcome MatrixGame::step_impl(State& state, int action1, int action2) const {
  auto& s = static_cast<MatrixState&>(state);
  StepOutcome out;
  double p = cfg_.defect_hit_prob;

  if (p >= 1.0) {
    out.rewards = {pay(action1, action2), pay(action2, action1)};
    // Victim-side share of the defection: what the turn would have paid had
    // the partner cooperated. This is the component a reward wrapper may
    // randomize.
    if (action2 == kDefect) {
      double delta = pay(action1, kDefect) - pay(action1, kCooperate);
      if (delta < 0.0) out.penalty_events.push_back({0, delta, true});
    }
    if (action1 == kDefect) {
      double delta = pay(action2, kDefect) - pay(action2, kCooperate);
      if (delta < 0.0) out.penalty_events.push_back({1, delta, true});
    }
  } else {
    // A defector's takings are deterministic every turn; only the victim's
    // share arrives sparsely, as a hit of magnitude loss/p with probability
    // p (same expectation). Defection therefore pays immediately while its
    // consequences can stay invisible for many turns.
    double gain = cfg_.dc - cfg_.cc;
    double loss = (cfg_.cd - cfg_.cc) / p;
    out.rewards = {cfg_.cc, cfg_.cc};
    if (action1 == kDefect) {
      out.rewards[0] += gain;
      if (s.rng().next_bernoulli(p)) {
        out.rewards[1] += loss;
        if (loss < 0.0) out.penalty_events.push_back({1, loss, true});
      }
    }
    if (action2 == kDefect) {
      out.rewards[1] += gain;
      if (s.rng().next_bernoulli(p)) {
        out.rewards[0] += loss;
        if (loss < 0.0) out.penalty_events.push_back({0, loss, true});
      }
    }
  }

  if (action1 == kGift) {
    out.rewards[0] -= cfg_.gift_transfer;
    out.rewards[1] += cfg_.gift_transfer;
  }
  if (action2 == kGift) {
    out.rewards[1] -= cfg_.gift_transfer;
    out.rewards[0] += cfg_.gift_transfer;
  }

  s.prev1 = action1;
  s.prev2 = action2;
  s.turn_ += 1;
  return out;
}

}  // namespace ccc

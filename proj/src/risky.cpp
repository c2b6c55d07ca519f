#include "ccc/risky.hpp"

#include "ccc/errors.hpp"

namespace ccc {

RiskyGame::RiskyGame(std::shared_ptr<const Game> base, double p) : base_(std::move(base)), p_(p) {
  if (!base_) throw ContractError("risky wrapper needs a base game");
  if (!(p > 0.0 && p <= 1.0)) throw ConfigError("risk probability must be in (0, 1]");
  spec_ = base_->spec();
  spec_.name += "_risky";
  spec_.reward_bound = spec_.reward_bound / p_;
}

std::unique_ptr<State> RiskyGame::new_game(uint64_t seed) const {
  // The inner game keeps the unmodified seed so that p = 1 replays the base
  // game's exact trajectory; the wrapper draws from its own stream.
  return std::make_unique<RiskyState>(seed, base_->new_game(seed));
}

void RiskyGame::observe_into(const State& state, int player, std::span<double> out) const {
  base_->observe(static_cast<const RiskyState&>(state).inner(), player, out);
}

StepOutcome RiskyGame::step_impl(State& state, int action1, int action2) const {
  auto& s = static_cast<RiskyState&>(state);
  StepOutcome out = base_->step(s.inner(), action1, action2);
  s.turn_ += 1;
  s.terminal_ = s.inner().terminal();
  if (p_ >= 1.0) return out;

  StepOutcome wrapped;
  wrapped.rewards = out.rewards;
  wrapped.terminal = out.terminal;
  for (const RewardComponent& ev : out.penalty_events) {
    wrapped.rewards[ev.player] -= ev.amount;
    if (s.rng().next_bernoulli(p_)) {
      double amplified = ev.amount / p_;
      wrapped.rewards[ev.player] += amplified;
      wrapped.penalty_events.push_back({ev.player, amplified, ev.penalty});
    }
  }
  return wrapped;
}

}  // namespace ccc

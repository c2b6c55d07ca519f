#include "ccc/episode.hpp"

#include <cmath>
#include <string>

#include "ccc/errors.hpp"

namespace ccc {

EpisodeTrace run_episode(const Game& game, Agent& agent1, Agent& agent2, int length,
                         uint64_t seed, bool record_observations) {
  if (length < 1) throw ContractError("episode length must be >= 1");
  const GameSpec& spec = game.spec();
  bool full_info = agent1.needs_full_info() || agent2.needs_full_info();
  if (full_info && !spec.fully_observed)
    throw UnsupportedError("full-information agent on partially observed game " + spec.name);

  EpisodeTrace trace;
  trace.seed = seed;
  trace.actions.reserve(length);
  trace.rewards.reserve(length);
  trace.cumulative.reserve(length);

  auto state = game.new_game(derive_seed(seed, "world"));
  std::array<Rng, 2> act_rng{Rng(derive_seed(seed, "act1")), Rng(derive_seed(seed, "act2"))};
  std::array<Agent*, 2> agents{&agent1, &agent2};
  std::array<std::vector<double>, 2> obs;
  obs[0].resize(spec.observation_length[0]);
  obs[1].resize(spec.observation_length[1]);

  for (int t = 0; t < length && !state->terminal(); ++t) {
    game.observe(*state, 0, obs[0]);
    game.observe(*state, 1, obs[1]);
    if (record_observations) {
      trace.observations[0].push_back(obs[0]);
      trace.observations[1].push_back(obs[1]);
    }
    std::array<int, 2> a{agents[0]->act(obs[0], act_rng[0]), agents[1]->act(obs[1], act_rng[1])};

    std::unique_ptr<State> before;
    if (full_info) before = state->clone();
    StepOutcome out = game.step(*state, a[0], a[1]);

    for (int p = 0; p < 2; ++p) {
      TurnInfo info;
      info.game = &game;
      info.player = p;
      info.my_action = a[p];
      info.my_reward = out.rewards[p];
      if (agents[p]->needs_full_info()) {
        info.state_before = before.get();
        info.partner_action = a[1 - p];
      }
      agents[p]->observe_turn(info);
    }

    trace.actions.push_back(a);
    trace.rewards.push_back(out.rewards);
    trace.total[0] += out.rewards[0];
    trace.total[1] += out.rewards[1];
    trace.cumulative.push_back(trace.total);
    trace.turns += 1;
  }
  return trace;
}

std::array<RateEstimate, 2> estimate_rate(const Game& game, const Policy& pi1, const Policy& pi2,
                                          int episodes, int length, uint64_t seed) {
  if (episodes < 1) throw ContractError("estimate_rate needs at least one episode");
  std::array<std::vector<double>, 2> per_episode;
  per_episode[0].reserve(episodes);
  per_episode[1].reserve(episodes);
  int64_t turns = 0;

  for (int e = 0; e < episodes; ++e) {
    PolicyAgent a1(pi1), a2(pi2);
    EpisodeTrace trace = run_episode(game, a1, a2, length, derive_seed(seed, e));
    turns += trace.turns;
    for (int p = 0; p < 2; ++p) per_episode[p].push_back(trace.total[p] / trace.turns);
  }

  std::array<RateEstimate, 2> result;
  for (int p = 0; p < 2; ++p) {
    double mean = 0;
    for (double r : per_episode[p]) mean += r;
    mean /= episodes;
    double half = 0;
    if (episodes > 1) {
      double ss = 0;
      for (double r : per_episode[p]) ss += (r - mean) * (r - mean);
      half = 1.96 * std::sqrt(ss / (episodes - 1) / episodes);
    }
    result[p] = {mean, half, turns, episodes};
  }
  return result;
}

}  // namespace ccc

#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "ccc/episode.hpp"
#include "ccc/matrix_game.hpp"

namespace ccc {

// Exact long-run reward rates for two stateless policies on an iterated
// matrix game, via the stationary distribution of the Markov chain over
// previous joint actions. Reducible chains are handled by weighting each
// reachable recurrent class by its absorption probability from the start
// state.
std::array<double, 2> analytic_rate(const MatrixGame& game, const Policy& p1, const Policy& p2);

// Identity of a policy taken from a trained pool. Draws with the same
// nonnegative family and member come from policies that trained together and
// are kept apart in tournaments; family -1 never collides.
struct PoolDraw {
  int family = -1;
  int member = 0;
  int slot = 0;  // which side of the trained pair
};

// A named way of building agents for tournament games. One strategy may use
// several policies per game (e.g. a conditional cooperator carrying both a
// cooperative and a punitive policy); draw() picks their identities, make()
// builds the per-game agent.
class Strategy {
 public:
  virtual ~Strategy() = default;

  const std::string& name() const { return name_; }

  virtual std::vector<PoolDraw> draw(Rng& rng) const {
    (void)rng;
    return {};
  }
  virtual std::unique_ptr<Agent> make(const Game& game, int seat, uint64_t seed,
                                      const std::vector<PoolDraw>& draws) const = 0;

 protected:
  explicit Strategy(std::string name) : name_(std::move(name)) {}

 private:
  std::string name_;
};

// Unconditional policy strategy: a single fixed policy or a trained pool.
class PolicyStrategy final : public Strategy {
 public:
  PolicyStrategy(std::string name, Policy fixed);
  PolicyStrategy(std::string name, int family, std::vector<std::array<Policy, 2>> pairs);

  std::vector<PoolDraw> draw(Rng& rng) const override;
  std::unique_ptr<Agent> make(const Game& game, int seat, uint64_t seed,
                              const std::vector<PoolDraw>& draws) const override;

  const Policy& policy_for(const PoolDraw& d) const;
  int member_count() const { return static_cast<int>(pairs_.size()); }

 private:
  int family_;
  std::vector<std::array<Policy, 2>> pairs_;
};

struct MatchupResult {
  double s1_mean = 0, s1_se = 0;
  double s2_mean = 0, s2_se = 0;
  int games = 0;
  std::vector<std::array<double, 2>> per_game;  // total payoff per game
};

// Plays `games` independent games of `length` turns, strategy 1 in seat 0.
// Pool draws for the two sides avoid members that trained together whenever
// the pools are large enough to permit it.
MatchupResult run_matchup(const Game& game, const Strategy& s1, const Strategy& s2, int games,
                          int length, uint64_t seed);

struct CellStats {
  std::string row, col;
  double s1_mean = 0, s1_se = 0;
  double s2_mean = 0, s2_se = 0;
  int games = 0;
};

struct StrategyMetrics {
  std::string strategy;
  double self_match = 0;  // S1(X, X)
  double safety = 0;      // S1(X, D) - S1(D, D)
  double incent_c = 0;    // S2(X, C) - S2(X, D)
};

struct TournamentReport {
  std::vector<std::string> strategies;
  std::vector<CellStats> cells;  // all ordered pairs, row-major
  std::vector<StrategyMetrics> metrics;
  int games_per_cell = 0;
  int length = 0;

  const CellStats& cell(const std::string& row, const std::string& col) const;
};

// Full cross matrix over the strategy list. Requires strategies named "C"
// and "D" for the metric definitions.
TournamentReport run_tournament(const Game& game,
                                const std::vector<std::shared_ptr<const Strategy>>& strategies,
                                int games_per_cell, int length, uint64_t seed);

}  // namespace ccc

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ccc/episode.hpp"
#include "ccc/evaluation.hpp"
#include "ccc/game.hpp"
#include "ccc/policy.hpp"

namespace ccc {

// Quantile with linear interpolation between order statistics (stable for
// small samples). q in [0, 1]; input need not be sorted.
double quantile_linear(std::vector<double> values, double q);

// Parameters of the conditional-cooperation decision rule. alpha_d sets the
// threshold for abandoning cooperation, alpha_c the (lower-alpha, hence
// higher) threshold for resuming it; equal values give the plain
// single-threshold rule. q is the quantile of the cooperative rollout
// population, k the number of rollout games per bank.
struct CccParams {
  double alpha_d = 0.05;
  double alpha_c = 0.05;
  double q = 0.1;
  int k = 32;

  void validate() const;  // ConfigError on out-of-range values
};

// A pair of rollout banks that answer "what cumulative reward should I have
// by now if both of us cooperated?" and "... if I cooperated while my
// partner defected?". Holds k independent games of each kind, all advanced
// in lockstep one step per call; policy forwards are batched across games.
// A bank game that reaches a terminal state keeps its final totals.
class BankSimulator {
 public:
  BankSimulator(const Game& game, int seat, Policy cooperate, Policy defect, int k,
                uint64_t seed);

  void step();
  int steps() const { return steps_; }

  // Own-seat cumulative rewards, one entry per bank game.
  const std::vector<double>& cc_totals() const { return cc_totals_; }
  const std::vector<double>& cd_totals() const { return cd_totals_; }

 private:
  const Game& game_;
  int seat_;
  Policy pi_c_, pi_d_;
  int k_;
  int steps_ = 0;
  std::vector<std::unique_ptr<State>> cc_states_, cd_states_;
  std::vector<std::array<Rng, 2>> cc_rngs_, cd_rngs_;
  std::vector<double> cc_totals_, cd_totals_;
  Eigen::MatrixXd obs_c_, obs_d_, probs_c_, probs_d_;  // batch buffers
};

enum class ScheduleSource { kPrecomputed, kOnline };

// Per-turn decision thresholds plus the bank statistics they were built
// from. Entry t-1 describes the banks after t completed turns; the turn-0
// decision (before any rewards) always compares 0 against 0.
struct ThresholdSchedule {
  double alpha = 0.05;
  double q = 0.1;
  int k = 32;
  ScheduleSource source = ScheduleSource::kPrecomputed;

  std::vector<double> threshold;    // (1-alpha)*cc_quantile + alpha*cd_mean
  std::vector<double> cc_quantile;  // bottom-q quantile of the CC bank
  std::vector<double> cd_mean;      // mean of the CD bank
  std::vector<double> cc_max;       // bank extremes, for sanity envelopes
  std::vector<double> cd_min;

  int horizon() const { return static_cast<int>(threshold.size()); }
};

// Runs both banks for `horizon` steps up front and records the statistics.
// An agent driven by this schedule makes the same decisions as one stepping
// its banks online from the same seed.
ThresholdSchedule precompute_thresholds(const Game& game, int seat, const Policy& pi_c,
                                        const Policy& pi_d, double alpha, double q, int k,
                                        int horizon, uint64_t seed);

// Two-threshold mode memory: start defecting when the running total falls
// strictly below `defect_below`, resume cooperating once it climbs back to
// `cooperate_at` (inclusive). With equal thresholds every step reduces to
// the memoryless rule "defect iff total < threshold", whatever the current
// mode.
class HysteresisRule {
 public:
  // Returns true when the mode for this turn is defect.
  bool step(double total, double defect_below, double cooperate_at) {
    if (!defecting_)
      defecting_ = total < defect_below;
    else
      defecting_ = total < cooperate_at;
    return defecting_;
  }
  bool defecting() const { return defecting_; }

 private:
  bool defecting_ = false;
};

// Conditional cooperator driven only by its own payoff history: it plays the
// cooperative policy while its cumulative reward keeps up with a
// rollout-derived threshold and the punitive policy when it falls strictly
// below (ties cooperate). Thresholds come either from online banks stepped
// once per observed turn or from a precomputed schedule. Never reads the
// partner's action or the world state.
class CccAgent final : public Agent {
 public:
  enum class Mode : int8_t { kCooperate = 0, kDefect = 1 };

  // Online banks, seeded from `seed`.
  CccAgent(const Game& game, int seat, Policy cooperate, Policy defect, CccParams params,
           uint64_t seed);
  // Schedule-driven (no banks). The schedule's q must match params.q; its
  // stored statistics are combined with params.alpha_d / alpha_c.
  CccAgent(ThresholdSchedule schedule, Policy cooperate, Policy defect, CccParams params);

  int act(std::span<const double> obs, Rng& rng) override;
  void observe_turn(const TurnInfo& info) override;

  double cumulative_reward() const { return cumulative_; }
  Mode mode() const { return rule_.defecting() ? Mode::kDefect : Mode::kCooperate; }
  const std::vector<Mode>& mode_history() const { return mode_history_; }
  // Defect-side threshold used at each act.
  const std::vector<double>& threshold_history() const { return threshold_history_; }
  const BankSimulator* banks() const { return banks_ ? &*banks_ : nullptr; }

 private:
  std::array<double, 2> current_thresholds() const;  // {defect_below, cooperate_at}

  Policy pi_c_, pi_d_;
  CccParams params_;
  std::optional<BankSimulator> banks_;
  std::optional<ThresholdSchedule> schedule_;
  HysteresisRule rule_;
  double cumulative_ = 0.0;
  int turns_done_ = 0;
  bool awaiting_observe_ = false;
  std::vector<Mode> mode_history_;
  std::vector<double> threshold_history_;
};

// Constants of the debit/punishment agent. Punishment length is chosen so
// the partner's estimated loss reaches `deterrence` times the accrued debit,
// capped at `punish_cap` turns.
struct AmtftConfig {
  double debit_threshold = 1.0;
  int gain_rollouts = 16;       // paired rollouts per deviation estimate
  int gain_rollout_length = 20; // turns per gain rollout
  int punish_cap = 50;
  double deterrence = 8.0;

  void validate() const;
};

// Intention-based reciprocator: watches the partner's actions, and when one
// differs from what the cooperative policy would most likely have done,
// estimates the partner's one-shot gain with paired common-random-number
// rollouts (taken action vs cooperative action, mutual cooperation
// thereafter) and adds any positive gain to a debit. When the debit crosses
// the threshold it plays the punitive policy for enough turns to cancel the
// debit (rollout-estimated), then forgives. Requires a fully observed game.
class AmtftAgent final : public Agent {
 public:
  AmtftAgent(const Game& game, int seat, Policy cooperate, Policy defect, AmtftConfig config,
             uint64_t seed);

  int act(std::span<const double> obs, Rng& rng) override;
  void observe_turn(const TurnInfo& info) override;
  bool needs_full_info() const override { return true; }

  double debit() const { return debit_; }
  int punish_turns_left() const { return punish_left_; }
  int punish_episodes() const { return punish_episodes_; }

 private:
  double estimate_partner_gain(const State& before, int taken, int cooperative,
                               uint64_t seed) const;
  int punishment_length(const State& from, double debit, uint64_t seed) const;

  const Game& game_;
  int seat_;
  Policy pi_c_, pi_d_;
  AmtftConfig cfg_;
  uint64_t seed_;
  double debit_ = 0.0;
  int punish_left_ = 0;
  int punish_episodes_ = 0;
  int turns_done_ = 0;
  bool awaiting_observe_ = false;
  bool punishing_this_turn_ = false;
};

// Tournament strategy producing CccAgents. The cooperative and punitive
// policies are drawn per game from the given pools (sharing their family
// tags for trained-together avoidance); fixed policies are a pool of one.
class CccStrategy final : public Strategy {
 public:
  CccStrategy(std::string name, Policy cooperate, Policy defect, CccParams params);
  CccStrategy(std::string name, std::shared_ptr<const PolicyStrategy> cooperate_pool,
              std::shared_ptr<const PolicyStrategy> defect_pool, CccParams params);

  std::vector<PoolDraw> draw(Rng& rng) const override;
  std::unique_ptr<Agent> make(const Game& game, int seat, uint64_t seed,
                              const std::vector<PoolDraw>& draws) const override;

 private:
  std::shared_ptr<const PolicyStrategy> c_pool_, d_pool_;
  CccParams params_;
};

// Tournament strategy producing AmtftAgents; same pool plumbing as above.
class AmtftStrategy final : public Strategy {
 public:
  AmtftStrategy(std::string name, Policy cooperate, Policy defect, AmtftConfig config);
  AmtftStrategy(std::string name, std::shared_ptr<const PolicyStrategy> cooperate_pool,
                std::shared_ptr<const PolicyStrategy> defect_pool, AmtftConfig config);

  std::vector<PoolDraw> draw(Rng& rng) const override;
  std::unique_ptr<Agent> make(const Game& game, int seat, uint64_t seed,
                              const std::vector<PoolDraw>& draws) const override;

 private:
  std::shared_ptr<const PolicyStrategy> c_pool_, d_pool_;
  AmtftConfig cfg_;
};

}  // namespace ccc

#include "ccc/agents.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ccc/errors.hpp"

namespace ccc {

namespace {

double threshold_from(double cc_quantile, double cd_mean, double alpha) {
  return (1.0 - alpha) * cc_quantile + alpha * cd_mean;
}

int sample_from(const double* probs, int n, Rng& rng) {
  double u = rng.next_double();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return n - 1;
}

int argmax(const std::vector<double>& xs) {
  return static_cast<int>(std::max_element(xs.begin(), xs.end()) - xs.begin());
}

void check_policy_shapes(const Game& game, const Policy& pi_c, const Policy& pi_d) {
  const GameSpec& spec = game.spec();
  for (const Policy* p : {&pi_c, &pi_d})
    for (int seat = 0; seat < 2; ++seat)
      if (p->arch().input != spec.observation_length[seat] ||
          p->arch().actions != spec.action_count[seat])
        throw ConfigError("policy shape does not fit the game's observations/actions");
}

}  // namespace

double quantile_linear(std::vector<double> values, double q) {
  if (values.empty()) throw ContractError("quantile of an empty sample");
  if (q < 0.0 || q > 1.0) throw ConfigError("quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  double pos = q * static_cast<double>(values.size() - 1);
  auto lo = static_cast<size_t>(pos);
  if (lo + 1 >= values.size()) return values.back();
  double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[lo + 1] - values[lo]);
}

void CccParams::validate() const {
  if (!(alpha_d > 0.0 && alpha_d < 1.0) || !(alpha_c > 0.0 && alpha_c < 1.0))
    throw ConfigError("alpha parameters must lie strictly inside (0, 1)");
  if (alpha_d < alpha_c)
    throw ConfigError("the defect-side alpha must be at least the cooperate-side alpha");
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("quantile level must lie strictly inside (0, 1)");
  if (k < 2) throw ConfigError("need at least 2 rollout games per bank");
}

BankSimulator::BankSimulator(const Game& game, int seat, Policy cooperate, Policy defect, int k,
                             uint64_t seed)
    : game_(game), seat_(seat), pi_c_(std::move(cooperate)), pi_d_(std::move(defect)), k_(k) {
  const GameSpec& spec = game.spec();
  if (seat != 0 && seat != 1) throw ContractError("seat must be 0 or 1");
  if (k < 2) throw ConfigError("need at least 2 rollout games per bank");
  if (spec.observation_length[0] != spec.observation_length[1] ||
      spec.action_count[0] != spec.action_count[1])
    throw ContractError("bank rollouts need a seat-symmetric game");
  check_policy_shapes(game, pi_c_, pi_d_);

  uint64_t cc_root = derive_seed(seed, "cc");
  uint64_t cd_root = derive_seed(seed, "cd");
  for (int b = 0; b < k; ++b) {
    uint64_t sc = derive_seed(cc_root, b);
    uint64_t sd = derive_seed(cd_root, b);
    cc_states_.push_back(game.new_game(sc));
    cd_states_.push_back(game.new_game(sd));
    cc_rngs_.push_back({Rng(derive_seed(sc, "a0")), Rng(derive_seed(sc, "a1"))});
    cd_rngs_.push_back({Rng(derive_seed(sd, "a0")), Rng(derive_seed(sd, "a1"))});
  }
  cc_totals_.assign(k, 0.0);
  cd_totals_.assign(k, 0.0);
  int obs_len = spec.observation_length[0];
  obs_c_.resize(obs_len, 3 * k);
  obs_d_.resize(obs_len, k);
}

void BankSimulator::step() {
  const int A = game_.spec().action_count[0];
  // Cooperative-policy batch: both seats of every CC game, plus the own seat
  // of every CD game; punitive-policy batch: the partner seat of CD games.
  for (int b = 0; b < k_; ++b) {
    game_.observe(*cc_states_[b], 0, std::span<double>(obs_c_.col(2 * b).data(), obs_c_.rows()));
    game_.observe(*cc_states_[b], 1,
                  std::span<double>(obs_c_.col(2 * b + 1).data(), obs_c_.rows()));
    game_.observe(*cd_states_[b], seat_,
                  std::span<double>(obs_c_.col(2 * k_ + b).data(), obs_c_.rows()));
    game_.observe(*cd_states_[b], 1 - seat_,
                  std::span<double>(obs_d_.col(b).data(), obs_d_.rows()));
  }
  pi_c_.forward_batch(obs_c_, probs_c_);
  pi_d_.forward_batch(obs_d_, probs_d_);

  for (int b = 0; b < k_; ++b) {
    if (!cc_states_[b]->terminal()) {
      int a0 = sample_from(probs_c_.col(2 * b).data(), A, cc_rngs_[b][0]);
      int a1 = sample_from(probs_c_.col(2 * b + 1).data(), A, cc_rngs_[b][1]);
      cc_totals_[b] += game_.step(*cc_states_[b], a0, a1).rewards[seat_];
    }
    if (!cd_states_[b]->terminal()) {
      int acts[2];
      acts[seat_] = sample_from(probs_c_.col(2 * k_ + b).data(), A, cd_rngs_[b][seat_]);
      acts[1 - seat_] = sample_from(probs_d_.col(b).data(), A, cd_rngs_[b][1 - seat_]);
      cd_totals_[b] += game_.step(*cd_states_[b], acts[0], acts[1]).rewards[seat_];
    }
  }
  ++steps_;
}

ThresholdSchedule precompute_thresholds(const Game& game, int seat, const Policy& pi_c,
                                        const Policy& pi_d, double alpha, double q, int k,
                                        int horizon, uint64_t seed) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie strictly inside (0, 1)");
  if (!(q > 0.0 && q < 1.0)) throw ConfigError("quantile level must lie strictly inside (0, 1)");
  if (horizon < 1) throw ConfigError("horizon must be at least 1");
  ThresholdSchedule sched;
  sched.alpha = alpha;
  sched.q = q;
  sched.k = k;
  sched.source = ScheduleSource::kPrecomputed;
  BankSimulator banks(game, seat, pi_c, pi_d, k, seed);
  for (int t = 1; t <= horizon; ++t) {
    banks.step();
    const std::vector<double>& cc = banks.cc_totals();
    const std::vector<double>& cd = banks.cd_totals();
    double cc_q = quantile_linear(cc, q);
    double cd_mean = std::accumulate(cd.begin(), cd.end(), 0.0) / static_cast<double>(cd.size());
    sched.cc_quantile.push_back(cc_q);
    sched.cd_mean.push_back(cd_mean);
    sched.cc_max.push_back(*std::max_element(cc.begin(), cc.end()));
    sched.cd_min.push_back(*std::min_element(cd.begin(), cd.end()));
    sched.threshold.push_back(threshold_from(cc_q, cd_mean, alpha));
  }
  return sched;
}

CccAgent::CccAgent(const Game& game, int seat, Policy cooperate, Policy defect, CccParams params,
                   uint64_t seed)
    : pi_c_(std::move(cooperate)), pi_d_(std::move(defect)), params_(params) {
  params_.validate();
  check_policy_shapes(game, pi_c_, pi_d_);
  banks_.emplace(game, seat, pi_c_, pi_d_, params_.k, seed);
}

CccAgent::CccAgent(ThresholdSchedule schedule, Policy cooperate, Policy defect, CccParams params)
    : pi_c_(std::move(cooperate)), pi_d_(std::move(defect)), params_(params) {
  params_.validate();
  if (schedule.q != params_.q)
    throw ConfigError("schedule was built with a different quantile level");
  schedule_.emplace(std::move(schedule));
}

std::array<double, 2> CccAgent::current_thresholds() const {
  if (turns_done_ == 0) return {0.0, 0.0};
  double cc_q, cd_mean;
  if (banks_) {
    const std::vector<double>& cc = banks_->cc_totals();
    const std::vector<double>& cd = banks_->cd_totals();
    cc_q = quantile_linear(cc, params_.q);
    cd_mean = std::accumulate(cd.begin(), cd.end(), 0.0) / static_cast<double>(cd.size());
  } else {
    int idx = turns_done_ - 1;
    if (idx >= schedule_->horizon())
      throw ContractError("threshold schedule is shorter than the match");
    cc_q = schedule_->cc_quantile[idx];
    cd_mean = schedule_->cd_mean[idx];
  }
  return {threshold_from(cc_q, cd_mean, params_.alpha_d),
          threshold_from(cc_q, cd_mean, params_.alpha_c)};
}

int CccAgent::act(std::span<const double> obs, Rng& rng) {
  if (awaiting_observe_) throw ContractError("act called again before observe_turn");
  std::array<double, 2> th = current_thresholds();
  bool defect = rule_.step(cumulative_, th[0], th[1]);
  mode_history_.push_back(defect ? Mode::kDefect : Mode::kCooperate);
  threshold_history_.push_back(th[0]);
  awaiting_observe_ = true;
  return (defect ? pi_d_ : pi_c_).sample(obs, rng);
}

void CccAgent::observe_turn(const TurnInfo& info) {
  if (!awaiting_observe_) throw ContractError("observe_turn without a preceding act");
  awaiting_observe_ = false;
  cumulative_ += info.my_reward;
  ++turns_done_;
  if (banks_) banks_->step();
}

void AmtftConfig::validate() const {
  if (debit_threshold < 0.0) throw ConfigError("debit threshold must be nonnegative");
  if (gain_rollouts < 1) throw ConfigError("need at least one rollout per estimate");
  if (gain_rollout_length < 1) throw ConfigError("rollouts must last at least one turn");
  if (punish_cap < 1) throw ConfigError("punishment cap must be at least 1 turn");
  if (deterrence <= 0.0) throw ConfigError("deterrence factor must be positive");
}

AmtftAgent::AmtftAgent(const Game& game, int seat, Policy cooperate, Policy defect,
                       AmtftConfig config, uint64_t seed)
    : game_(game),
      seat_(seat),
      pi_c_(std::move(cooperate)),
      pi_d_(std::move(defect)),
      cfg_(config),
      seed_(seed) {
  cfg_.validate();
  if (seat != 0 && seat != 1) throw ContractError("seat must be 0 or 1");
  if (!game.spec().fully_observed)
    throw UnsupportedError("debit accounting needs a fully observed game");
  check_policy_shapes(game, pi_c_, pi_d_);
}

int AmtftAgent::act(std::span<const double> obs, Rng& rng) {
  if (awaiting_observe_) throw ContractError("act called again before observe_turn");
  awaiting_observe_ = true;
  punishing_this_turn_ = punish_left_ > 0;
  return (punishing_this_turn_ ? pi_d_ : pi_c_).sample(obs, rng);
}

void AmtftAgent::observe_turn(const TurnInfo& info) {
  if (!awaiting_observe_) throw ContractError("observe_turn without a preceding act");
  awaiting_observe_ = false;
  int turn = turns_done_++;
  if (punishing_this_turn_) {
    --punish_left_;
    return;
  }
  if (info.state_before == nullptr || info.partner_action < 0)
    throw ContractError("debit accounting needs the partner action and pre-step state");
  int partner = 1 - seat_;
  std::vector<double> partner_obs = game_.observe(*info.state_before, partner);
  int cooperative = argmax(pi_c_.forward(partner_obs));
  if (info.partner_action == cooperative) return;

  uint64_t decision_seed = derive_seed(seed_, static_cast<uint64_t>(turn));
  double gain = estimate_partner_gain(*info.state_before, info.partner_action, cooperative,
                                      derive_seed(decision_seed, "gain"));
  if (gain > 0.0) debit_ += gain;
  if (debit_ > cfg_.debit_threshold) {
    punish_left_ = punishment_length(*info.state_before, debit_,
                                     derive_seed(decision_seed, "punish"));
    ++punish_episodes_;
    debit_ = 0.0;
  }
}

// Paired rollouts with common random numbers: both branches replay the same
// world randomness and the same own-policy samples, differing only in the
// partner's first action, so the difference isolates that action's effect.
double AmtftAgent::estimate_partner_gain(const State& before, int taken, int cooperative,
                                         uint64_t seed) const {
  int partner = 1 - seat_;
  const int first_action[2] = {taken, cooperative};
  double gain_sum = 0.0;
  for (int j = 0; j < cfg_.gain_rollouts; ++j) {
    uint64_t sj = derive_seed(seed, j);
    double branch_total[2] = {0.0, 0.0};
    for (int br = 0; br < 2; ++br) {
      std::unique_ptr<State> st = before.clone();
      st->rng() = Rng(derive_seed(sj, "world"));
      Rng self_rng(derive_seed(sj, "self"));
      Rng partner_rng(derive_seed(sj, "partner"));
      int acts[2];
      acts[seat_] = pi_c_.sample(game_.observe(*st, seat_), self_rng);
      acts[partner] = first_action[br];
      branch_total[br] += game_.step(*st, acts[0], acts[1]).rewards[partner];
      for (int t = 1; t < cfg_.gain_rollout_length && !st->terminal(); ++t) {
        int a0 = pi_c_.sample(game_.observe(*st, 0), seat_ == 0 ? self_rng : partner_rng);
        int a1 = pi_c_.sample(game_.observe(*st, 1), seat_ == 1 ? self_rng : partner_rng);
        branch_total[br] += game_.step(*st, a0, a1).rewards[partner];
      }
    }
    gain_sum += branch_total[0] - branch_total[1];
  }
  return gain_sum / static_cast<double>(cfg_.gain_rollouts);
}

// Smallest punishment length whose estimated partner loss (cooperative
// benchmark minus punished continuation) reaches deterrence * debit; the cap
// applies when even the longest punishment falls short.
int AmtftAgent::punishment_length(const State& from, double debit, uint64_t seed) const {
  int partner = 1 - seat_;
  double need = cfg_.deterrence * debit;
  std::vector<double> benchmark(cfg_.punish_cap, 0.0);
  std::vector<double> punished(cfg_.punish_cap, 0.0);
  for (int j = 0; j < cfg_.gain_rollouts; ++j) {
    uint64_t sj = derive_seed(seed, j);
    for (int br = 0; br < 2; ++br) {
      const Policy& p = br == 0 ? pi_c_ : pi_d_;
      std::vector<double>& acc = br == 0 ? benchmark : punished;
      std::unique_ptr<State> st = from.clone();
      st->rng() = Rng(derive_seed(sj, "world"));
      Rng r0(derive_seed(sj, "r0"));
      Rng r1(derive_seed(sj, "r1"));
      double run = 0.0;
      for (int m = 0; m < cfg_.punish_cap; ++m) {
        if (!st->terminal()) {
          int a0 = p.sample(game_.observe(*st, 0), r0);
          int a1 = p.sample(game_.observe(*st, 1), r1);
          run += game_.step(*st, a0, a1).rewards[partner];
        }
        acc[m] += run;
      }
    }
  }
  for (int m = 0; m < cfg_.punish_cap; ++m) {
    double loss = (benchmark[m] - punished[m]) / static_cast<double>(cfg_.gain_rollouts);
    if (loss >= need) return m + 1;
  }
  return cfg_.punish_cap;
}

namespace {

std::vector<PoolDraw> draw_both(const PolicyStrategy& c_pool, const PolicyStrategy& d_pool,
                                Rng& rng) {
  std::vector<PoolDraw> draws = c_pool.draw(rng);
  std::vector<PoolDraw> d = d_pool.draw(rng);
  draws.insert(draws.end(), d.begin(), d.end());
  return draws;
}

}  // namespace

CccStrategy::CccStrategy(std::string name, Policy cooperate, Policy defect, CccParams params)
    : Strategy(std::move(name)),
      c_pool_(std::make_shared<PolicyStrategy>("cooperate", std::move(cooperate))),
      d_pool_(std::make_shared<PolicyStrategy>("defect", std::move(defect))),
      params_(params) {
  params_.validate();
}

CccStrategy::CccStrategy(std::string name, std::shared_ptr<const PolicyStrategy> cooperate_pool,
                         std::shared_ptr<const PolicyStrategy> defect_pool, CccParams params)
    : Strategy(std::move(name)),
      c_pool_(std::move(cooperate_pool)),
      d_pool_(std::move(defect_pool)),
      params_(params) {
  params_.validate();
  if (!c_pool_ || !d_pool_) throw ContractError("strategy needs both policy pools");
}

std::vector<PoolDraw> CccStrategy::draw(Rng& rng) const {
  return draw_both(*c_pool_, *d_pool_, rng);
}

std::unique_ptr<Agent> CccStrategy::make(const Game& game, int seat, uint64_t seed,
                                         const std::vector<PoolDraw>& draws) const {
  if (draws.size() != 2) throw ContractError("strategy expects one draw per policy pool");
  return std::make_unique<CccAgent>(game, seat, c_pool_->policy_for(draws[0]),
                                    d_pool_->policy_for(draws[1]), params_, seed);
}

AmtftStrategy::AmtftStrategy(std::string name, Policy cooperate, Policy defect,
                             AmtftConfig config)
    : Strategy(std::move(name)),
      c_pool_(std::make_shared<PolicyStrategy>("cooperate", std::move(cooperate))),
      d_pool_(std::make_shared<PolicyStrategy>("defect", std::move(defect))),
      cfg_(config) {
  cfg_.validate();
}

AmtftStrategy::AmtftStrategy(std::string name,
                             std::shared_ptr<const PolicyStrategy> cooperate_pool,
                             std::shared_ptr<const PolicyStrategy> defect_pool,
                             AmtftConfig config)
    : Strategy(std::move(name)),
      c_pool_(std::move(cooperate_pool)),
      d_pool_(std::move(defect_pool)),
      cfg_(config) {
  cfg_.validate();
  if (!c_pool_ || !d_pool_) throw ContractError("strategy needs both policy pools");
}

std::vector<PoolDraw> AmtftStrategy::draw(Rng& rng) const {
  return draw_both(*c_pool_, *d_pool_, rng);
}

std::unique_ptr<Agent> AmtftStrategy::make(const Game& game, int seat, uint64_t seed,
                                           const std::vector<PoolDraw>& draws) const {
  if (draws.size() != 2) throw ContractError("strategy expects one draw per policy pool");
  return std::make_unique<AmtftAgent>(game, seat, c_pool_->policy_for(draws[0]),
                                      d_pool_->policy_for(draws[1]), cfg_, seed);
}

}  // namespace ccc

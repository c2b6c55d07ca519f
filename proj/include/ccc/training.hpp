#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ccc/game.hpp"
#include "ccc/policy.hpp"

namespace ccc {

// Reward shaping applied during training. Selfish trains each player on its
// own payoff; prosocial trains both on the sum, making the partner's payoff
// as valuable as one's own.
enum class RewardScheme { kSelfish, kProsocial };

std::array<double, 2> shape_rewards(RewardScheme scheme, double r1, double r2);

const char* scheme_name(RewardScheme scheme);
RewardScheme parse_scheme(const std::string& name);  // ConfigError on unknown names

struct TrainConfig {
  RewardScheme scheme = RewardScheme::kSelfish;
  int batches = 2000;
  int batch_size = 32;        // episodes per batch; the baseline needs >= 2
  int episode_length = 200;
  double learning_rate = 1e-3;
  double discount = 0.98;
  double entropy_weight = 0.01;  // decays linearly to 0 over the batches

  void validate() const;
};

// Joint and per-player average per-turn rewards of one training batch,
// measured on the unshaped payoffs.
struct CurvePoint {
  int batch = 0;
  double rate_p1 = 0.0;
  double rate_p2 = 0.0;
  double joint_rate = 0.0;
};

struct TrainedPair {
  Policy player1;
  Policy player2;
  std::vector<CurvePoint> curve;  // one point per batch
  RewardScheme scheme = RewardScheme::kSelfish;
};

// One batch of lockstep self-play episodes, reduced to REINFORCE gradient
// estimates (discounted returns against a leave-one-out batch baseline per
// turn index, plus an entropy bonus) without touching the parameters.
// Exposed separately so the estimator's statistical properties can be
// verified directly; disabling `use_baseline` zeroes the baseline only.
struct BatchGradient {
  Eigen::VectorXd grad1, grad2;    // d(mean episode objective)/d params
  std::array<double, 2> rate{};    // mean unshaped per-turn reward
  double max_mean_abs_logit = 0.0; // divergence telemetry across the batch
};
BatchGradient train_batch_gradient(const Game& game, const Policy& p1, const Policy& p2,
                                   const TrainConfig& cfg, bool use_baseline,
                                   double entropy_coeff, uint64_t batch_seed);

// Self-play policy-gradient training of a fresh policy pair (shared
// architecture, independent parameters, simultaneous updates). Deterministic
// in (cfg, seed). Throws DivergenceError when the mean |logit| passes 1e3.
TrainedPair train_pair(const Game& game, const ArchSpec& arch, const TrainConfig& cfg,
                       uint64_t seed);

// Trains pool_size pairs under per-pair derived seeds (pair i uses
// derive_seed(seed, i)). When checkpoint_dir is nonempty, saves each pair as
// pair_<i>_p1.policy / pair_<i>_p2.policy there. Errors from a failing pair
// are rethrown with the pair index.
std::vector<TrainedPair> train_pool(const Game& game, const ArchSpec& arch,
                                    const TrainConfig& cfg, int pool_size, uint64_t seed,
                                    const std::string& checkpoint_dir = "");

// Curve CSV with columns batch,rate_p1,rate_p2,joint_rate. A nonempty
// preamble (e.g. "# ..." comment lines) is written verbatim before the
// header.
void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve,
                     const std::string& preamble = "");

}  // namespace ccc

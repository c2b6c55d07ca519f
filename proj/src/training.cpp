#include "ccc/training.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <utility>

#include "ccc/errors.hpp"

namespace ccc {

namespace {

constexpr double kDivergedMeanAbsLogit = 1e3;

int sample_from(const Eigen::MatrixXd& probs, int col, Rng& rng) {
  const double u = rng.next_double();
  double acc = 0.0;
  const int n = static_cast<int>(probs.rows());
  for (int a = 0; a < n; ++a) {
    acc += probs(a, col);
    if (u < acc) return a;
  }
  return n - 1;
}

void check_arch_fits(const Game& game, const ArchSpec& arch) {
  const GameSpec& spec = game.spec();
  if (spec.action_count[0] != spec.action_count[1] ||
      spec.observation_length[0] != spec.observation_length[1])
    throw ConfigError("self-play training needs seat-symmetric games, got " + spec.name);
  if (arch.input != spec.observation_length[0] || arch.actions != spec.action_count[0])
    throw ConfigError("policy shape " + arch.describe() + " does not fit " + spec.name);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::array<double, 2> shape_rewards(RewardScheme scheme, double r1, double r2) {
  if (scheme == RewardScheme::kProsocial) {
    const double joint = r1 + r2;
    return {joint, joint};
  }
  return {r1, r2};
}

const char* scheme_name(RewardScheme scheme) {
  return scheme == RewardScheme::kProsocial ? "prosocial" : "selfish";
}

RewardScheme parse_scheme(const std::string& name) {
  if (name == "selfish") return RewardScheme::kSelfish;
  if (name == "prosocial") return RewardScheme::kProsocial;
  throw ConfigError("unknown reward scheme '" + name + "' (use selfish or prosocial)");
}

void TrainConfig::validate() const {
  if (batches < 1) throw ConfigError("batches must be positive");
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2 for the baseline");
  if (episode_length < 1) throw ConfigError("episode_length must be positive");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning_rate must be finite and non-negative");
  if (!(discount > 0.0) || discount > 1.0) throw ConfigError("discount must be in (0, 1]");
  if (!(entropy_weight >= 0.0) || !std::isfinite(entropy_weight))
    throw ConfigError("entropy_weight must be finite and non-negative");
}

BatchGradient train_batch_gradient(const Game& game, const Policy& p1, const Policy& p2,
                                   const TrainConfig& cfg, bool use_baseline,
                                   double entropy_coeff, uint64_t batch_seed) {
  cfg.validate();
  check_arch_fits(game, p1.arch());
  check_arch_fits(game, p2.arch());

  const int B = cfg.batch_size;
  const int L = cfg.episode_length;
  const int obs_len = game.spec().observation_length[0];

  std::vector<std::unique_ptr<State>> states(B);
  std::vector<Rng> rng1, rng2;
  rng1.reserve(B);
  rng2.reserve(B);
  for (int e = 0; e < B; ++e) {
    const uint64_t es = derive_seed(batch_seed, static_cast<uint64_t>(e));
    states[e] = game.new_game(es);
    rng1.emplace_back(derive_seed(es, "a1"));
    rng2.emplace_back(derive_seed(es, "a2"));
  }

  // Rollout, keeping everything the backward pass needs: per-turn observation
  // batches, sampled actions, and shaped/unshaped rewards.
  std::vector<Eigen::MatrixXd> obs1(L), obs2(L);
  std::vector<std::vector<int>> act1(L, std::vector<int>(B));
  std::vector<std::vector<int>> act2(L, std::vector<int>(B));
  Eigen::MatrixXd shaped1(L, B), shaped2(L, B);
  Eigen::MatrixXd probs1, probs2;
  BatchGradient out;
  double true_total1 = 0.0, true_total2 = 0.0;

  std::vector<double> obs_buf(obs_len);
  for (int t = 0; t < L; ++t) {
    obs1[t].resize(obs_len, B);
    obs2[t].resize(obs_len, B);
    for (int e = 0; e < B; ++e) {
      if (states[e]->terminal())
        throw ContractError("episode_length exceeds the horizon of " + game.spec().name);
      game.observe(*states[e], 0, std::span<double>(obs_buf));
      obs1[t].col(e) = Eigen::Map<const Eigen::VectorXd>(obs_buf.data(), obs_len);
      game.observe(*states[e], 1, std::span<double>(obs_buf));
      obs2[t].col(e) = Eigen::Map<const Eigen::VectorXd>(obs_buf.data(), obs_len);
    }
    const double m1 = p1.forward_batch(obs1[t], probs1);
    const double m2 = p2.forward_batch(obs2[t], probs2);
    out.max_mean_abs_logit = std::max({out.max_mean_abs_logit, m1, m2});
    for (int e = 0; e < B; ++e) {
      const int a1 = sample_from(probs1, e, rng1[e]);
      const int a2 = sample_from(probs2, e, rng2[e]);
      act1[t][e] = a1;
      act2[t][e] = a2;
      const StepOutcome oc = game.step(*states[e], a1, a2);
      const auto shaped = shape_rewards(cfg.scheme, oc.rewards[0], oc.rewards[1]);
      shaped1(t, e) = shaped[0];
      shaped2(t, e) = shaped[1];
      true_total1 += oc.rewards[0];
      true_total2 += oc.rewards[1];
    }
  }
  out.rate = {true_total1 / (static_cast<double>(B) * L), true_total2 / (static_cast<double>(B) * L)};

  // Discounted returns-to-go, in place.
  for (int t = L - 2; t >= 0; --t) {
    shaped1.row(t) += cfg.discount * shaped1.row(t + 1);
    shaped2.row(t) += cfg.discount * shaped2.row(t + 1);
  }

  // Leave-one-out batch baseline per turn index keeps the estimate unbiased:
  // episode e's score never enters its own baseline.
  const double inv_b = 1.0 / B;
  Eigen::VectorXd coeff1(B), coeff2(B);
  out.grad1 = Eigen::VectorXd::Zero(p1.params().size());
  out.grad2 = Eigen::VectorXd::Zero(p2.params().size());
  const double per_sample_entropy = entropy_coeff * inv_b;
  for (int t = 0; t < L; ++t) {
    if (use_baseline) {
      const double sum1 = shaped1.row(t).sum();
      const double sum2 = shaped2.row(t).sum();
      for (int e = 0; e < B; ++e) {
        coeff1[e] = (shaped1(t, e) - (sum1 - shaped1(t, e)) / (B - 1)) * inv_b;
        coeff2[e] = (shaped2(t, e) - (sum2 - shaped2(t, e)) / (B - 1)) * inv_b;
      }
    } else {
      coeff1 = shaped1.row(t).transpose() * inv_b;
      coeff2 = shaped2.row(t).transpose() * inv_b;
    }
    p1.accumulate_batch_grad(obs1[t], act1[t], coeff1, per_sample_entropy, out.grad1);
    p2.accumulate_batch_grad(obs2[t], act2[t], coeff2, per_sample_entropy, out.grad2);
  }
  return out;
}

TrainedPair train_pair(const Game& game, const ArchSpec& arch, const TrainConfig& cfg,
                       uint64_t seed) {
  cfg.validate();
  check_arch_fits(game, arch);

  TrainedPair pair{Policy::random_init(arch, derive_seed(seed, "p1")),
                   Policy::random_init(arch, derive_seed(seed, "p2")),
                   {},
                   cfg.scheme};
  pair.curve.reserve(cfg.batches);

  const uint64_t data_seed = derive_seed(seed, "episodes");
  const double decay_span = std::max(1, cfg.batches - 1);
  for (int b = 0; b < cfg.batches; ++b) {
    const double entropy = cfg.entropy_weight * (cfg.batches - 1 - b) / decay_span;
    const BatchGradient g =
        train_batch_gradient(game, pair.player1, pair.player2, cfg, /*use_baseline=*/true,
                             entropy, derive_seed(data_seed, static_cast<uint64_t>(b)));
    if (!std::isfinite(g.max_mean_abs_logit) || g.max_mean_abs_logit > kDivergedMeanAbsLogit)
      throw DivergenceError("training diverged at batch " + std::to_string(b) +
                            " (mean |logit| " + format_double(g.max_mean_abs_logit) + ")");
    pair.player1.params() += cfg.learning_rate * g.grad1;
    pair.player2.params() += cfg.learning_rate * g.grad2;
    pair.curve.push_back({b, g.rate[0], g.rate[1], g.rate[0] + g.rate[1]});
  }
  return pair;
}

std::vector<TrainedPair> train_pool(const Game& game, const ArchSpec& arch,
                                    const TrainConfig& cfg, int pool_size, uint64_t seed,
                                    const std::string& checkpoint_dir) {
  if (pool_size < 1) throw ConfigError("pool_size must be positive");
  if (!checkpoint_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(checkpoint_dir, ec);
    if (ec) throw IoError("cannot create " + checkpoint_dir + ": " + ec.message());
  }

  std::vector<TrainedPair> pool;
  pool.reserve(pool_size);
  for (int i = 0; i < pool_size; ++i) {
    const std::string where = "pair " + std::to_string(i) + ": ";
    try {
      pool.push_back(train_pair(game, arch, cfg, derive_seed(seed, static_cast<uint64_t>(i))));
      if (!checkpoint_dir.empty()) {
        const std::string stem = checkpoint_dir + "/pair_" + std::to_string(i);
        pool.back().player1.save(stem + "_p1.policy");
        pool.back().player2.save(stem + "_p2.policy");
      }
    } catch (const DivergenceError& e) {
      throw DivergenceError(where + e.what());
    } catch (const IoError& e) {
      throw IoError(where + e.what());
    } catch (const Error& e) {
      throw ContractError(where + e.what());
    }
  }
  return pool;
}

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& curve,
                     const std::string& preamble) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << preamble << "batch,rate_p1,rate_p2,joint_rate\n";
  for (const CurvePoint& p : curve) {
    out << p.batch << ',' << format_double(p.rate_p1) << ',' << format_double(p.rate_p2) << ','
        << format_double(p.joint_rate) << '\n';
  }
  if (!out.good()) throw IoError("failed while writing " + path);
}

}  // namespace ccc

#include "ccc/training.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ccc/errors.hpp"
#include "ccc/evaluation.hpp"
#include "ccc/fishery.hpp"
#include "ccc/matrix_game.hpp"
#include "doctest.h"

using namespace ccc;

namespace {

TrainConfig matrix_train_config() {
  TrainConfig cfg;
  cfg.batch_size = 32;
  cfg.episode_length = 50;
  cfg.learning_rate = 3e-3;
  return cfg;
}

double defect_prob(const MatrixGame& game, const Policy& p, int mine, int theirs) {
  const std::vector<double> obs = game.obs_pattern(mine, theirs);
  return p.forward(obs)[MatrixGame::kDefect];
}

// Fraction of defect actions each player takes when the pair plays itself.
std::array<double, 2> played_defect_fraction(const MatrixGame& game, const Policy& p1,
                                             const Policy& p2, int episodes, int length,
                                             uint64_t seed) {
  std::array<int, 2> defects{};
  for (int e = 0; e < episodes; ++e) {
    const uint64_t es = derive_seed(seed, static_cast<uint64_t>(e));
    auto st = game.new_game(es);
    Rng r1(derive_seed(es, "a1")), r2(derive_seed(es, "a2"));
    for (int t = 0; t < length; ++t) {
      const int a1 = p1.sample(game.observe(*st, 0), r1);
      const int a2 = p2.sample(game.observe(*st, 1), r2);
      defects[0] += a1 == MatrixGame::kDefect;
      defects[1] += a2 == MatrixGame::kDefect;
      game.step(*st, a1, a2);
    }
  }
  const double n = static_cast<double>(episodes) * length;
  return {defects[0] / n, defects[1] / n};
}

}  // namespace

TEST_CASE("reward shaping matches the two schemes") {
  CHECK(shape_rewards(RewardScheme::kSelfish, 1.0, -2.0) == std::array<double, 2>{1.0, -2.0});
  CHECK(shape_rewards(RewardScheme::kProsocial, 1.0, -2.0) == std::array<double, 2>{-1.0, -1.0});
  CHECK(shape_rewards(RewardScheme::kProsocial, 0.0, 0.0) == std::array<double, 2>{0.0, 0.0});

  CHECK(parse_scheme("selfish") == RewardScheme::kSelfish);
  CHECK(parse_scheme("prosocial") == RewardScheme::kProsocial);
  CHECK(scheme_name(parse_scheme("selfish")) == std::string("selfish"));
  CHECK_THROWS_AS(parse_scheme("greedy"), ConfigError);
}

TEST_CASE("training config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());

  TrainConfig bad = cfg;
  bad.batch_size = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.discount = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.discount = 1.0 + 1e-9;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad.discount = 1.0;
  CHECK_NOTHROW(bad.validate());

  bad = cfg;
  bad.learning_rate = -1e-3;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.batches = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.episode_length = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  bad = cfg;
  bad.entropy_weight = -0.01;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("policy shapes must fit the game") {
  MatrixGame game{MatrixGameConfig{}};
  TrainConfig cfg = matrix_train_config();
  cfg.batches = 1;
  CHECK_THROWS_AS(train_pair(game, ArchSpec::tabular(5, 3), cfg, 1), ConfigError);
  CHECK_THROWS_AS(train_pair(game, ArchSpec::tabular(4, 2), cfg, 1), ConfigError);
}

TEST_CASE("zero learning rate leaves parameters at their initialization") {
  MatrixGame game{MatrixGameConfig{}};
  TrainConfig cfg = matrix_train_config();
  cfg.batches = 10;
  cfg.learning_rate = 0.0;
  const uint64_t seed = 99;

  const TrainedPair pair = train_pair(game, ArchSpec::tabular(5, 2), cfg, seed);
  const Policy init1 = Policy::random_init(ArchSpec::tabular(5, 2), derive_seed(seed, "p1"));
  const Policy init2 = Policy::random_init(ArchSpec::tabular(5, 2), derive_seed(seed, "p2"));
  CHECK(pair.player1.params() == init1.params());
  CHECK(pair.player2.params() == init2.params());
  CHECK(pair.curve.size() == 10);
}

TEST_CASE("training is deterministic in config and seed") {
  MatrixGame game{MatrixGameConfig{}};
  TrainConfig cfg = matrix_train_config();
  cfg.batches = 40;

  const TrainedPair a = train_pair(game, ArchSpec::tabular(5, 2), cfg, 7);
  const TrainedPair b = train_pair(game, ArchSpec::tabular(5, 2), cfg, 7);
  CHECK(a.player1.params() == b.player1.params());
  CHECK(a.player2.params() == b.player2.params());
  REQUIRE(a.curve.size() == b.curve.size());
  for (size_t i = 0; i < a.curve.size(); ++i) {
    CHECK(a.curve[i].batch == static_cast<int>(i));
    CHECK(a.curve[i].rate_p1 == b.curve[i].rate_p1);
    CHECK(a.curve[i].rate_p2 == b.curve[i].rate_p2);
    CHECK(a.curve[i].joint_rate == a.curve[i].rate_p1 + a.curve[i].rate_p2);
  }

  const TrainedPair c = train_pair(game, ArchSpec::tabular(5, 2), cfg, 8);
  CHECK(a.player1.params() != c.player1.params());
}

TEST_CASE("leave-one-out baseline does not shift the expected gradient") {
  MatrixGame game{MatrixGameConfig{}};
  TrainConfig cfg;
  cfg.batch_size = 4;
  cfg.episode_length = 3;
  cfg.discount = 0.9;

  const Policy p1 = Policy::random_init(ArchSpec::tabular(5, 2), 71, 0.5);
  const Policy p2 = Policy::random_init(ArchSpec::tabular(5, 2), 72, 0.5);
  const int n_params = static_cast<int>(p1.params().size());

  // Paired comparison on identical batch data: the difference between the
  // baselined and plain estimates should have mean zero, coordinate-wise.
  const int n_batches = 10000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2 * n_params);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(2 * n_params);
  Eigen::VectorXd diff(2 * n_params);
  for (int i = 0; i < n_batches; ++i) {
    const uint64_t bs = derive_seed(4242, static_cast<uint64_t>(i));
    const BatchGradient with = train_batch_gradient(game, p1, p2, cfg, true, 0.0, bs);
    const BatchGradient without = train_batch_gradient(game, p1, p2, cfg, false, 0.0, bs);
    CHECK(with.rate == without.rate);  // same rollouts, different estimator
    diff.head(n_params) = with.grad1 - without.grad1;
    diff.tail(n_params) = with.grad2 - without.grad2;
    const Eigen::VectorXd delta = diff - mean;
    mean += delta / (i + 1);
    m2 += delta.cwiseProduct(diff - mean);
  }
  int nontrivial = 0;
  for (int j = 0; j < 2 * n_params; ++j) {
    const double se = std::sqrt(m2[j] / (n_batches - 1) / n_batches);
    if (se == 0.0) continue;  // coordinate never touched by the rollouts
    ++nontrivial;
    CHECK(std::abs(mean[j]) <= 3.0 * se);
  }
  CHECK(nontrivial >= 4);
}

TEST_CASE("selfish training on the matrix dilemma converges to mutual defection") {
  MatrixGame game{MatrixGameConfig{}};
  TrainConfig cfg = matrix_train_config();
  const TrainedPair pair = train_pair(game, ArchSpec::tabular(5, 2), cfg, 2024);

  // Defection should dominate the play path.
  for (const Policy& p : {pair.player1, pair.player2})
    CHECK(defect_prob(game, p, MatrixGame::kDefect, MatrixGame::kDefect) > 0.9);
  const auto frac = played_defect_fraction(game, pair.player1, pair.player2, 200, 50, 31337);
  CHECK(frac[0] > 0.9);
  CHECK(frac[1] > 0.9);

  const std::array<double, 2> rates = analytic_rate(game, pair.player1, pair.player2);
  CHECK(rates[0] + rates[1] == doctest::Approx(2.0).epsilon(0.1));

  // The curve should end where the analytic rate says the pair plays.
  REQUIRE(pair.curve.size() == 2000);
  double late = 0.0;
  for (size_t i = pair.curve.size() - 50; i < pair.curve.size(); ++i)
    late += pair.curve[i].joint_rate;
  late /= 50.0;
  CHECK(late == doctest::Approx(2.0).epsilon(0.15));
  CHECK(pair.scheme == RewardScheme::kSelfish);
}

TEST_CASE("prosocial training on the matrix dilemma converges to mutual cooperation") {
  MatrixGame game{MatrixGameConfig{}};
  TrainConfig cfg = matrix_train_config();
  cfg.scheme = RewardScheme::kProsocial;
  const TrainedPair pair = train_pair(game, ArchSpec::tabular(5, 2), cfg, 2024);

  for (const Policy& p : {pair.player1, pair.player2}) {
    CHECK(defect_prob(game, p, -1, -1) < 0.1);
    CHECK(defect_prob(game, p, MatrixGame::kCooperate, MatrixGame::kCooperate) < 0.1);
  }

  const std::array<double, 2> rates = analytic_rate(game, pair.player1, pair.player2);
  CHECK(rates[0] + rates[1] == doctest::Approx(4.0).epsilon(0.05));
  CHECK(pair.scheme == RewardScheme::kProsocial);
}

TEST_CASE("runaway learning rates trip the divergence guard") {
  MatrixGame game{MatrixGameConfig{}};
  TrainConfig cfg = matrix_train_config();
  cfg.batches = 5;
  cfg.learning_rate = 1e6;
  CHECK_THROWS_AS(train_pair(game, ArchSpec::tabular(5, 2), cfg, 3), DivergenceError);
}

TEST_CASE("pool training derives per-pair seeds and checkpoints to disk") {
  MatrixGame game{MatrixGameConfig{}};
  TrainConfig cfg = matrix_train_config();
  cfg.batches = 15;

  const std::string dir = "ccc_test_pool_ckpt";
  std::filesystem::remove_all(dir);

  const std::vector<TrainedPair> pool = train_pool(game, ArchSpec::tabular(5, 2), cfg, 2, 77, dir);
  REQUIRE(pool.size() == 2);

  const TrainedPair solo = train_pair(game, ArchSpec::tabular(5, 2), cfg, derive_seed(77, uint64_t{0}));
  CHECK(pool[0].player1.params() == solo.player1.params());
  CHECK(pool[0].player2.params() == solo.player2.params());
  CHECK(pool[0].player1.params() != pool[1].player1.params());

  const Policy re1 = Policy::load(dir + "/pair_1_p1.policy");
  const Policy re2 = Policy::load(dir + "/pair_1_p2.policy");
  CHECK(re1.params() == pool[1].player1.params());
  CHECK(re2.params() == pool[1].player2.params());

  const std::vector<TrainedPair> again = train_pool(game, ArchSpec::tabular(5, 2), cfg, 2, 77);
  CHECK(again[1].player1.params() == pool[1].player1.params());

  CHECK_THROWS_AS(train_pool(game, ArchSpec::tabular(5, 2), cfg, 0, 77), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("pool training reports the failing pair") {
  MatrixGame game{MatrixGameConfig{}};
  TrainConfig cfg = matrix_train_config();
  cfg.batches = 5;
  cfg.learning_rate = 1e6;
  try {
    train_pool(game, ArchSpec::tabular(5, 2), cfg, 2, 5);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).rfind("pair 0: ", 0) == 0);
  }
}

TEST_CASE("gridworld training runs end to end") {
  FisheryGame game;
  TrainConfig cfg;
  cfg.batches = 5;
  cfg.batch_size = 8;
  cfg.episode_length = 30;
  const ArchSpec arch = ArchSpec::feedforward(75, 5, {16});

  const TrainedPair a = train_pair(game, arch, cfg, 11);
  const TrainedPair b = train_pair(game, arch, cfg, 11);
  CHECK(a.player1.params() == b.player1.params());
  CHECK(a.curve.size() == 5);
  for (const CurvePoint& p : a.curve) {
    CHECK(std::isfinite(p.joint_rate));
    CHECK(std::abs(p.rate_p1) <= game.spec().reward_bound);
    CHECK(std::abs(p.rate_p2) <= game.spec().reward_bound);
  }
}

TEST_CASE("curve CSV round-trips exactly") {
  const std::string path = "ccc_test_curve.csv";
  const std::vector<CurvePoint> curve = {{0, 1.5, 2.25, 3.75}, {1, -0.125, 0.0, -0.125}};
  write_curve_csv(path, curve);

  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() ==
        "batch,rate_p1,rate_p2,joint_rate\n"
        "0,1.5,2.25,3.75\n"
        "1,-0.125,0,-0.125\n");
  std::filesystem::remove(path);

  CHECK_THROWS_AS(write_curve_csv("no_such_dir/x/curve.csv", curve), IoError);
}

// Acceptance suite: ten go/no-go checks covering gradient correctness, the
// analytic-oracle agreement, the long-run cooperation guarantees, training
// separation, tournament orderings, the risky-game separation, the
// two-threshold variant, and CLI reproducibility. Prints exactly one
// PASS/FAIL line per criterion and exits nonzero if any fail. Tolerances are
// pinned here, next to each check.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ccc/agents.hpp"
#include "ccc/episode.hpp"
#include "ccc/evaluation.hpp"
#include "ccc/io.hpp"
#include "ccc/matrix_game.hpp"
#include "ccc/fishery.hpp"
#include "ccc/risky.hpp"
#include "ccc/training.hpp"

#ifndef CCC_CLI_PATH
#error "CCC_CLI_PATH must point at the built CLI binary"
#endif

using namespace ccc;
namespace fs = std::filesystem;

namespace {

constexpr uint64_t kSeed = 74205;

struct Outcome {
  bool pass = false;
  std::string detail;
};

Policy always_c() { return make_fixed_action_policy(5, 2, MatrixGame::kCooperate); }
Policy always_d() { return make_fixed_action_policy(5, 2, MatrixGame::kDefect); }

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// --- 1: policy gradient vs central finite differences ----------------------

Outcome c1_gradient_check() {
  const double h = 1e-5;
  const double tol = 1e-4;
  const ArchSpec arch = ArchSpec::feedforward(6, 3, {8, 7});
  double worst = 0.0;

  Rng rng(derive_seed(kSeed, "gradcheck"));
  for (int trial = 0; trial < 200; ++trial) {
    Policy p = Policy::random_init(arch, derive_seed(kSeed, trial), 0.5);
    std::vector<double> obs(6);
    for (double& x : obs) x = rng.next_double() * 2.0 - 1.0;
    const int action = static_cast<int>(rng.next_below(3));

    std::vector<double> grad(p.params().size());
    p.grad_log_prob(obs, action, grad);

    for (int j = 0; j < p.params().size(); ++j) {
      Policy plus = p, minus = p;
      plus.params()[j] += h;
      minus.params()[j] -= h;
      const double fd =
          (std::log(plus.forward(obs)[action]) - std::log(minus.forward(obs)[action])) /
          (2.0 * h);
      const double rel = std::abs(grad[j] - fd) / std::max(1.0, std::abs(fd));
      worst = std::max(worst, rel);
    }
  }
  return {worst < tol, "max rel err " + fmt(worst) + " over 200 triples (tolerance 1e-4)"};
}

// --- 2: Monte Carlo rate vs the stationary-distribution oracle -------------

Outcome c2_oracle_agreement() {
  const MatrixGame game{MatrixGameConfig{}};
  int ok = 0;
  double worst_pull = 0.0;  // |difference| in units of its standard error
  for (int i = 0; i < 20; ++i) {
    const Policy p1 = Policy::random_init(ArchSpec::tabular(5, 2), derive_seed(kSeed, 2 * i), 2.0);
    const Policy p2 =
        Policy::random_init(ArchSpec::tabular(5, 2), derive_seed(kSeed, 2 * i + 1), 2.0);
    const std::array<double, 2> exact = analytic_rate(game, p1, p2);
    const auto mc = estimate_rate(game, p1, p2, 24, 3000, derive_seed(derive_seed(kSeed, "mc"), i));
    bool pair_ok = true;
    for (int pl = 0; pl < 2; ++pl) {
      const double se = mc[pl].half_width / 1.96;
      const double diff = std::abs(mc[pl].rate - exact[pl]);
      if (se > 0.0) worst_pull = std::max(worst_pull, diff / se);
      pair_ok = pair_ok && diff <= 3.0 * se + 1e-9;
    }
    ok += pair_ok;
  }
  return {ok == 20, std::to_string(ok) + "/20 pairs within 3 standard errors (worst pull " +
                        fmt(worst_pull) + ")"};
}

// --- 3/4: long-run guarantees of the conditional cooperator ----------------

Outcome c3_cooperation_wins() {
  const MatrixGame game{MatrixGameConfig{}};
  const CccParams params{};  // alpha .05, q .1, k 32
  const int horizon = 5000, seeds = 100, quiet_after = 100;
  const double target = 2.0, tol = 0.05;

  int rate_ok = 0, quiet_ok = 0;
  for (int s = 0; s < seeds; ++s) {
    CccAgent ccc(game, 0, always_c(), always_d(), params,
                 derive_seed(derive_seed(kSeed, "c3agent"), s));
    PolicyAgent partner(always_c());
    const EpisodeTrace tr =
        run_episode(game, ccc, partner, horizon, derive_seed(derive_seed(kSeed, "c3ep"), s));
    rate_ok += std::abs(tr.cumulative.back()[0] / horizon - target) <= tol;
    bool quiet = true;
    const auto& modes = ccc.mode_history();
    for (size_t t = quiet_after; t < modes.size(); ++t)
      if (modes[t] == CccAgent::Mode::kDefect) quiet = false;
    quiet_ok += quiet;
  }
  const bool pass = rate_ok >= 95 && quiet_ok >= 95;
  return {pass, "rate in 2±0.05 for " + std::to_string(rate_ok) + "/100 seeds (need ≥95), no "
                "defect mode after turn 100 in " + std::to_string(quiet_ok) + "/100 (need ≥95)"};
}

Outcome c4_defecting_doesnt_pay() {
  const MatrixGame game{MatrixGameConfig{}};
  const CccParams params{};
  const int horizon = 5000, seeds = 100;
  const double cap = 1.0, tol = 0.05;

  int ok = 0;
  double worst = -1e300;
  for (int s = 0; s < seeds; ++s) {
    CccAgent ccc(game, 0, always_c(), always_d(), params,
                 derive_seed(derive_seed(kSeed, "c4agent"), s));
    PolicyAgent partner(always_d());
    const EpisodeTrace tr =
        run_episode(game, ccc, partner, horizon, derive_seed(derive_seed(kSeed, "c4ep"), s));
    const double partner_rate = tr.cumulative.back()[1] / horizon;
    worst = std::max(worst, partner_rate);
    ok += partner_rate <= cap + tol;
  }
  return {ok == seeds, "defector rate ≤ 1.05 in " + std::to_string(ok) + "/100 seeds (need "
                       "100/100, worst " + fmt(worst) + ")"};
}

// --- 5/6: gridworld training separation and tournament orderings -----------

struct FisheryPools {
  std::vector<TrainedPair> prosocial, selfish;
};

FisheryPools train_fishery_pools(const FisheryGame& game) {
  TrainConfig tc;
  tc.batches = 4000;
  tc.batch_size = 32;
  tc.episode_length = 200;
  tc.learning_rate = 1e-3;
  const ArchSpec arch = ArchSpec::feedforward(75, 5, {32});

  FisheryPools pools;
  tc.scheme = RewardScheme::kProsocial;
  pools.prosocial = train_pool(game, arch, tc, 5, derive_seed(kSeed, "prosocial"));
  tc.scheme = RewardScheme::kSelfish;
  pools.selfish = train_pool(game, arch, tc, 5, derive_seed(kSeed, "selfish"));
  return pools;
}

Outcome c5_training_separation(const FisheryGame& game, const FisheryPools& pools) {
  auto joint = [&](const TrainedPair& pair, uint64_t seed) {
    const auto r = estimate_rate(game, pair.player1, pair.player2, 20, 1000, seed);
    return r[0].rate + r[1].rate;
  };
  double min_pro = 1e300, max_self = -1e300;
  for (size_t i = 0; i < pools.prosocial.size(); ++i)
    min_pro = std::min(min_pro, joint(pools.prosocial[i], derive_seed(derive_seed(kSeed, "evalp"), i)));
  for (size_t i = 0; i < pools.selfish.size(); ++i)
    max_self = std::max(max_self, joint(pools.selfish[i], derive_seed(derive_seed(kSeed, "evals"), i)));
  return {min_pro > max_self,
          "worst prosocial joint rate " + fmt(min_pro) + " vs best selfish " + fmt(max_self) +
              " over 20 episodes x 1000 turns (need strict separation)"};
}

double metric_se(const CellStats& a, const CellStats& b) {
  return std::sqrt(a.s1_se * a.s1_se + b.s1_se * b.s1_se);
}

const StrategyMetrics& metric(const TournamentReport& rep, const std::string& name) {
  for (const auto& m : rep.metrics)
    if (m.strategy == name) return m;
  std::fprintf(stderr, "missing metrics for %s\n", name.c_str());
  std::abort();
}

Outcome c6_fishery_tournament(const FisheryGame& game, const FisheryPools& pools) {
  std::vector<std::array<Policy, 2>> pro, sel;
  for (const auto& p : pools.prosocial) pro.push_back({p.player1, p.player2});
  for (const auto& p : pools.selfish) sel.push_back({p.player1, p.player2});
  auto c = std::make_shared<PolicyStrategy>("C", 0, pro);
  auto d = std::make_shared<PolicyStrategy>("D", 1, sel);
  auto ccc = std::make_shared<CccStrategy>("CCC", c, d, CccParams{});

  const TournamentReport rep =
      run_tournament(game, {c, d, ccc}, 20, 1000, derive_seed(kSeed, "fishtour"));

  const double sm_c = metric(rep, "C").self_match;
  const double sm_ccc = metric(rep, "CCC").self_match;
  const double safety_c = metric(rep, "C").safety;
  const double safety_ccc = metric(rep, "CCC").safety;
  const double incent_c = metric(rep, "C").incent_c;
  const double incent_ccc = metric(rep, "CCC").incent_c;

  // One-sided checks with a 3-standard-error allowance from the cell SEs.
  const double se_sm =
      std::sqrt(std::pow(rep.cell("CCC", "CCC").s1_se, 2) +
                0.64 * std::pow(rep.cell("C", "C").s1_se, 2));
  const bool a = sm_ccc - 0.8 * sm_c >= -3.0 * se_sm;

  // Shared (D,D) baseline cancels in the safety comparison.
  const double safety_gap = safety_ccc - safety_c;
  const double se_gap = metric_se(rep.cell("CCC", "D"), rep.cell("C", "D"));
  const bool b = safety_gap >= 3.0 * se_gap && safety_gap > 0.0;

  const double se_abs =
      std::sqrt(std::pow(rep.cell("CCC", "D").s1_se, 2) + std::pow(rep.cell("D", "D").s1_se, 2) +
                0.04 * std::pow(rep.cell("C", "C").s1_se, 2));
  const bool cc = std::abs(safety_ccc) <= 0.2 * sm_c + 3.0 * se_abs;

  const double se_incent_ccc = std::sqrt(std::pow(rep.cell("CCC", "C").s2_se, 2) +
                                         std::pow(rep.cell("CCC", "D").s2_se, 2));
  const double se_incent_c = std::sqrt(std::pow(rep.cell("C", "C").s2_se, 2) +
                                       std::pow(rep.cell("C", "D").s2_se, 2));
  const bool dd = incent_ccc >= 3.0 * se_incent_ccc && incent_ccc > 0.0 &&
                  incent_c <= -3.0 * se_incent_c;

  return {a && b && cc && dd,
          "SelfMatch CCC/C " + fmt(sm_ccc) + "/" + fmt(sm_c) + " (need ≥0.8x), Safety CCC/C " +
              fmt(safety_ccc) + "/" + fmt(safety_c) + ", |Safety(CCC)| vs 0.2*SelfMatch(C) " +
              fmt(std::abs(safety_ccc)) + "/" + fmt(0.2 * sm_c) + ", IncentC CCC/C " +
              fmt(incent_ccc) + "/" + fmt(incent_c) + " (need >0>), all at 3 s.e."};
}

// --- 7: deterministic-game parity of the two reciprocators -----------------

Outcome c7_matrix_parity() {
  const MatrixGame game{MatrixGameConfig{}};
  auto c = std::make_shared<PolicyStrategy>("C", always_c());
  auto d = std::make_shared<PolicyStrategy>("D", always_d());
  auto ccc = std::make_shared<CccStrategy>("CCC", always_c(), always_d(), CccParams{});
  auto amtft = std::make_shared<AmtftStrategy>("amTFT", always_c(), always_d(), AmtftConfig{});

  const TournamentReport rep =
      run_tournament(game, {c, d, ccc, amtft}, 20, 1000, derive_seed(kSeed, "pdtour"));

  const double sm_c = metric(rep, "C").self_match;
  const double margin = 0.15 * sm_c;
  const double d_safety = std::abs(metric(rep, "CCC").safety - metric(rep, "amTFT").safety);
  const double d_incent = std::abs(metric(rep, "CCC").incent_c - metric(rep, "amTFT").incent_c);
  const double incent_ccc = metric(rep, "CCC").incent_c;
  const double incent_amtft = metric(rep, "amTFT").incent_c;

  const bool pass =
      d_safety < margin && d_incent < margin && incent_ccc > 0.0 && incent_amtft > 0.0;
  return {pass, "|Safety gap| " + fmt(d_safety) + ", |IncentC gap| " + fmt(d_incent) +
                    " (margin " + fmt(margin) + "), IncentC CCC/amTFT " + fmt(incent_ccc) + "/" +
                    fmt(incent_amtft) + " (need both >0)"};
}

// --- 8: rare-consequence game separates intention from consequence ---------

Outcome c8_risky_separation() {
  // Frozen configuration: sparse defection landings (1% per turn) under the
  // rare-penalty wrapper (p = 0.1), a deviation-sensitive debit threshold,
  // and enough games to resolve the ordering at 3 standard errors.
  MatrixGameConfig base;
  base.defect_hit_prob = 0.01;
  auto matrix = std::make_shared<MatrixGame>(base);
  const RiskyGame game(matrix, 0.1);
  const int games = 3000, length = 1000;

  const CccParams ccc_params{};
  AmtftConfig am;
  am.debit_threshold = 0.1;

  const CccStrategy ccc("CCC", always_c(), always_d(), ccc_params);
  const AmtftStrategy amtft("amTFT", always_c(), always_d(), am);
  const PolicyStrategy coop("C", always_c());
  const PolicyStrategy defect("D", always_d());

  const MatchupResult ccc_c = run_matchup(game, ccc, coop, games, length, derive_seed(kSeed, "c8cc"));
  const MatchupResult ccc_d = run_matchup(game, ccc, defect, games, length, derive_seed(kSeed, "c8cd"));
  const MatchupResult am_c = run_matchup(game, amtft, coop, games, length, derive_seed(kSeed, "c8ac"));
  const MatchupResult am_d = run_matchup(game, amtft, defect, games, length, derive_seed(kSeed, "c8ad"));

  // Safety(amTFT) - Safety(CCC): the mutual-defection baseline cancels, so
  // the comparison only needs the two versus-defector cells.
  const double safety_gap = am_d.s1_mean - ccc_d.s1_mean;
  const double se_gap = std::sqrt(am_d.s1_se * am_d.s1_se + ccc_d.s1_se * ccc_d.s1_se);
  const bool a = safety_gap >= 3.0 * se_gap && safety_gap > 0.0;

  const double incent_am = am_c.s2_mean - am_d.s2_mean;
  const double incent_ccc = ccc_c.s2_mean - ccc_d.s2_mean;
  const double se_incent_ccc =
      std::sqrt(ccc_c.s2_se * ccc_c.s2_se + ccc_d.s2_se * ccc_d.s2_se);
  const bool b = incent_am > 0.0;
  const bool c = incent_ccc - se_incent_ccc < 0.0;  // 0 > IncentC(CCC) - 1 s.e.

  return {a && b && c, "Safety gap amTFT-CCC " + fmt(safety_gap) + " (need ≥3 s.e. = " +
                           fmt(3.0 * se_gap) + "), IncentC amTFT " + fmt(incent_am) +
                           " (need >0), IncentC CCC " + fmt(incent_ccc) + " ± " +
                           fmt(se_incent_ccc) + " (need <0 within 1 s.e.)"};
}

// --- 9: two-threshold variant on synthetic oscillating payoffs -------------

Outcome c9_hysteresis() {
  // Constant-bank schedule: defect threshold 9.5 for both rules, the wide
  // rule resumes only at 9.9. Identical reward paths oscillate tightly
  // around 9.5.
  ThresholdSchedule sched;
  sched.alpha = 0.05;
  sched.q = 0.1;
  sched.k = 2;
  const int turns = 60;
  for (int t = 0; t < turns; ++t) {
    sched.cc_quantile.push_back(10.0);
    sched.cd_mean.push_back(0.0);
    sched.cc_max.push_back(10.0);
    sched.cd_min.push_back(0.0);
    sched.threshold.push_back(9.5);
  }
  const MatrixGame game{MatrixGameConfig{}};
  const std::vector<double> obs = game.obs_pattern(-1, -1);

  auto reward_only = [](double r) {
    TurnInfo info;
    info.my_reward = r;
    return info;
  };
  auto switches = [](const std::vector<CccAgent::Mode>& h) {
    int n = 0;
    for (size_t i = 1; i < h.size(); ++i) n += h[i] != h[i - 1];
    return n;
  };

  int fewer_on = 0, identical_on = 0;
  const int paths = 100;
  Rng path_rng(derive_seed(kSeed, "paths"));
  for (int trial = 0; trial < paths; ++trial) {
    CccAgent plain(sched, always_c(), always_d(),
                   CccParams{.alpha_d = 0.05, .alpha_c = 0.05, .q = 0.1, .k = 2});
    CccAgent wide(sched, always_c(), always_d(),
                  CccParams{.alpha_d = 0.05, .alpha_c = 0.01, .q = 0.1, .k = 2});
    Rng ra(derive_seed(kSeed, 3 * trial)), rb(derive_seed(kSeed, 3 * trial + 1));
    std::vector<bool> memoryless;
    double cum = 0.0;
    for (int t = 0; t < turns; ++t) {
      plain.act(obs, ra);
      wide.act(obs, rb);
      memoryless.push_back(t > 0 && cum < 9.5);  // single-threshold reference rule
      const double target = 9.5 + (t % 2 == 0 ? -1.0 : 1.0) * (0.05 + 0.2 * path_rng.next_double());
      plain.observe_turn(reward_only(target - cum));
      wide.observe_turn(reward_only(target - cum));
      cum = target;
    }
    fewer_on += switches(wide.mode_history()) < switches(plain.mode_history());

    bool same = true;
    for (int t = 0; t < turns; ++t)
      if ((plain.mode_history()[t] == CccAgent::Mode::kDefect) != memoryless[t]) same = false;
    identical_on += same;
  }
  return {fewer_on == paths && identical_on == paths,
          "wide rule switched less on " + std::to_string(fewer_on) + "/100 paths (need 100), "
          "equal-threshold decisions matched the memoryless rule on " +
              std::to_string(identical_on) + "/100"};
}

// --- 10: CLI runs are byte-reproducible ------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CCC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return (rc != -1 && WIFEXITED(rc)) ? WEXITSTATUS(rc) : -1;
}

bool dirs_identical(const std::string& a, const std::string& b) {
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const std::string name = entry.path().filename().string();
    if (!fs::exists(b + "/" + name)) return false;
    if (io::read_text_file(entry.path().string()) != io::read_text_file(b + "/" + name))
      return false;
    ++compared;
  }
  return compared > 0;
}

Outcome c10_cli_reproducibility() {
  const std::string root = "acceptance_scratch";
  fs::remove_all(root);
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"match", "match --games 5 --length 100 --p1 ccc --p2 defector --seed 123"},
      {"thresholds", "thresholds --horizon 100 --seed 5"},
      {"train", "train --batches 5 --seed 7"},
      {"verify", "verify-theorem --horizon 1000 --seeds 2 --seed 9"},
  };
  int ok = 0;
  std::string failed;
  for (const auto& [name, args] : runs) {
    const std::string a = root + "/" + name + "_a", b = root + "/" + name + "_b";
    if (run_cli(args + " --out " + a) == 0 && run_cli(args + " --out " + b) == 0 &&
        dirs_identical(a, b)) {
      ++ok;
    } else {
      failed += (failed.empty() ? "" : ", ") + name;
    }
  }
  fs::remove_all(root);
  return {ok == static_cast<int>(runs.size()),
          std::to_string(ok) + "/" + std::to_string(runs.size()) +
              " commands byte-identical on rerun" +
              (failed.empty() ? "" : " (failed: " + failed + ")")};
}

void report(int id, const char* name, const Outcome& o, double seconds) {
  std::printf("criterion %2d %s %-22s %s [%.1fs]\n", id, o.pass ? "PASS" : "FAIL", name,
              o.detail.c_str(), seconds);
  std::fflush(stdout);
}

}  // namespace

int main() {
  using clock = std::chrono::steady_clock;
  bool all = true;
  auto timed = [&](int id, const char* name, auto&& fn) {
    const auto t0 = clock::now();
    const Outcome o = fn();
    const double secs = std::chrono::duration<double>(clock::now() - t0).count();
    report(id, name, o, secs);
    all = all && o.pass;
  };

  timed(1, "gradient-check", c1_gradient_check);
  timed(2, "oracle-agreement", c2_oracle_agreement);
  timed(3, "cooperation-wins", c3_cooperation_wins);
  timed(4, "defection-capped", c4_defecting_doesnt_pay);

  const FisheryGame fishery;
  const auto t0 = clock::now();
  const FisheryPools pools = train_fishery_pools(fishery);
  std::printf("# trained 2x5 gridworld pairs in %.1fs\n",
              std::chrono::duration<double>(clock::now() - t0).count());
  std::fflush(stdout);
  timed(5, "training-separation", [&] { return c5_training_separation(fishery, pools); });
  timed(6, "fishery-orderings", [&] { return c6_fishery_tournament(fishery, pools); });

  timed(7, "matrix-parity", c7_matrix_parity);
  timed(8, "risky-separation", c8_risky_separation);
  timed(9, "hysteresis-variant", c9_hysteresis);
  timed(10, "cli-reproducibility", c10_cli_reproducibility);

  std::printf("%s\n", all ? "ACCEPTANCE: all criteria passed"
                          : "ACCEPTANCE: at least one criterion failed");
  return all ? 0 : 1;
}

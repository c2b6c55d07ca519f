#include "ccc/evaluation.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "ccc/errors.hpp"

namespace ccc {

namespace {

// Drop numerically irrelevant transitions so saturated policies produce the
// chain structure they intend, then renormalize.
constexpr double kEdgeEps = 1e-14;

std::vector<char> reachable_from(const Eigen::MatrixXd& P, int start) {
  int n = static_cast<int>(P.rows());
  std::vector<char> seen(n, 0);
  std::vector<int> stack{start};
  seen[start] = 1;
  while (!stack.empty()) {
    int s = stack.back();
    stack.pop_back();
    for (int t = 0; t < n; ++t)
      if (P(s, t) > 0.0 && !seen[t]) {
        seen[t] = 1;
        stack.push_back(t);
      }
  }
  return seen;
}

}  // namespace

std::array<double, 2> analytic_rate(const MatrixGame& game, const Policy& p1, const Policy& p2) {
  const int A = game.spec().action_count[0];
  const int S = A * A + 1;
  const int start = S - 1;
  for (const Policy* p : {&p1, &p2})
    if (p->arch().input != S || p->arch().actions != A)
      throw ContractError("policy shape does not match the matrix game's observation");

  // Action distributions per chain state, from each seat's point of view.
  std::vector<std::vector<double>> d1(S), d2(S);
  for (int s = 0; s < S; ++s) {
    int a = s == start ? -1 : s / A;
    int b = s == start ? -1 : s % A;
    d1[s] = p1.forward(game.obs_pattern(a, b));
    d2[s] = p2.forward(game.obs_pattern(b, a));
  }

  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(S, S);
  std::vector<std::array<double, 2>> r(S, {0.0, 0.0});
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a)
      for (int b = 0; b < A; ++b) {
        double pr = d1[s][a] * d2[s][b];
        if (pr < kEdgeEps) continue;
        P(s, a * A + b) += pr;
        auto er = game.expected_rewards(a, b);
        r[s][0] += pr * er[0];
        r[s][1] += pr * er[1];
      }
    double row = P.row(s).sum();
    P.row(s) /= row;
    r[s][0] /= row;
    r[s][1] /= row;
  }

  std::vector<char> reach = reachable_from(P, start);

  // Pairwise reachability over the reachable subchain; a recurrent class is
  // a strongly connected component with no exit.
  Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic> R(S, S);
  for (int i = 0; i < S; ++i) {
    auto from_i = reachable_from(P, i);
    for (int j = 0; j < S; ++j) R(i, j) = from_i[j];
  }

  std::vector<int> comp(S, -1);
  std::vector<std::vector<int>> sinks;
  std::vector<int> transient;
  for (int i = 0; i < S; ++i) {
    if (!reach[i] || comp[i] >= 0) continue;
    std::vector<int> scc;
    for (int j = 0; j < S; ++j)
      if (reach[j] && (i == j || (R(i, j) && R(j, i)))) scc.push_back(j);
    bool closed = true;
    for (int s : scc)
      for (int t = 0; t < S; ++t)
        if (P(s, t) > 0.0 && std::find(scc.begin(), scc.end(), t) == scc.end()) closed = false;
    // A singleton without a self-loop is transient even if nothing leaves
    // its component set.
    if (scc.size() == 1 && P(scc[0], scc[0]) == 0.0) closed = false;
    int id = closed ? static_cast<int>(sinks.size()) : -2;
    for (int s : scc) comp[s] = id;
    if (closed) sinks.push_back(scc);
  }
  for (int i = 0; i < S; ++i)
    if (reach[i] && comp[i] == -2) transient.push_back(i);

  // Long-run rate of each recurrent class from its stationary distribution.
  std::vector<std::array<double, 2>> sink_rate;
  for (const auto& scc : sinks) {
    int m = static_cast<int>(scc.size());
    Eigen::MatrixXd M(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) M(i, j) = P(scc[j], scc[i]) - (i == j ? 1.0 : 0.0);
    for (int j = 0; j < m; ++j) M(m - 1, j) = 1.0;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    rhs[m - 1] = 1.0;
    Eigen::VectorXd pi = M.fullPivLu().solve(rhs);
    std::array<double, 2> rate{0.0, 0.0};
    for (int i = 0; i < m; ++i) {
      rate[0] += pi[i] * r[scc[i]][0];
      rate[1] += pi[i] * r[scc[i]][1];
    }
    sink_rate.push_back(rate);
  }

  if (sinks.size() == 1) return sink_rate[0];

  // Several reachable recurrent classes: weight by absorption probability
  // from the start state.
  int nt = static_cast<int>(transient.size());
  std::vector<int> tidx(S, -1);
  for (int i = 0; i < nt; ++i) tidx[transient[i]] = i;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(nt, nt);
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < nt; ++j) T(i, j) = P(transient[i], transient[j]);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(Eigen::MatrixXd::Identity(nt, nt) - T);

  std::array<double, 2> total{0.0, 0.0};
  for (size_t k = 0; k < sinks.size(); ++k) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nt);
    for (int i = 0; i < nt; ++i)
      for (int s : sinks[k]) b[i] += P(transient[i], s);
    Eigen::VectorXd h = lu.solve(b);
    double w = h[tidx[start]];
    total[0] += w * sink_rate[k][0];
    total[1] += w * sink_rate[k][1];
  }
  return total;
}

PolicyStrategy::PolicyStrategy(std::string name, Policy fixed)
    : Strategy(std::move(name)), family_(-1) {
  pairs_.push_back({fixed, std::move(fixed)});
}

PolicyStrategy::PolicyStrategy(std::string name, int family,
                               std::vector<std::array<Policy, 2>> pairs)
    : Strategy(std::move(name)), family_(family), pairs_(std::move(pairs)) {
  if (pairs_.empty()) throw ContractError("policy pool must not be empty");
}

std::vector<PoolDraw> PolicyStrategy::draw(Rng& rng) const {
  PoolDraw d;
  d.family = family_;
  d.member = static_cast<int>(rng.next_below(static_cast<uint32_t>(pairs_.size())));
  d.slot = static_cast<int>(rng.next_below(2));
  return {d};
}

const Policy& PolicyStrategy::policy_for(const PoolDraw& d) const {
  return pairs_.at(d.member)[d.slot];
}

std::unique_ptr<Agent> PolicyStrategy::make(const Game&, int, uint64_t,
                                            const std::vector<PoolDraw>& draws) const {
  if (draws.size() != 1) throw ContractError("policy strategy expects one draw");
  return std::make_unique<PolicyAgent>(policy_for(draws[0]));
}

namespace {

bool draws_collide(const std::vector<PoolDraw>& a, const std::vector<PoolDraw>& b) {
  for (const PoolDraw& x : a)
    for (const PoolDraw& y : b)
      if (x.family >= 0 && x.family == y.family && x.member == y.member) return true;
  return false;
}

struct Moments {
  double mean = 0, se = 0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  int n = static_cast<int>(xs.size());
  for (double x : xs) m.mean += x;
  m.mean /= n;
  if (n > 1) {
    double ss = 0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.se = std::sqrt(ss / (n - 1) / n);
  }
  return m;
}

}  // namespace

MatchupResult run_matchup(const Game& game, const Strategy& s1, const Strategy& s2, int games,
                          int length, uint64_t seed) {
  if (games < 1) throw ContractError("matchup needs at least one game");
  MatchupResult out;
  out.games = games;
  std::vector<double> p1, p2;
  for (int g = 0; g < games; ++g) {
    uint64_t game_seed = derive_seed(seed, g);
    Rng draw_rng(derive_seed(game_seed, "draw"));
    auto d1 = s1.draw(draw_rng);
    std::vector<PoolDraw> d2;
    for (int attempt = 0; attempt < 64; ++attempt) {
      d2 = s2.draw(draw_rng);
      if (!draws_collide(d1, d2)) break;
    }
    auto a1 = s1.make(game, 0, derive_seed(game_seed, "agent1"), d1);
    auto a2 = s2.make(game, 1, derive_seed(game_seed, "agent2"), d2);
    EpisodeTrace t = run_episode(game, *a1, *a2, length, game_seed);
    out.per_game.push_back(t.total);
    p1.push_back(t.total[0]);
    p2.push_back(t.total[1]);
  }
  Moments m1 = moments(p1), m2 = moments(p2);
  out.s1_mean = m1.mean;
  out.s1_se = m1.se;
  out.s2_mean = m2.mean;
  out.s2_se = m2.se;
  return out;
}

const CellStats& TournamentReport::cell(const std::string& row, const std::string& col) const {
  for (const CellStats& c : cells)
    if (c.row == row && c.col == col) return c;
  throw ContractError("no tournament cell " + row + " vs " + col);
}

TournamentReport run_tournament(const Game& game,
                                const std::vector<std::shared_ptr<const Strategy>>& strategies,
                                int games_per_cell, int length, uint64_t seed) {
  if (games_per_cell < 1) throw ContractError("tournament needs at least one game per cell");
  int n = static_cast<int>(strategies.size());
  TournamentReport report;
  report.games_per_cell = games_per_cell;
  report.length = length;
  bool has_c = false, has_d = false;
  for (const auto& s : strategies) {
    report.strategies.push_back(s->name());
    has_c = has_c || s->name() == "C";
    has_d = has_d || s->name() == "D";
  }
  if (!has_c || !has_d)
    throw ConfigError("tournament metrics need strategies named C and D in the pool");

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      MatchupResult m = run_matchup(game, *strategies[i], *strategies[j], games_per_cell, length,
                                    derive_seed(seed, i * n + j));
      CellStats c;
      c.row = strategies[i]->name();
      c.col = strategies[j]->name();
      c.s1_mean = m.s1_mean;
      c.s1_se = m.s1_se;
      c.s2_mean = m.s2_mean;
      c.s2_se = m.s2_se;
      c.games = m.games;
      report.cells.push_back(c);
    }

  for (const auto& s : strategies) {
    const std::string& x = s->name();
    StrategyMetrics sm;
    sm.strategy = x;
    sm.self_match = report.cell(x, x).s1_mean;
    sm.safety = report.cell(x, "D").s1_mean - report.cell("D", "D").s1_mean;
    sm.incent_c = report.cell(x, "C").s2_mean - report.cell(x, "D").s2_mean;
    report.metrics.push_back(sm);
  }
  return report;
}

}  // namespace ccc

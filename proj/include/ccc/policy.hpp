#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ccc/rng.hpp"

namespace ccc {

enum class ArchKind { kTabular, kFeedforward };

// Network shape. Tabular policies are a single bias-free linear map, so a
// one-hot observation selects a column of logits; feedforward policies add
// tanh hidden layers. Parameters live in one flat vector, laid out layer by
// layer with each weight matrix in column-major order.
struct ArchSpec {
  ArchKind kind = ArchKind::kTabular;
  int input = 0;
  int actions = 0;
  std::vector<int> hidden;  // empty iff tabular

  int param_count() const;
  std::string describe() const;
  bool operator==(const ArchSpec&) const = default;

  static ArchSpec tabular(int input, int actions);
  static ArchSpec feedforward(int input, int actions, std::vector<int> hidden);
};

// Stochastic softmax policy over a fixed action set. Stateless: behavior is
// a pure function of the observation, all randomness comes from the caller's
// Rng. Copyable value type.
class Policy {
 public:
  explicit Policy(ArchSpec arch);

  // Uniform(-scale, scale) init, deterministic in `seed`.
  static Policy random_init(ArchSpec arch, uint64_t seed, double scale = 0.05);

  const ArchSpec& arch() const { return arch_; }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }

  void forward(std::span<const double> obs, std::span<double> probs_out) const;
  std::vector<double> forward(std::span<const double> obs) const;
  int sample(std::span<const double> obs, Rng& rng) const;

  // d log pi(action | obs) / d params, overwriting `grad_out`.
  void grad_log_prob(std::span<const double> obs, int action,
                     std::span<double> grad_out) const;

  // Columns of `obs` are observations; fills one probability column per
  // sample and returns the mean |final-layer logit| (divergence telemetry).
  double forward_batch(const Eigen::MatrixXd& obs, Eigen::MatrixXd& probs_out) const;

  // Adds sum_i coeff[i] * grad log pi(actions[i] | obs col i)
  //      + entropy_coeff * grad H(pi(obs col i))   to `grad_accum`.
  // One fused forward/backward pass over the whole batch.
  void accumulate_batch_grad(const Eigen::MatrixXd& obs, const std::vector<int>& actions,
                             const Eigen::VectorXd& coeff, double entropy_coeff,
                             Eigen::VectorXd& grad_accum) const;

  void save(const std::string& path) const;
  static Policy load(const std::string& path);
  // Load and require the given architecture; mismatches are an error, never
  // a silent reshape.
  static Policy load_expect(const std::string& path, const ArchSpec& expected);

 private:
  ArchSpec arch_;
  Eigen::VectorXd params_;
};

double distribution_entropy(std::span<const double> probs);

// Degenerate tabular policy putting logit `logit` on one action and 0 on the
// rest, for every observation pattern. With the default saturated logit the
// action is chosen with probability > 1 - 1e-9.
Policy make_fixed_action_policy(int input, int actions, int action, double logit = 50.0);

}  // namespace ccc

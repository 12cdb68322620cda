#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mrnaopt/error.hpp"
#include "mrnaopt/metrics.hpp"
#include "mrnaopt/policy.hpp"
#include "mrnaopt/proxy.hpp"

namespace mrnaopt {

// ---------------------------------------------------------------------------
// Objective configuration

struct ObjectiveTerm {
  Metric metric = Metric::HalfLife;
  double weight = 1.0;   // sign gives the direction
  double damping = 0.0;  // delta_k
};

struct ObjectiveConfig {
  std::vector<ObjectiveTerm> terms = {{Metric::HalfLife, 1.0, 1.5},
                                      {Metric::Te, 1.0, 0.01},
                                      {Metric::MfeNorm, -0.5, 0.01},
                                      {Metric::UContent, -0.5, 0.01},
                                      {Metric::UtrPlausibility, 0.5, 0.01}};
  double clip = 5.0;  // may be +inf
  double beta = 0.01;

  Eigen::VectorXd weights() const;
  Eigen::VectorXd dampings() const;
  bool needs_predictors() const;
  /// Throws BadInput unless K >= 1, some weight is nonzero, every delta >= 0, c > 0 and beta >= 0.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Group statistics and advantages

template <typename Scalar>
struct GroupStats {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> stddev;  // population
  Eigen::Index valid_count = 0;
};

/// Per-column mean and population std over the valid rows of a G x K score matrix.
/// Throws NoValidMembers.
template <typename Derived>
GroupStats<typename Derived::Scalar> group_stats(const Eigen::MatrixBase<Derived>& scores,
                                                 const std::vector<bool>& valid) {
  using Scalar = typename Derived::Scalar;
  if (static_cast<Eigen::Index>(valid.size()) != scores.rows()) {
    throw Error(ErrorCode::LengthMismatch, "one validity flag per group member required");
  }
  GroupStats<Scalar> s;
  s.mean = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(scores.cols());
  s.stddev = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    if (!valid[static_cast<std::size_t>(i)]) continue;
    s.mean += scores.row(i).transpose();
    ++s.valid_count;
  }
  if (s.valid_count == 0) throw Error(ErrorCode::NoValidMembers, "every group member is invalid");
  s.mean /= static_cast<Scalar>(s.valid_count);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    if (!valid[static_cast<std::size_t>(i)]) continue;
    s.stddev += (scores.row(i).transpose() - s.mean).cwiseAbs2();
  }
  s.stddev = (s.stddev / static_cast<Scalar>(s.valid_count)).cwiseSqrt();
  return s;
}

template <typename Scalar>
struct AdvantageVector {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> raw;       // A_i before centring
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> centered;  // A_i - mean_j A_j, constant over each trace
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> terms;  // clipped standardised scores; 0 for invalid rows
  GroupStats<Scalar> stats;
};

/// Multi-objective group advantage. Valid rows get
///   A_i = sum_k (w_k / |w|) * clip((r_ik - mu_k) / (sigma_k + delta_k), -c, c),
/// invalid rows get -c, and every row is then centred on the mean over all G rows without
/// rescaling. A zero denominator (sigma_k = delta_k = 0) contributes 0.
template <typename Derived>
AdvantageVector<typename Derived::Scalar> aggregate_advantage(const Eigen::MatrixBase<Derived>& scores,
                                                              const std::vector<bool>& valid,
                                                              const Eigen::VectorXd& weights,
                                                              const Eigen::VectorXd& damping, double clip) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index G = scores.rows();
  const Eigen::Index K = scores.cols();
  if (weights.size() != K || damping.size() != K) throw Error(ErrorCode::DimMismatch, "one weight and damping per objective");
  const double norm = weights.norm();
  if (!(norm > 0.0)) throw Error(ErrorCode::BadInput, "objective weights are all zero");
  if (!(clip > 0.0)) throw Error(ErrorCode::BadInput, "clip bound must be positive");

  AdvantageVector<Scalar> a;
  a.stats = group_stats(scores, valid);
  const bool any_invalid = a.stats.valid_count < G;
  if (any_invalid && std::isinf(clip)) throw Error(ErrorCode::BadInput, "invalid members need a finite clip bound");

  const Scalar c = static_cast<Scalar>(clip);
  a.terms = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(G, K);
  a.raw.resize(G);
  for (Eigen::Index i = 0; i < G; ++i) {
    if (!valid[static_cast<std::size_t>(i)]) {
      a.raw(i) = -c;
      continue;
    }
    Scalar sum = 0;
    for (Eigen::Index k = 0; k < K; ++k) {
      const Scalar denom = a.stats.stddev(k) + static_cast<Scalar>(damping(k));
      const Scalar z = denom > 0 ? (scores(i, k) - a.stats.mean(k)) / denom : Scalar(0);
      a.terms(i, k) = std::clamp(z, -c, c);
      sum += static_cast<Scalar>(weights(k) / norm) * a.terms(i, k);
    }
    a.raw(i) = sum;
  }
  a.centered = a.raw.array() - a.raw.mean();
  return a;
}

template <typename Derived>
AdvantageVector<typename Derived::Scalar> aggregate_advantage(const Eigen::MatrixBase<Derived>& scores,
                                                              const std::vector<bool>& valid,
                                                              const ObjectiveConfig& cfg) {
  return aggregate_advantage(scores, valid, cfg.weights(), cfg.dampings(), cfg.clip);
}

/// Single-reward GRPO: (r_i - mean) / population std. Throws BadInput for G < 2, ZeroStd.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> scalar_grpo_advantage(const Eigen::MatrixBase<Derived>& rewards) {
  using Scalar = typename Derived::Scalar;
  if (rewards.size() < 2) throw Error(ErrorCode::BadInput, "group needs at least two rewards");
  const Scalar mu = rewards.mean();
  const Scalar sigma = std::sqrt((rewards.array() - mu).square().mean());
  if (!(sigma > 0)) throw Error(ErrorCode::ZeroStd, "all rewards in the group are equal");
  return (rewards.array() - mu) / sigma;
}

/// Importance-weighted k3 estimator from log-probabilities:
/// (pi/pi_old) * (pi_ref/pi - log(pi_ref/pi) - 1).
template <typename Scalar>
Scalar kl_term(Scalar logp, Scalar logp_old, Scalar logp_ref) {
  const Scalar d = logp_ref - logp;
  return std::exp(logp - logp_old) * (std::exp(d) - d - Scalar(1));
}

// ---------------------------------------------------------------------------
// Rollout groups and the token-level objective

struct RolloutGroup {
  AminoAcidSeq protein;
  std::vector<std::vector<TokenId>> tokens;        // G token traces
  std::vector<std::vector<double>> old_logprobs;   // under pi_old, aligned with tokens
  std::vector<std::vector<double>> ref_logprobs;   // under pi_ref; empty means compute on demand
  std::vector<MetricVector> metrics;

  std::size_t size() const { return tokens.size(); }
  std::size_t token_count() const;
  /// Throws TraceMismatch when the traces do not line up.
  void check() const;
};

struct LossResult {
  double objective = 0.0;  // J for this group
  double kl_mean = 0.0;    // token-averaged k3
  Eigen::MatrixXd grad;    // dJ/dW
};

/// J = (1 / sum_i |a_i|) sum_i sum_t [ rho_it * A_i - beta * k3_it ], rho = pi / pi_old, with
/// A_i = advantage(i) constant along trace i. The gradient of each token is
/// rho * (A_i - beta * (log pi - log pi_ref)) * d log pi.
LossResult mogrpo_loss(const RolloutGroup& group, const Eigen::VectorXd& advantage, const Policy& policy,
                       const Policy& reference, double beta, double tau = 1.0);

// ---------------------------------------------------------------------------
// Training loop

struct RunConfig {
  ObjectiveConfig objective;
  int group_size = 16;
  int batch_prompts = 8;
  int steps = 1000;
  double lr = 1e-5;
  int warmup = 50;
  double momentum = 0.0;  // 0 gives plain gradient ascent
  double temperature = 1.0;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  ScoringConfig scoring;
  DecodeConfig decode;

  /// Reads a JSON document; absent keys keep their defaults. Throws BadFormat / BadInput.
  static RunConfig from_json(const std::string& text);
  std::string to_json() const;
  void validate() const;
};

struct StepLog {
  int step = 0;
  std::array<double, kNumObjectives> valid_mean{};  // NaN when no member is valid
  double invalid_rate = 0.0;
  double mean_abs_advantage = 0.0;
  double kl_mean = 0.0;
  double objective = 0.0;
  double lr = 0.0;
  bool skipped = false;
};

struct TrainResult {
  Policy policy;
  std::vector<StepLog> log;
};

using StepCallback = std::function<void(const StepLog&)>;

/// MO-GRPO. pi_ref is a frozen copy of `init`; pi_old is the policy at rollout time, so each
/// batch gets one update. The policy's decode limits are replaced by cfg.decode.
TrainResult rl_train(const Policy& init, const std::vector<AminoAcidSeq>& prompts, const Predictors* predictors,
                     const RunConfig& cfg, const StepCallback& on_step = {});

/// lr * min(1, (step + 1) / warmup).
double warmup_lr(double lr, int warmup, int step);

/// CSV with header step,<metric names>,invalid_rate,mean_A_abs,kl_mean.
std::string step_log_csv(const std::vector<StepLog>& log);

}  // namespace mrnaopt

// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pegrl/rewards.hpp"

namespace pegrl {

enum class Regime { pegrl, separate, baseline_grpo };

Regime regime_from_string(const std::string& name);
std::string regime_to_string(Regime regime);

struct TrainConfig {
    // environment
    int vocab_size = 6;
    int task_length = 4;
    int train_instances = 64;
    int eval_instances = 16;

    // sampling
    int n = 8;
    int m = 8;
    int max_len = 4;
    int hard_cap = 6;

    // rewards
    double alpha = 0.95;
    Recipe recipe = Recipe::proxy_plus_chrf;
    double advantage_eps = 1e-6;

    // optimization
    double lambda_pe = 8.0;  // defaults to M when not set explicitly
    double lambda_mt = 1.0;
    double learning_rate = 0.1;
    int steps = 300;
    int batch_size = 16;
    Regime regime = Regime::pegrl;
    std::uint64_t seed = 0;

    // logging / evaluation
    int eval_interval = 5;
    bool log_rollouts = false;
    int threads = 1;

    // The single-stage baseline consumes the same rollout budget as the
    // two-stage regimes: one group of N + N*M drafts.
    int baseline_group_size() const { return n + n * m; }
    int rollouts_per_instance() const;

    void validate() const;  // throws std::invalid_argument naming the field
};

struct GradientAccumulator {
    DenseGradient grad;
    int trajectory_count = 0;
};

enum class RewardWeighting {
    advantages,   // GRPO-normalized, used in all training regimes
    raw_rewards,  // unbiasedness oracle mode: raw R and plain child means
};

// The two weighted gradient terms assembled from one scored tree:
//   lambda_pe * (1/(N*M)) sum_ij c_pe(i,j) grad log pi(tau1_ij | p, tau0_i)
// + lambda_mt * (1/N)     sum_i  c_mt(i)   grad log pi(tau0_i | q)
// where the coefficients are group advantages in training mode and raw
// rewards (with the plain per-draft child mean) in oracle mode.
GradientAccumulator estimate_weighted_gradient(const PolicyParams& theta,
                                               const TrajectoryTree& tree,
                                               const TreeRewards& records,
                                               const std::vector<GrpoGroup>& groups,
                                               double lambda_pe, double lambda_mt,
                                               RewardWeighting weighting = RewardWeighting::advantages);

// Plain ascent step: theta' = theta + lr * grad. Rejects non-finite grads.
PolicyParams sgd_step(const PolicyParams& theta, const DenseGradient& grad, double learning_rate);

enum class EvalView { draft, post_edit };
enum class EvalDecode { greedy, sampled };

struct EvalRow {
    EvalView view = EvalView::draft;
    EvalDecode decode = EvalDecode::greedy;
    double chrf_pp = 0.0;
    double proxy = 0.0;
    double quality_f = 0.0;
};

using EvalSnapshot = std::vector<EvalRow>;  // 4 rows: view x decode

struct StepRecord {
    int step = 0;
    double mean_draft_reward = 0.0;
    std::optional<double> mean_edit_reward;  // absent for the single-stage baseline
    double gated_fraction = 0.0;
    double penalty_fraction = 0.0;
    double grad_norm = 0.0;
    std::optional<EvalSnapshot> eval;
};

struct TrainingLog {
    std::vector<StepRecord> steps;

    std::string to_jsonl() const;
    std::string eval_csv() const;  // step,view,decode,chrf_pp,proxy,quality_f
};

struct TrainResult {
    TrainingLog log;
    PolicyParams theta;
    std::string rollout_jsonl;  // populated when config.log_rollouts is set
};

// Frozen-policy evaluation: greedy and sampled decodes of the draft-only and
// post-edited views, averaged over the held-out instances.
EvalSnapshot evaluate_policy(const PolicyParams& theta, const std::vector<TaskInstance>& instances,
                             const TrainConfig& config, int step);

TrainResult train(const TrainConfig& config, const std::vector<TaskInstance>& instances,
                  const std::vector<TaskInstance>& eval_instances);

// Final evaluation of one full training run, used by the compare command and
// the regime/lambda sweeps.
struct SweepOutcome {
    std::uint64_t seed = 0;
    Regime regime = Regime::pegrl;
    double lambda_pe = 0.0;
    double lambda_mt = 0.0;
    EvalSnapshot final_eval;

    double quality(EvalView view, EvalDecode decode) const;
};

SweepOutcome run_training_outcome(const TrainConfig& config);

std::string sweep_csv(const std::vector<SweepOutcome>& outcomes);

}  // namespace pegrl

// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "pegrl/rng.hpp"
#include "pegrl/task.hpp"
#include "pegrl/vocab.hpp"

namespace pegrl {

enum class Mode { translate, post_edit };

// What a trajectory was conditioned on: the source, plus the draft tokens in
// post-edit mode.
struct Conditioning {
    TokenSeq src;
    std::optional<TokenSeq> draft;

    static Conditioning for_translate(TokenSeq src_) { return {std::move(src_), std::nullopt}; }
    static Conditioning for_post_edit(TokenSeq src_, TokenSeq draft_) {
        return {std::move(src_), std::move(draft_)};
    }
};

struct Trajectory {
    Mode mode = Mode::translate;
    Conditioning conditioning;
    TokenSeq tokens;                // content tokens only; eos is never stored
    std::vector<double> step_logps; // one per emitted action, eos step included
    double total_logp = 0.0;
    bool truncated = false;         // hit hard cap before emitting eos
};

// The single shared parameter vector theta: one table per conditioning mode,
// each row holding logits over actions 0..|V| (content tokens plus eos).
// Context axes have |V|+1 slots: one per content token plus an overflow slot
// for steps beyond the conditioning sequence.
struct PolicyParams {
    int vocab_size = 0;
    std::vector<double> theta_mt;  // [vocab_size+1][num_actions], row-major
    std::vector<double> theta_pe;  // [(vocab_size+1)^2][num_actions]

    static PolicyParams zeros(const Vocab& vocab);

    int num_actions() const { return vocab_size + 1; }
    int mt_rows() const { return vocab_size + 1; }
    int pe_rows() const { return (vocab_size + 1) * (vocab_size + 1); }

    double* row(Mode mode, int context);
    const double* row(Mode mode, int context) const;
};

// Post-edit context rows are indexed by (source slot, draft slot); an empty
// or exhausted draft contributes the overflow slot.
int translate_context(const Conditioning& cond, int step, int vocab_size);
int post_edit_context(const Conditioning& cond, int step, int vocab_size);
int context_at(Mode mode, const Conditioning& cond, int step, int vocab_size);
int context_rows(Mode mode, int vocab_size);

// log softmax over the context row: logit[action] - logsumexp(row).
double log_prob(const PolicyParams& theta, Mode mode, int context, int action);

// Full log-softmax row for one context.
std::vector<double> log_prob_row(const PolicyParams& theta, Mode mode, int context);

// Autoregressive rollout. Stops when eos is drawn, or at hard_cap content
// tokens with truncated=true. max_len is the nominal output budget and must
// satisfy hard_cap >= max_len >= 1.
Trajectory sample_trajectory(const PolicyParams& theta, Mode mode, const Conditioning& cond,
                             Rng& rng, int max_len, int hard_cap);

// Deterministic argmax rollout (ties break to the lowest action id).
Trajectory greedy_trajectory(const PolicyParams& theta, Mode mode, const Conditioning& cond,
                             int hard_cap);

// Gradient containers congruent with PolicyParams.
struct DenseGradient {
    std::vector<double> mt;
    std::vector<double> pe;

    static DenseGradient zeros_like(const PolicyParams& theta);
    void add_scaled(const DenseGradient& other, double scale);
    void scale(double factor);
    double l2_norm() const;
    double max_abs() const;
    bool all_finite() const;
};

// grad log pi(tau | .) for one trajectory: only the visited context rows are
// present. Each row sums to zero (softmax gradient identity).
struct SparseGradient {
    Mode mode = Mode::translate;
    std::map<int, std::vector<double>> rows;  // context -> d/dlogit vector
};

SparseGradient logprob_gradient(const PolicyParams& theta, const Trajectory& trajectory);

// Fused version for hot loops: accumulates scale * grad log pi(tau) into the
// dense accumulator without materializing the sparse rows.
void accumulate_logprob_gradient(DenseGradient& acc, const PolicyParams& theta,
                                 const Trajectory& trajectory, double scale);

struct EnumeratedTrajectory {
    Trajectory trajectory;
    double prob = 0.0;  // exp(total_logp)
};

inline constexpr std::uint64_t kEnumerationBudget = 1000000;

// All trajectories with exactly exact_len content tokens followed by eos.
// Raw probabilities; they sum to the mass of that event, not to 1.
std::vector<EnumeratedTrajectory> enumerate_trajectories(const PolicyParams& theta, Mode mode,
                                                         const Conditioning& cond, int exact_len);

// The full support of sample_trajectory under the given hard cap: every
// eos-terminated sequence of length < hard_cap plus every truncated sequence
// of length hard_cap. Probabilities sum to 1 exactly.
std::vector<EnumeratedTrajectory> enumerate_support(const PolicyParams& theta, Mode mode,
                                                    const Conditioning& cond, int hard_cap);

// Reward assigned to an (initial draft, post-edit) trajectory pair.
using PairRewardFn = std::function<double(const Trajectory& draft, const Trajectory& edit)>;

struct ExactGradient {
    double objective = 0.0;
    DenseGradient term_pe;  // E[ R * grad log pi(tau1 | p, tau0) ]
    DenseGradient term_mt;  // E[ grad log pi(tau0 | q) * E[R | tau0] ]

    DenseGradient total() const;
};

// Exact two-stage objective and its gradient by full enumeration of the
// sampling support (draft_cap / edit_cap are the per-stage hard caps).
// Both gradient terms are returned separately so reweighting identities can
// be checked literally.
ExactGradient exact_objective_and_gradient(const PolicyParams& theta, const TaskInstance& instance,
                                           const PairRewardFn& reward_fn, int draft_cap,
                                           int edit_cap);

// theta serialization (final-parameter snapshots).
std::string policy_to_json(const PolicyParams& theta);
PolicyParams policy_from_json(const std::string& json_text);

}  // namespace pegrl

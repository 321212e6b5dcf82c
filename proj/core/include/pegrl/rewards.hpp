// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "pegrl/metrics.hpp"
#include "pegrl/sampling.hpp"

namespace pegrl {

// Per-trajectory reward with the casing that produced it. Exactly one of
// {penalized, gated, scored} applies: penalized forces -1, gated forces 0.
struct RewardRecord {
    double reward = 0.0;
    bool gated = false;
    bool penalized = false;
    double semantic_component = 0.0;
};

// Post-edit reward: -1 when the trajectory blew the token budget, 0 when the
// draft was returned unchanged with semantic quality below alpha, otherwise
// the quality score.
RewardRecord pe_reward(const TokenSeq& src, const Trajectory& draft, const Trajectory& pe,
                       const TokenSeq& tgt, double alpha, Recipe recipe);

// Draft reward: -1 when the draft itself blew the budget, otherwise the mean
// of its children's rewards (their penalties and gates included).
RewardRecord mt_reward(const Trajectory& draft, const std::vector<RewardRecord>& child_records);

// Group-normalized advantages: (r - mean) / (population std + eps); all zero
// when the group has exactly zero variance.
std::vector<double> group_advantages(const std::vector<double>& rewards, double eps = 1e-6);

// The (draft, edit) -> reward closure used by the exact-enumeration oracles;
// identical casing to pe_reward.
PairRewardFn pair_reward_fn(const TaskInstance& instance, double alpha, Recipe recipe);

struct TrajectoryCoord {
    bool is_draft = false;
    int i = 0;
    int j = 0;  // meaningful only for edits
};

enum class GroupKind { mt_group, pe_group };

struct GrpoGroup {
    GroupKind kind = GroupKind::mt_group;
    int draft_index = -1;  // which draft a pe_group belongs to
    std::vector<TrajectoryCoord> member_ids;
    std::vector<double> rewards;
    std::vector<double> advantages;
};

// All reward records for one tree, aligned with its coordinates.
struct TreeRewards {
    std::vector<RewardRecord> draft_records;                 // N
    std::vector<std::vector<RewardRecord>> edit_records;     // N x M
};

// Scores every trajectory in the tree with the two-stage casing: children by
// pe_reward, drafts by mt_reward over their children.
TreeRewards score_tree(const TrajectoryTree& tree, double alpha, Recipe recipe);

// Variant for the separate-training regime: drafts are scored by the quality
// function directly instead of by their children's mean.
TreeRewards score_tree_separate(const TrajectoryTree& tree, double alpha, Recipe recipe);

// One mt group over the N drafts plus N pe groups of M edits each, with
// advantages computed per group independently.
std::vector<GrpoGroup> build_groups(const TrajectoryTree& tree, const TreeRewards& records,
                                    double eps = 1e-6);

}  // namespace pegrl

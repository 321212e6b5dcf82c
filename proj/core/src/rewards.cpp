// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0

#include "pegrl/rewards.hpp"

#include <cmath>
#include <stdexcept>

namespace pegrl {

RewardRecord pe_reward(const TokenSeq& src, const Trajectory& draft, const Trajectory& pe,
                       const TokenSeq& tgt, double alpha, Recipe recipe) {
    if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("pe_reward: alpha must be in (0,1]");

    RewardRecord record;
    if (pe.truncated) {
        record.reward = -1.0;
        record.penalized = true;
        return record;
    }

    const QualityScore q = quality_f(pe.tokens, src, tgt, recipe);
    record.semantic_component = q.semantic;
    if (pe.tokens == draft.tokens && q.semantic < alpha) {
        record.reward = 0.0;
        record.gated = true;
        return record;
    }
    record.reward = q.total();
    return record;
}

RewardRecord mt_reward(const Trajectory& draft, const std::vector<RewardRecord>& child_records) {
    if (child_records.empty()) throw std::invalid_argument("mt_reward: no post-edit children");

    RewardRecord record;
    if (draft.truncated) {
        record.reward = -1.0;
        record.penalized = true;
        return record;
    }
    double sum = 0.0;
    for (const auto& child : child_records) sum += child.reward;
    record.reward = sum / static_cast<double>(child_records.size());
    return record;
}

std::vector<double> group_advantages(const std::vector<double>& rewards, double eps) {
    if (rewards.size() < 2)
        throw std::invalid_argument("group_advantages: group too small for advantage normalization");

    bool constant = true;
    for (double r : rewards)
        if (r != rewards.front()) {
            constant = false;
            break;
        }
    if (constant) return std::vector<double>(rewards.size(), 0.0);

    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(rewards.size());

    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(rewards.size());
    const double std_dev = std::sqrt(var);
    if (std_dev == 0.0) return std::vector<double>(rewards.size(), 0.0);

    std::vector<double> advantages(rewards.size());
    for (std::size_t k = 0; k < rewards.size(); ++k)
        advantages[k] = (rewards[k] - mean) / (std_dev + eps);
    return advantages;
}

PairRewardFn pair_reward_fn(const TaskInstance& instance, double alpha, Recipe recipe) {
    return [instance, alpha, recipe](const Trajectory& draft, const Trajectory& edit) {
        return pe_reward(instance.src, draft, edit, instance.tgt, alpha, recipe).reward;
    };
}

TreeRewards score_tree(const TrajectoryTree& tree, double alpha, Recipe recipe) {
    TreeRewards rewards;
    const int n = tree.n();
    const int m = tree.m();
    rewards.edit_records.resize(static_cast<std::size_t>(n));
    rewards.draft_records.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto& row = rewards.edit_records[static_cast<std::size_t>(i)];
        row.reserve(static_cast<std::size_t>(m));
        const auto& draft = tree.drafts[static_cast<std::size_t>(i)];
        for (int j = 0; j < m; ++j) {
            row.push_back(pe_reward(tree.instance.src, draft,
                                    tree.edits[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
                                    tree.instance.tgt, alpha, recipe));
        }
        rewards.draft_records.push_back(mt_reward(draft, row));
    }
    return rewards;
}

TreeRewards score_tree_separate(const TrajectoryTree& tree, double alpha, Recipe recipe) {
    TreeRewards rewards = score_tree(tree, alpha, recipe);
    // Separate training: the translation stage is rewarded by output quality
    // directly, not by its children's mean.
    for (int i = 0; i < tree.n(); ++i) {
        const auto& draft = tree.drafts[static_cast<std::size_t>(i)];
        RewardRecord record;
        if (draft.truncated) {
            record.reward = -1.0;
            record.penalized = true;
        } else {
            const QualityScore q = quality_f(draft.tokens, tree.instance.src, tree.instance.tgt, recipe);
            record.reward = q.total();
            record.semantic_component = q.semantic;
        }
        rewards.draft_records[static_cast<std::size_t>(i)] = record;
    }
    return rewards;
}

std::vector<GrpoGroup> build_groups(const TrajectoryTree& tree, const TreeRewards& records,
                                    double eps) {
    const int n = tree.n();
    const int m = tree.m();
    if (static_cast<int>(records.draft_records.size()) != n ||
        static_cast<int>(records.edit_records.size()) != n)
        throw std::invalid_argument("build_groups: records do not cover the tree");
    for (const auto& row : records.edit_records)
        if (static_cast<int>(row.size()) != m)
            throw std::invalid_argument("build_groups: records do not cover the tree");

    std::vector<GrpoGroup> groups;
    groups.reserve(static_cast<std::size_t>(n) + 1);

    GrpoGroup mt;
    mt.kind = GroupKind::mt_group;
    for (int i = 0; i < n; ++i) {
        mt.member_ids.push_back({true, i, 0});
        mt.rewards.push_back(records.draft_records[static_cast<std::size_t>(i)].reward);
    }
    mt.advantages = group_advantages(mt.rewards, eps);
    groups.push_back(std::move(mt));

    for (int i = 0; i < n; ++i) {
        GrpoGroup pe;
        pe.kind = GroupKind::pe_group;
        pe.draft_index = i;
        for (int j = 0; j < m; ++j) {
            pe.member_ids.push_back({false, i, j});
            pe.rewards.push_back(
                records.edit_records[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].reward);
        }
        pe.advantages = group_advantages(pe.rewards, eps);
        groups.push_back(std::move(pe));
    }
    return groups;
}

}  // namespace pegrl

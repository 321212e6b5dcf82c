// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pegrl/policy.hpp"
#include "pegrl/task.hpp"

namespace pegrl {

// One instance's hybrid rollout: N drafts, each with M post-edit children.
struct TrajectoryTree {
    TaskInstance instance;
    std::vector<Trajectory> drafts;               // N, mode=translate
    std::vector<std::vector<Trajectory>> edits;   // N x M, edits[i][j] conditioned on drafts[i]

    int n() const { return static_cast<int>(drafts.size()); }
    int m() const { return drafts.empty() ? 0 : static_cast<int>(edits.front().size()); }
    int total_trajectories() const { return n() + n() * m(); }
};

// Samples the full tree. Per-trajectory streams are derived from
// (seed, instance id, i, j), so the tree is a pure function of those values
// and may be assembled by any number of workers in any order.
TrajectoryTree hybrid_sample(const PolicyParams& theta, const TaskInstance& instance, int n, int m,
                             std::uint64_t seed, int max_len, int hard_cap);

// JSONL serialization for offline inspection: one trajectory per line with
// its tree coordinates.
std::string tree_to_jsonl(const TrajectoryTree& tree);

}  // namespace pegrl

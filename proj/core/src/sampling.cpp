// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0

#include "pegrl/sampling.hpp"

#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pegrl {

TrajectoryTree hybrid_sample(const PolicyParams& theta, const TaskInstance& instance, int n, int m,
                             std::uint64_t seed, int max_len, int hard_cap) {
    if (n < 2 || m < 2)
        throw std::invalid_argument("hybrid_sample: group too small for advantage normalization");

    TrajectoryTree tree;
    tree.instance = instance;
    tree.drafts.reserve(static_cast<std::size_t>(n));
    tree.edits.resize(static_cast<std::size_t>(n));

    const auto draft_cond = Conditioning::for_translate(instance.src);
    for (int i = 0; i < n; ++i) {
        Rng rng(derive_stream(seed, {stream_tag::kDraft, instance.id, static_cast<std::uint64_t>(i)}));
        tree.drafts.push_back(
            sample_trajectory(theta, Mode::translate, draft_cond, rng, max_len, hard_cap));

        const auto edit_cond =
            Conditioning::for_post_edit(instance.src, tree.drafts.back().tokens);
        auto& row = tree.edits[static_cast<std::size_t>(i)];
        row.reserve(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) {
            Rng edit_rng(derive_stream(seed, {stream_tag::kEdit, instance.id,
                                              static_cast<std::uint64_t>(i),
                                              static_cast<std::uint64_t>(j)}));
            row.push_back(
                sample_trajectory(theta, Mode::post_edit, edit_cond, edit_rng, max_len, hard_cap));
        }
    }
    return tree;
}

namespace {

nlohmann::ordered_json trajectory_json(const Trajectory& traj) {
    nlohmann::ordered_json j;
    j["mode"] = traj.mode == Mode::translate ? "translate" : "post_edit";
    j["tokens"] = traj.tokens;
    j["step_logps"] = traj.step_logps;
    j["total_logp"] = traj.total_logp;
    j["truncated"] = traj.truncated;
    nlohmann::ordered_json cond;
    cond["src"] = traj.conditioning.src;
    if (traj.conditioning.draft.has_value()) cond["draft"] = traj.conditioning.draft.value();
    j["conditioning"] = cond;
    return j;
}

}  // namespace

std::string tree_to_jsonl(const TrajectoryTree& tree) {
    std::string out;
    for (int i = 0; i < tree.n(); ++i) {
        auto j = trajectory_json(tree.drafts[static_cast<std::size_t>(i)]);
        j["instance"] = tree.instance.id;
        j["kind"] = "draft";
        j["i"] = i;
        out += j.dump();
        out += '\n';
    }
    for (int i = 0; i < tree.n(); ++i) {
        for (int jdx = 0; jdx < tree.m(); ++jdx) {
            auto j = trajectory_json(tree.edits[static_cast<std::size_t>(i)][static_cast<std::size_t>(jdx)]);
            j["instance"] = tree.instance.id;
            j["kind"] = "edit";
            j["i"] = i;
            j["j"] = jdx;
            out += j.dump();
            out += '\n';
        }
    }
    return out;
}

}  // namespace pegrl

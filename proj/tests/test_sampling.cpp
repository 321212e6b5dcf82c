// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "pegrl/sampling.hpp"

using namespace pegrl;

namespace {

TaskInstance test_instance(std::uint64_t seed = 1, int vocab = 4, int length = 3) {
    return make_cipher_instance_seeded(seed, 0, Vocab(vocab), length);
}

}  // namespace

TEST_CASE("hybrid sample produces the N + N*M tree") {
    const auto inst = test_instance();
    const PolicyParams theta = PolicyParams::zeros(Vocab(4));

    const auto tree = hybrid_sample(theta, inst, 8, 8, 7, 3, 5);
    CHECK(tree.n() == 8);
    CHECK(tree.m() == 8);
    CHECK(tree.total_trajectories() == 72);

    const auto small = hybrid_sample(theta, inst, 2, 2, 7, 3, 5);
    CHECK(small.n() == 2);
    CHECK(small.m() == 2);
    CHECK(small.total_trajectories() == 6);

    CHECK_THROWS_AS(hybrid_sample(theta, inst, 1, 8, 7, 3, 5), std::invalid_argument);
    CHECK_THROWS_AS(hybrid_sample(theta, inst, 8, 1, 7, 3, 5), std::invalid_argument);
}

TEST_CASE("trees are a pure function of (seed, instance, N, M)") {
    const auto inst = test_instance(5);
    PolicyParams theta = PolicyParams::zeros(Vocab(4));
    Rng init(3);
    for (auto& x : theta.theta_mt) x = init.next_double();
    for (auto& x : theta.theta_pe) x = init.next_double();

    const auto a = hybrid_sample(theta, inst, 4, 3, 42, 3, 5);
    const auto b = hybrid_sample(theta, inst, 4, 3, 42, 3, 5);
    CHECK(tree_to_jsonl(a) == tree_to_jsonl(b));

    const auto c = hybrid_sample(theta, inst, 4, 3, 43, 3, 5);
    CHECK(tree_to_jsonl(a) != tree_to_jsonl(c));
}

TEST_CASE("edit conditioning references its draft verbatim") {
    const auto inst = test_instance(9);
    const PolicyParams theta = PolicyParams::zeros(Vocab(4));
    const auto tree = hybrid_sample(theta, inst, 3, 4, 11, 3, 5);

    for (int i = 0; i < tree.n(); ++i) {
        const auto& draft = tree.drafts[static_cast<std::size_t>(i)];
        CHECK(draft.mode == Mode::translate);
        for (const auto& edit : tree.edits[static_cast<std::size_t>(i)]) {
            CHECK(edit.mode == Mode::post_edit);
            REQUIRE(edit.conditioning.draft.has_value());
            CHECK(edit.conditioning.draft.value() == draft.tokens);
            CHECK(edit.conditioning.src == inst.src);
        }
    }
}

TEST_CASE("truncated drafts still get their M children") {
    const auto inst = test_instance(2, 3, 2);
    PolicyParams theta = PolicyParams::zeros(Vocab(3));
    for (int ctx = 0; ctx < theta.mt_rows(); ++ctx)
        theta.row(Mode::translate, ctx)[3] -= 1e9;  // eos starved

    const auto tree = hybrid_sample(theta, inst, 2, 3, 1, 2, 2);
    for (const auto& draft : tree.drafts) CHECK(draft.truncated);
    for (const auto& row : tree.edits) CHECK(row.size() == 3);
}

TEST_CASE("identical drafts share conditioning across groups") {
    TaskInstance inst;
    inst.id = 0;
    inst.vocab_size = 4;
    inst.src = {0, 1};
    inst.cipher = {1, 2, 3, 0};
    inst.tgt = {1, 2};

    PolicyParams theta = PolicyParams::zeros(Vocab(4));
    // deterministic translate head: every draft comes out identical
    theta.row(Mode::translate, 0)[1] += 60.0;
    theta.row(Mode::translate, 1)[2] += 60.0;
    theta.row(Mode::translate, 4)[4] += 60.0;  // overflow row emits eos

    const auto tree = hybrid_sample(theta, inst, 4, 2, 13, 2, 4);
    for (int i = 1; i < tree.n(); ++i)
        CHECK(tree.drafts[static_cast<std::size_t>(i)].tokens == tree.drafts[0].tokens);
    CHECK(tree.drafts[0].tokens == TokenSeq{1, 2});
    for (int i = 0; i < tree.n(); ++i)
        for (const auto& edit : tree.edits[static_cast<std::size_t>(i)])
            CHECK(edit.conditioning.draft.value() == tree.drafts[0].tokens);
}

TEST_CASE("jsonl serialization has one line per trajectory") {
    const auto inst = test_instance(8);
    const PolicyParams theta = PolicyParams::zeros(Vocab(4));
    const auto tree = hybrid_sample(theta, inst, 3, 2, 17, 3, 5);
    const auto jsonl = tree_to_jsonl(tree);
    const auto lines = std::count(jsonl.begin(), jsonl.end(), '\n');
    CHECK(lines == tree.total_trajectories());
}

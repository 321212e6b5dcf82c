// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "pegrl/rewards.hpp"
#include "pegrl/trainer.hpp"

namespace {

using namespace pegrl;

void BM_HybridSample(benchmark::State& state) {
    const Vocab vocab(6);
    const PolicyParams theta = PolicyParams::zeros(vocab);
    const auto instances = make_instances(1, 0, 1, vocab, 4);
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(hybrid_sample(theta, instances[0], 8, 8, ++seed, 4, 6));
    }
}
BENCHMARK(BM_HybridSample);

void BM_ScoreTree(benchmark::State& state) {
    const Vocab vocab(6);
    const PolicyParams theta = PolicyParams::zeros(vocab);
    const auto instances = make_instances(2, 0, 1, vocab, 4);
    const auto tree = hybrid_sample(theta, instances[0], 8, 8, 5, 4, 6);
    for (auto _ : state) benchmark::DoNotOptimize(score_tree(tree, 0.95, Recipe::proxy_plus_chrf));
}
BENCHMARK(BM_ScoreTree);

void BM_WeightedGradient(benchmark::State& state) {
    const Vocab vocab(6);
    const PolicyParams theta = PolicyParams::zeros(vocab);
    const auto instances = make_instances(3, 0, 1, vocab, 4);
    const auto tree = hybrid_sample(theta, instances[0], 8, 8, 5, 4, 6);
    const auto records = score_tree(tree, 0.95, Recipe::proxy_plus_chrf);
    const auto groups = build_groups(tree, records);
    for (auto _ : state)
        benchmark::DoNotOptimize(estimate_weighted_gradient(theta, tree, records, groups, 8.0, 1.0));
}
BENCHMARK(BM_WeightedGradient);

void BM_ExactGradient(benchmark::State& state) {
    const Vocab vocab(3);
    const PolicyParams theta = PolicyParams::zeros(vocab);
    const auto inst = make_cipher_instance_seeded(4, 0, vocab, 2);
    const auto reward = pair_reward_fn(inst, 0.95, Recipe::proxy_plus_chrf);
    for (auto _ : state)
        benchmark::DoNotOptimize(exact_objective_and_gradient(theta, inst, reward, 2, 2).objective);
}
BENCHMARK(BM_ExactGradient);

}  // namespace

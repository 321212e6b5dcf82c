// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "pegrl/metrics.hpp"
#include "pegrl/rng.hpp"

namespace {

using namespace pegrl;

TokenSeq random_seq(Rng& rng, int alphabet, int len) {
    TokenSeq seq(static_cast<std::size_t>(len));
    for (auto& t : seq) t = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(alphabet)));
    return seq;
}

void BM_ChrfPP(benchmark::State& state) {
    Rng rng(1);
    const auto hyp = random_seq(rng, 6, static_cast<int>(state.range(0)));
    const auto ref = random_seq(rng, 6, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(chrf_pp(hyp, ref).value);
}
BENCHMARK(BM_ChrfPP)->Arg(4)->Arg(16)->Arg(64);

void BM_Bleu(benchmark::State& state) {
    Rng rng(2);
    const auto hyp = random_seq(rng, 6, static_cast<int>(state.range(0)));
    const auto ref = random_seq(rng, 6, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(bleu(hyp, ref).value);
}
BENCHMARK(BM_Bleu)->Arg(4)->Arg(16)->Arg(64);

void BM_QualityF(benchmark::State& state) {
    Rng rng(3);
    const auto hyp = random_seq(rng, 6, 6);
    const auto ref = random_seq(rng, 6, 4);
    for (auto _ : state)
        benchmark::DoNotOptimize(quality_f(hyp, {}, ref, Recipe::proxy_plus_chrf).total());
}
BENCHMARK(BM_QualityF);

}  // namespace

// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "oracles.hpp"
#include "pegrl/metrics.hpp"
#include "pegrl/rng.hpp"

using namespace pegrl;

namespace {

TokenSeq random_seq(Rng& rng, int alphabet, int min_len, int max_len) {
    const int len = min_len + static_cast<int>(rng.next_below(static_cast<std::uint32_t>(max_len - min_len + 1)));
    TokenSeq seq(static_cast<std::size_t>(len));
    for (auto& t : seq) t = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(alphabet)));
    return seq;
}

}  // namespace

TEST_CASE("ngram profile invariants") {
    const TokenSeq seq{0, 1, 0, 2, 1};
    const auto profile = ngram_profile(seq, 3);
    CHECK(profile.n_max == 3);
    CHECK(profile.total(1) == 5);
    CHECK(profile.total(2) == 4);
    CHECK(profile.total(3) == 3);
    for (const auto& [gram, count] : profile.counts) {
        CHECK(count >= 1);
        CHECK(gram.size() >= 1);
        CHECK(gram.size() <= 3);
    }
    CHECK(profile.counts.at({0}) == 2);
    CHECK(profile.counts.at({0, 1}) == 1);
}

TEST_CASE("chrf identity and disjoint cases are exact") {
    const TokenSeq s{0, 1, 2, 3};
    CHECK(chrf_pp(s, s).value == 1.0);
    CHECK(chrf_pp({0}, {0}).value == 1.0);
    CHECK(chrf_pp({0, 0, 0}, {1, 1, 1}).value == 0.0);
}

TEST_CASE("chrf derived example matches the brute-force oracle") {
    const TokenSeq hyp{0, 1, 2};
    const TokenSeq ref{0, 1, 3};
    const auto score = chrf_pp(hyp, ref, 2, 2, 2.0);
    CHECK(score.value == doctest::Approx(oracle::chrf(hyp, ref, 2, 2, 2.0)).epsilon(1e-12));
    // orders: char1 F=2/3, char2 F=1/2, word1 F=1/2, word2 F=0 -> 5/12
    CHECK(score.value == doctest::Approx(5.0 / 12.0).epsilon(1e-12));
    CHECK(score.components.at("char1_prec") == doctest::Approx(2.0 / 3.0));
    CHECK(score.components.at("char2_f") == doctest::Approx(0.5));
}

TEST_CASE("chrf errors and empty-side handling") {
    CHECK_THROWS_AS(chrf_pp({}, {}), std::invalid_argument);
    CHECK(chrf_pp({}, {0, 1}).value == 0.0);
    CHECK(chrf_pp({0, 1}, {}).value == 0.0);
    CHECK_THROWS_AS(chrf_pp({0}, {0}, 0), std::invalid_argument);
}

TEST_CASE("chrf unigram recall never decreases when adding a matching token") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const TokenSeq ref = random_seq(rng, 3, 1, 6);
        TokenSeq hyp = random_seq(rng, 3, 1, 6);
        const double before = chrf_pp(hyp, ref, 1, 0).components.at("char1_rec");
        hyp.push_back(ref[rng.next_below(static_cast<std::uint32_t>(ref.size()))]);
        const double after = chrf_pp(hyp, ref, 1, 0).components.at("char1_rec");
        CHECK(after >= before - 1e-15);
    }
}

TEST_CASE("bleu identity, zero overlap and clipped counts") {
    const TokenSeq s{0, 1, 2};
    CHECK(bleu(s, s).value == 1.0);
    CHECK(bleu({0}, {0}).value == 1.0);  // shorter than max_order, orders skipped
    CHECK(bleu({0, 0}, {1, 1}, 4, BleuSmoothing::add_k, 0.0).value == 0.0);

    const TokenSeq hyp{0, 1, 2, 2};
    const TokenSeq ref{0, 1, 2};
    const auto score = bleu(hyp, ref, 2, BleuSmoothing::add_k, 1.0);
    CHECK(score.value == doctest::Approx(oracle::bleu_add_k(hyp, ref, 2, 1.0)).epsilon(1e-12));
    // p1 = 4/5, p2 = 3/4, bp = 1 -> sqrt(0.6)
    CHECK(score.value == doctest::Approx(std::sqrt(0.6)).epsilon(1e-12));
    CHECK(score.components.at("p_1") == doctest::Approx(0.8));
    CHECK(score.components.at("p_2") == doctest::Approx(0.75));
    CHECK(score.components.at("bp") == 1.0);
}

TEST_CASE("bleu brevity penalty and exp_decay smoothing") {
    const TokenSeq hyp{0, 1};
    const TokenSeq ref{0, 1, 2, 3};
    const auto score = bleu(hyp, ref, 4, BleuSmoothing::exp_decay);
    CHECK(score.components.at("bp") == doctest::Approx(std::exp(1.0 - 2.0)));
    // only orders 1..2 usable for a 2-token hypothesis
    CHECK(score.components.count("p_3") == 0);

    // first zero-match order smoothed to 1/2, second to 1/4
    const auto zeros = bleu({0, 0, 0}, {1, 1, 1}, 2, BleuSmoothing::exp_decay);
    CHECK(zeros.components.at("p_1") == doctest::Approx(0.5));
    CHECK(zeros.components.at("p_2") == doctest::Approx(0.25));
    CHECK_THROWS_AS(bleu({}, {}), std::invalid_argument);
}

TEST_CASE("semantic proxy examples") {
    CHECK(semantic_proxy({0, 1}, {0, 1}).value == 1.0);
    CHECK(semantic_proxy({0, 0}, {1, 1}).value == 0.0);
    CHECK(semantic_proxy({0, 1}, {0, 2}).value == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(semantic_proxy({}, {0}).value == 0.0);
    CHECK_THROWS_AS(semantic_proxy({0}, {}), std::invalid_argument);
}

TEST_CASE("quality_f saturates, vanishes and decomposes") {
    const TokenSeq tgt{0, 1, 2};
    CHECK(quality_f(tgt, {}, tgt, Recipe::proxy_plus_chrf).total() == 2.0);
    CHECK(quality_f(tgt, {}, tgt, Recipe::proxy_plus_bleu).total() == 2.0);
    CHECK(quality_f({3, 3, 3}, {}, tgt, Recipe::proxy_plus_chrf).total() == 0.0);

    const TokenSeq mixed{0, 1, 1};
    const auto q = quality_f(mixed, {}, tgt, Recipe::proxy_plus_chrf);
    CHECK(q.semantic == doctest::Approx(oracle::token_f1(mixed, tgt)).epsilon(1e-12));
    CHECK(q.surface == doctest::Approx(oracle::chrf(mixed, tgt)).epsilon(1e-12));
    CHECK(q.total() == doctest::Approx(q.semantic + q.surface));
    CHECK_THROWS_AS(quality_f({0}, {}, {}, Recipe::proxy_plus_chrf), std::invalid_argument);
}

TEST_CASE("metric values stay in range on random inputs") {
    Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const TokenSeq hyp = random_seq(rng, 4, 1, 7);
        const TokenSeq ref = random_seq(rng, 4, 1, 7);
        const double c = chrf_pp(hyp, ref).value;
        const double b = bleu(hyp, ref).value;
        const double f = semantic_proxy(hyp, ref).value;
        CHECK(c >= 0.0);
        CHECK(c <= 1.0);
        CHECK(b >= 0.0);
        CHECK(b <= 1.0);
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
        const double q = quality_f(hyp, {}, ref, Recipe::proxy_plus_chrf).total();
        CHECK(q >= 0.0);
        CHECK(q <= 2.0);
    }
}

TEST_CASE("oracle equivalence on short sequences") {
    // The exhaustive length<=5 sweep runs in the acceptance suite; this keeps
    // a quick cross-check in the unit tests.
    const auto seqs = oracle::all_sequences(3, 1, 3);
    for (const auto& hyp : seqs) {
        for (const auto& ref : seqs) {
            CHECK(chrf_pp(hyp, ref).value ==
                  doctest::Approx(oracle::chrf(hyp, ref)).epsilon(1e-12));
            CHECK(bleu(hyp, ref).value ==
                  doctest::Approx(oracle::bleu_add_k(hyp, ref, 4, 1.0)).epsilon(1e-12));
            CHECK(semantic_proxy(hyp, ref).value ==
                  doctest::Approx(oracle::token_f1(hyp, ref)).epsilon(1e-12));
        }
    }
}

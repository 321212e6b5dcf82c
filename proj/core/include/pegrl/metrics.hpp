// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "pegrl/task.hpp"

namespace pegrl {

// N-gram occurrence counts over token sequences, orders 1..n_max.
struct NGramProfile {
    std::map<TokenSeq, int> counts;
    int n_max = 0;

    int total(int order) const;  // number of n-grams of the given order
};

NGramProfile ngram_profile(const TokenSeq& seq, int n_max);

// A metric value in [0,1] plus the named sub-scores it was assembled from.
struct MetricScore {
    double value = 0.0;
    std::map<std::string, double> components;
};

// Token-level chrF++ analog: tokens play the role of characters, and
// non-overlapping token pairs play the role of words. Per-order F_beta
// scores are averaged; orders empty on both sides are skipped so that
// identical sequences score exactly 1.
MetricScore chrf_pp(const TokenSeq& hypothesis, const TokenSeq& reference,
                    int char_order = 6, int word_order = 2, double beta = 2.0);

enum class BleuSmoothing { add_k, exp_decay };

// Sentence BLEU: geometric mean of clipped n-gram precisions times the
// brevity penalty. Orders with no hypothesis n-grams are excluded from the
// mean; zero-match orders are smoothed.
MetricScore bleu(const TokenSeq& hypothesis, const TokenSeq& reference,
                 int max_order = 4, BleuSmoothing smoothing = BleuSmoothing::add_k,
                 double smoothing_k = 1.0);

// Position-independent token-level F1 (multiset overlap). Stand-in for a
// neural quality estimator; the degeneracy gate thresholds this component.
MetricScore semantic_proxy(const TokenSeq& hypothesis, const TokenSeq& reference);

enum class Recipe { proxy_plus_chrf, proxy_plus_bleu };

Recipe recipe_from_string(const std::string& name);
std::string recipe_to_string(Recipe recipe);

// Sum of the semantic proxy and the configured surface metric, in [0,2].
// The semantic part is exposed separately because gating applies to it only.
struct QualityScore {
    double semantic = 0.0;
    double surface = 0.0;
    double total() const { return semantic + surface; }
};

QualityScore quality_f(const TokenSeq& pe, const TokenSeq& src, const TokenSeq& tgt,
                       Recipe recipe);

}  // namespace pegrl

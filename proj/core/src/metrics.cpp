// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0

#include "pegrl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pegrl {

namespace {

std::map<TokenSeq, int> count_ngrams(const TokenSeq& seq, int order) {
    std::map<TokenSeq, int> counts;
    if (order < 1) return counts;
    const int n = static_cast<int>(seq.size());
    for (int i = 0; i + order <= n; ++i) {
        TokenSeq gram(seq.begin() + i, seq.begin() + i + order);
        ++counts[gram];
    }
    return counts;
}

int clipped_matches(const std::map<TokenSeq, int>& hyp, const std::map<TokenSeq, int>& ref) {
    int matches = 0;
    for (const auto& [gram, count] : hyp) {
        const auto it = ref.find(gram);
        if (it != ref.end()) matches += std::min(count, it->second);
    }
    return matches;
}

// "Words" for the chrF++ analog: the token stream grouped into
// non-overlapping pairs, with a trailing singleton kept as its own unit.
std::vector<TokenSeq> super_tokens(const TokenSeq& seq) {
    std::vector<TokenSeq> out;
    for (std::size_t i = 0; i < seq.size(); i += 2) {
        if (i + 1 < seq.size())
            out.push_back({seq[i], seq[i + 1]});
        else
            out.push_back({seq[i]});
    }
    return out;
}

// Encode a super-token n-gram as a flat key (separator -1 avoids collisions
// between e.g. [(a,b)] and [(a),(b)]).
std::map<TokenSeq, int> count_super_ngrams(const std::vector<TokenSeq>& units, int order) {
    std::map<TokenSeq, int> counts;
    const int n = static_cast<int>(units.size());
    for (int i = 0; i + order <= n; ++i) {
        TokenSeq key;
        for (int k = 0; k < order; ++k) {
            if (k > 0) key.push_back(-1);
            key.insert(key.end(), units[static_cast<std::size_t>(i + k)].begin(),
                       units[static_cast<std::size_t>(i + k)].end());
        }
        ++counts[key];
    }
    return counts;
}

double f_beta(double precision, double recall, double beta) {
    const double b2 = beta * beta;
    const double denom = b2 * precision + recall;
    if (denom == 0.0) return 0.0;
    return (1.0 + b2) * precision * recall / denom;
}

struct OrderStats {
    int matches = 0;
    int hyp_total = 0;
    int ref_total = 0;
};

OrderStats order_stats(const std::map<TokenSeq, int>& hyp, const std::map<TokenSeq, int>& ref) {
    OrderStats s;
    s.matches = clipped_matches(hyp, ref);
    for (const auto& [gram, count] : hyp) s.hyp_total += count;
    for (const auto& [gram, count] : ref) s.ref_total += count;
    return s;
}

}  // namespace

int NGramProfile::total(int order) const {
    int sum = 0;
    for (const auto& [gram, count] : counts)
        if (static_cast<int>(gram.size()) == order) sum += count;
    return sum;
}

NGramProfile ngram_profile(const TokenSeq& seq, int n_max) {
    if (n_max < 1) throw std::invalid_argument("ngram_profile: n_max must be >= 1");
    NGramProfile profile;
    profile.n_max = n_max;
    for (int order = 1; order <= n_max; ++order) {
        for (const auto& [gram, count] : count_ngrams(seq, order)) profile.counts[gram] += count;
    }
    return profile;
}

MetricScore chrf_pp(const TokenSeq& hypothesis, const TokenSeq& reference, int char_order,
                    int word_order, double beta) {
    if (char_order < 1) throw std::invalid_argument("chrf_pp: char_order must be >= 1");
    if (hypothesis.empty() && reference.empty())
        throw std::invalid_argument("chrf_pp: undefined metric input");

    MetricScore score;
    if (hypothesis.empty() || reference.empty()) {
        score.value = 0.0;
        return score;
    }

    const auto hyp_units = super_tokens(hypothesis);
    const auto ref_units = super_tokens(reference);

    double f_sum = 0.0;
    int used_orders = 0;
    auto add_order = [&](const std::string& label, const OrderStats& s) {
        if (s.hyp_total == 0 && s.ref_total == 0) return;  // order empty on both sides
        const double p = s.hyp_total > 0 ? static_cast<double>(s.matches) / s.hyp_total : 0.0;
        const double r = s.ref_total > 0 ? static_cast<double>(s.matches) / s.ref_total : 0.0;
        const double f = f_beta(p, r, beta);
        score.components[label + "_prec"] = p;
        score.components[label + "_rec"] = r;
        score.components[label + "_f"] = f;
        f_sum += f;
        ++used_orders;
    };

    for (int order = 1; order <= char_order; ++order) {
        add_order("char" + std::to_string(order),
                  order_stats(count_ngrams(hypothesis, order), count_ngrams(reference, order)));
    }
    for (int order = 1; order <= word_order; ++order) {
        add_order("word" + std::to_string(order),
                  order_stats(count_super_ngrams(hyp_units, order),
                              count_super_ngrams(ref_units, order)));
    }

    score.value = used_orders > 0 ? f_sum / used_orders : 0.0;
    return score;
}

MetricScore bleu(const TokenSeq& hypothesis, const TokenSeq& reference, int max_order,
                 BleuSmoothing smoothing, double smoothing_k) {
    if (max_order < 1) throw std::invalid_argument("bleu: max_order must be >= 1");
    if (hypothesis.empty() && reference.empty())
        throw std::invalid_argument("bleu: undefined metric input");

    MetricScore score;
    if (hypothesis.empty() || reference.empty()) {
        score.value = 0.0;
        return score;
    }

    double log_sum = 0.0;
    int used_orders = 0;
    int zero_orders = 0;
    bool zero_precision = false;
    for (int order = 1; order <= max_order; ++order) {
        const auto stats =
            order_stats(count_ngrams(hypothesis, order), count_ngrams(reference, order));
        if (stats.hyp_total == 0) continue;  // hypothesis too short for this order
        double p;
        if (smoothing == BleuSmoothing::add_k) {
            p = (stats.matches + smoothing_k) / (stats.hyp_total + smoothing_k);
        } else if (stats.matches > 0) {
            p = static_cast<double>(stats.matches) / stats.hyp_total;
        } else {
            ++zero_orders;
            p = std::ldexp(1.0, -zero_orders);  // 1/2, 1/4, ...
        }
        score.components["p_" + std::to_string(order)] = p;
        if (p == 0.0) {
            zero_precision = true;
        } else {
            log_sum += std::log(p);
        }
        ++used_orders;
    }

    const double hyp_len = static_cast<double>(hypothesis.size());
    const double ref_len = static_cast<double>(reference.size());
    const double bp = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
    score.components["bp"] = bp;

    if (used_orders == 0 || zero_precision) {
        score.value = 0.0;
        return score;
    }
    score.value = bp * std::exp(log_sum / used_orders);
    return score;
}

MetricScore semantic_proxy(const TokenSeq& hypothesis, const TokenSeq& reference) {
    if (reference.empty()) throw std::invalid_argument("semantic_proxy: empty reference");

    MetricScore score;
    if (hypothesis.empty()) {
        score.components["precision"] = 0.0;
        score.components["recall"] = 0.0;
        return score;
    }

    std::map<int, int> hyp_counts;
    std::map<int, int> ref_counts;
    for (int t : hypothesis) ++hyp_counts[t];
    for (int t : reference) ++ref_counts[t];
    int intersection = 0;
    for (const auto& [token, count] : hyp_counts) {
        const auto it = ref_counts.find(token);
        if (it != ref_counts.end()) intersection += std::min(count, it->second);
    }

    const double precision = static_cast<double>(intersection) / hypothesis.size();
    const double recall = static_cast<double>(intersection) / reference.size();
    score.components["precision"] = precision;
    score.components["recall"] = recall;
    if (intersection > 0) score.value = 2.0 * precision * recall / (precision + recall);
    return score;
}

Recipe recipe_from_string(const std::string& name) {
    if (name == "proxy_plus_chrf") return Recipe::proxy_plus_chrf;
    if (name == "proxy_plus_bleu") return Recipe::proxy_plus_bleu;
    throw std::invalid_argument("recipe: expected proxy_plus_chrf or proxy_plus_bleu, got '" +
                                name + "'");
}

std::string recipe_to_string(Recipe recipe) {
    return recipe == Recipe::proxy_plus_chrf ? "proxy_plus_chrf" : "proxy_plus_bleu";
}

QualityScore quality_f(const TokenSeq& pe, [[maybe_unused]] const TokenSeq& src,
                       const TokenSeq& tgt, Recipe recipe) {
    if (tgt.empty()) throw std::invalid_argument("quality_f: empty target");
    QualityScore q;
    q.semantic = semantic_proxy(pe, tgt).value;
    q.surface = recipe == Recipe::proxy_plus_chrf ? chrf_pp(pe, tgt).value : bleu(pe, tgt).value;
    return q;
}

}  // namespace pegrl

// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0

#include "pegrl/variance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "pegrl/parallel.hpp"

namespace pegrl {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

GapMode gap_mode_from_string(const std::string& name) {
    if (name == "translate") return GapMode::translate;
    if (name == "post_edit") return GapMode::post_edit;
    if (name == "avg_translate") return GapMode::avg_translate;
    throw std::invalid_argument("mode: expected translate, post_edit or avg_translate, got '" +
                                name + "'");
}

std::string gap_mode_to_string(GapMode mode) {
    switch (mode) {
        case GapMode::translate: return "translate";
        case GapMode::post_edit: return "post_edit";
        case GapMode::avg_translate: return "avg_translate";
    }
    return "translate";
}

GapCurve baseline_gap_curve(const PolicyParams& theta, const std::vector<TaskInstance>& instances,
                            GapMode mode, const std::vector<int>& ks, int k_ref,
                            std::uint64_t seed, const GapParams& params) {
    if (instances.size() < 10)
        throw std::invalid_argument("baseline_gap_curve: insufficient instances (need >= 10)");
    if (ks.empty()) throw std::invalid_argument("baseline_gap_curve: empty K list");
    for (std::size_t i = 0; i < ks.size(); ++i) {
        if (ks[i] < 1 || (i > 0 && ks[i] <= ks[i - 1]))
            throw std::invalid_argument("baseline_gap_curve: Ks must be strictly increasing and >= 1");
    }
    if (k_ref < ks.back()) throw std::invalid_argument("baseline_gap_curve: K_ref must cover max(Ks)");

    const int num_instances = static_cast<int>(instances.size());
    // gaps[instance][k index]
    std::vector<std::vector<double>> gaps(static_cast<std::size_t>(num_instances));

    parallel_for(num_instances, params.threads, [&](int idx) {
        const auto& inst = instances[static_cast<std::size_t>(idx)];
        const auto cond0 = Conditioning::for_translate(inst.src);

        // Reward of one draft under the single-stage view.
        auto draft_value = [&](const Trajectory& draft) {
            if (draft.truncated) return -1.0;
            return quality_f(draft.tokens, inst.src, inst.tgt, params.recipe).total();
        };

        std::vector<double> values;
        values.reserve(static_cast<std::size_t>(k_ref));

        if (mode == GapMode::translate) {
            for (int k = 0; k < k_ref; ++k) {
                Rng rng(derive_stream(seed, {stream_tag::kGap, inst.id, static_cast<std::uint64_t>(k), 0}));
                values.push_back(draft_value(
                    sample_trajectory(theta, Mode::translate, cond0, rng, params.max_len, params.hard_cap)));
            }
        } else if (mode == GapMode::post_edit) {
            // One fixed draft per instance; the baseline is estimated over its
            // post-edit children.
            Rng draft_rng(derive_stream(seed, {stream_tag::kGap, inst.id, 0, 1}));
            const auto draft = sample_trajectory(theta, Mode::translate, cond0, draft_rng,
                                                 params.max_len, params.hard_cap);
            const auto cond1 = Conditioning::for_post_edit(inst.src, draft.tokens);
            for (int k = 0; k < k_ref; ++k) {
                Rng rng(derive_stream(seed, {stream_tag::kGap, inst.id, static_cast<std::uint64_t>(k), 2}));
                const auto edit =
                    sample_trajectory(theta, Mode::post_edit, cond1, rng, params.max_len, params.hard_cap);
                values.push_back(pe_reward(inst.src, draft, edit, inst.tgt, params.alpha, params.recipe).reward);
            }
        } else {  // avg_translate
            for (int k = 0; k < k_ref; ++k) {
                Rng draft_rng(derive_stream(seed, {stream_tag::kGap, inst.id, static_cast<std::uint64_t>(k), 3}));
                const auto draft = sample_trajectory(theta, Mode::translate, cond0, draft_rng,
                                                     params.max_len, params.hard_cap);
                const auto cond1 = Conditioning::for_post_edit(inst.src, draft.tokens);
                double sum = 0.0;
                for (int j = 0; j < params.m; ++j) {
                    Rng rng(derive_stream(seed, {stream_tag::kGap, inst.id, static_cast<std::uint64_t>(k), 4,
                                                 static_cast<std::uint64_t>(j)}));
                    const auto edit = sample_trajectory(theta, Mode::post_edit, cond1, rng,
                                                        params.max_len, params.hard_cap);
                    sum += pe_reward(inst.src, draft, edit, inst.tgt, params.alpha, params.recipe).reward;
                }
                values.push_back(sum / static_cast<double>(params.m));
            }
        }

        // Prefix means Q(K), gap to Q(K_ref).
        std::vector<double> prefix(static_cast<std::size_t>(k_ref) + 1, 0.0);
        for (int k = 0; k < k_ref; ++k)
            prefix[static_cast<std::size_t>(k) + 1] = prefix[static_cast<std::size_t>(k)] + values[static_cast<std::size_t>(k)];
        const double q_ref = prefix[static_cast<std::size_t>(k_ref)] / static_cast<double>(k_ref);

        auto& row = gaps[static_cast<std::size_t>(idx)];
        row.reserve(ks.size());
        for (int k : ks)
            row.push_back(prefix[static_cast<std::size_t>(k)] / static_cast<double>(k) - q_ref);
    });

    GapCurve curve;
    curve.ks = ks;
    curve.k_ref = k_ref;
    curve.mode = mode;
    curve.mean_gap.resize(ks.size());
    curve.std_gap.resize(ks.size());
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        double mean = 0.0;
        for (const auto& row : gaps) mean += row[ki];
        mean /= static_cast<double>(num_instances);
        double var = 0.0;
        for (const auto& row : gaps) var += (row[ki] - mean) * (row[ki] - mean);
        var /= static_cast<double>(num_instances);
        curve.mean_gap[ki] = mean;
        curve.std_gap[ki] = std::sqrt(var);
    }
    return curve;
}

double loglog_slope(const GapCurve& curve, int k_max) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int count = 0;
    for (std::size_t ki = 0; ki < curve.ks.size(); ++ki) {
        if (curve.ks[ki] > k_max || curve.std_gap[ki] <= 0.0) continue;
        const double x = std::log(static_cast<double>(curve.ks[ki]));
        const double y = std::log(curve.std_gap[ki]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count < 2) throw std::invalid_argument("loglog_slope: need at least two usable points");
    const double n = static_cast<double>(count);
    const double denom = sxx - sx * sx / n;
    if (denom == 0.0) throw std::invalid_argument("loglog_slope: degenerate K values");
    return (sxy - sx * sy / n) / denom;
}

std::string GapCurve::to_csv() const {
    std::string out = "K,mean_gap,std_gap,mode\n";
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
        out += std::to_string(ks[ki]);
        out += ',';
        out += fmt_double(mean_gap[ki]);
        out += ',';
        out += fmt_double(std_gap[ki]);
        out += ',';
        out += gap_mode_to_string(mode);
        out += '\n';
    }
    return out;
}

VarianceDecomposition variance_decomposition_exact(const PolicyParams& theta,
                                                   const TaskInstance& instance,
                                                   const PairRewardFn& reward_fn, int len0,
                                                   int len1) {
    const auto cond0 = Conditioning::for_translate(instance.src);
    const auto drafts = enumerate_support(theta, Mode::translate, cond0, len0);

    // The three quantities are accumulated independently so that the law of
    // total variance is a real check, not an arithmetic identity.
    double mean_total = 0.0;
    double second_total = 0.0;
    double expected_within = 0.0;
    double mean_of_cond_mean = 0.0;
    double second_of_cond_mean = 0.0;

    for (const auto& [draft, p0] : drafts) {
        const auto cond1 = Conditioning::for_post_edit(instance.src, draft.tokens);
        const auto edits = enumerate_support(theta, Mode::post_edit, cond1, len1);

        double cond_mean = 0.0;
        double cond_second = 0.0;
        for (const auto& [edit, p1] : edits) {
            const double r = reward_fn(draft, edit);
            cond_mean += p1 * r;
            cond_second += p1 * r * r;
        }
        mean_total += p0 * cond_mean;
        second_total += p0 * cond_second;
        expected_within += p0 * (cond_second - cond_mean * cond_mean);
        mean_of_cond_mean += p0 * cond_mean;
        second_of_cond_mean += p0 * cond_mean * cond_mean;
    }

    VarianceDecomposition d;
    d.var_total = second_total - mean_total * mean_total;
    d.expected_within = expected_within;
    d.var_between = second_of_cond_mean - mean_of_cond_mean * mean_of_cond_mean;
    return d;
}

std::vector<ScalingRow> mc_variance_scaling(const std::vector<double>& dist,
                                            const std::vector<int>& ns, int repeats,
                                            std::uint64_t seed) {
    if (dist.empty()) throw std::invalid_argument("mc_variance_scaling: empty sample");
    if (repeats < 100) throw std::invalid_argument("mc_variance_scaling: repeats must be >= 100");
    for (int n : ns)
        if (n < 1) throw std::invalid_argument("mc_variance_scaling: N must be >= 1");

    double pop_mean = 0.0;
    for (double v : dist) pop_mean += v;
    pop_mean /= static_cast<double>(dist.size());
    double pop_var = 0.0;
    for (double v : dist) pop_var += (v - pop_mean) * (v - pop_mean);
    pop_var /= static_cast<double>(dist.size());

    std::vector<ScalingRow> rows;
    rows.reserve(ns.size());
    const auto size = static_cast<std::uint32_t>(dist.size());
    for (int n : ns) {
        Rng rng(derive_stream(seed, {stream_tag::kScaling, static_cast<std::uint64_t>(n)}));
        double mean_of_means = 0.0;
        double second_of_means = 0.0;
        for (int rep = 0; rep < repeats; ++rep) {
            double sum = 0.0;
            for (int k = 0; k < n; ++k) sum += dist[rng.next_below(size)];
            const double mu = sum / static_cast<double>(n);
            mean_of_means += mu;
            second_of_means += mu * mu;
        }
        mean_of_means /= static_cast<double>(repeats);
        second_of_means /= static_cast<double>(repeats);
        rows.push_back({n, second_of_means - mean_of_means * mean_of_means,
                        pop_var / static_cast<double>(n)});
    }
    return rows;
}

std::string scaling_csv(const std::vector<ScalingRow>& rows) {
    std::string out = "N,empirical_var,predicted_var\n";
    for (const auto& r : rows) {
        out += std::to_string(r.n);
        out += ',';
        out += fmt_double(r.empirical_var);
        out += ',';
        out += fmt_double(r.predicted_var);
        out += '\n';
    }
    return out;
}

std::vector<EstimatorStudyRow> gradient_estimator_study(
    const PolicyParams& theta, const TaskInstance& instance,
    const std::vector<std::pair<double, double>>& lambda_settings, int samples,
    std::uint64_t seed, const StudyParams& params) {
    if (samples < 2) throw std::invalid_argument("gradient_estimator_study: samples must be >= 2");
    if (lambda_settings.empty())
        throw std::invalid_argument("gradient_estimator_study: no lambda settings");

    const auto reward_fn = pair_reward_fn(instance, params.alpha, params.recipe);
    const auto exact =
        exact_objective_and_gradient(theta, instance, reward_fn, params.hard_cap, params.hard_cap);
    const auto exact_total = exact.total();

    auto flat = [](const DenseGradient& g) {
        std::vector<double> v;
        v.reserve(g.mt.size() + g.pe.size());
        v.insert(v.end(), g.mt.begin(), g.mt.end());
        v.insert(v.end(), g.pe.begin(), g.pe.end());
        return v;
    };
    const auto exact_flat = flat(exact_total);
    const std::size_t dim = exact_flat.size();

    std::vector<EstimatorStudyRow> rows;
    rows.reserve(lambda_settings.size());

    for (std::size_t setting = 0; setting < lambda_settings.size(); ++setting) {
        const auto [l_pe, l_mt] = lambda_settings[setting];

        DenseGradient weighted_ref = DenseGradient::zeros_like(theta);
        weighted_ref.add_scaled(exact.term_pe, l_pe);
        weighted_ref.add_scaled(exact.term_mt, l_mt);
        const auto ref_flat = flat(weighted_ref);

        std::vector<double> sum(dim, 0.0), sum_sq(dim, 0.0);
        for (int s = 0; s < samples; ++s) {
            const std::uint64_t tree_seed = derive_stream(
                seed, {stream_tag::kStudy, static_cast<std::uint64_t>(setting), static_cast<std::uint64_t>(s)});
            const auto tree = hybrid_sample(theta, instance, params.n, params.m, tree_seed,
                                            params.max_len, params.hard_cap);
            const auto records = score_tree(tree, params.alpha, params.recipe);
            const auto est = estimate_weighted_gradient(theta, tree, records, {}, l_pe, l_mt,
                                                        RewardWeighting::raw_rewards);
            const auto est_flat = flat(est.grad);
            for (std::size_t c = 0; c < dim; ++c) {
                sum[c] += est_flat[c];
                sum_sq[c] += est_flat[c] * est_flat[c];
            }
        }

        EstimatorStudyRow row;
        row.lambda_pe = l_pe;
        row.lambda_mt = l_mt;
        row.samples = samples;

        double dot = 0.0, norm_mean = 0.0, norm_exact = 0.0;
        const double inv = 1.0 / static_cast<double>(samples);
        for (std::size_t c = 0; c < dim; ++c) {
            const double mean = sum[c] * inv;
            const double var = std::max(0.0, sum_sq[c] * inv - mean * mean);
            const double bias = mean - exact_flat[c];
            row.bias_l2 += bias * bias;
            row.bias_max = std::max(row.bias_max, std::abs(bias));
            row.var_mean += var;
            row.var_total += var;
            dot += mean * exact_flat[c];
            norm_mean += mean * mean;
            norm_exact += exact_flat[c] * exact_flat[c];

            const double se = std::sqrt(var * inv);
            const double dev = std::abs(mean - ref_flat[c]);
            if (se > 0.0)
                row.identity_max_se = std::max(row.identity_max_se, dev / se);
            else if (dev > 0.0)
                row.identity_max_se = std::numeric_limits<double>::infinity();
        }
        row.bias_l2 = std::sqrt(row.bias_l2);
        row.var_mean /= static_cast<double>(dim);
        row.cosine_to_exact = (norm_mean > 0.0 && norm_exact > 0.0)
                                  ? dot / (std::sqrt(norm_mean) * std::sqrt(norm_exact))
                                  : 0.0;
        rows.push_back(row);
    }
    return rows;
}

std::string study_csv(const std::vector<EstimatorStudyRow>& rows) {
    std::string out =
        "lambda_pe,lambda_mt,samples,bias_l2,bias_max,var_mean,var_total,cosine_to_exact,identity_max_se\n";
    for (const auto& r : rows) {
        out += fmt_double(r.lambda_pe);
        out += ',';
        out += fmt_double(r.lambda_mt);
        out += ',';
        out += std::to_string(r.samples);
        out += ',';
        out += fmt_double(r.bias_l2);
        out += ',';
        out += fmt_double(r.bias_max);
        out += ',';
        out += fmt_double(r.var_mean);
        out += ',';
        out += fmt_double(r.var_total);
        out += ',';
        out += fmt_double(r.cosine_to_exact);
        out += ',';
        out += fmt_double(r.identity_max_se);
        out += '\n';
    }
    return out;
}

}  // namespace pegrl

// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pegrl/rewards.hpp"
#include "pegrl/trainer.hpp"

namespace pegrl {

enum class GapMode { translate, post_edit, avg_translate };

GapMode gap_mode_from_string(const std::string& name);
std::string gap_mode_to_string(GapMode mode);

// Convergence of the group-wise baseline: per instance, Q(K) is the mean
// reward of the first K of K_ref rollouts and the gap is Q(K) - Q(K_ref).
struct GapCurve {
    std::vector<int> ks;
    std::vector<double> mean_gap;
    std::vector<double> std_gap;
    int k_ref = 0;
    GapMode mode = GapMode::translate;

    std::string to_csv() const;  // K,mean_gap,std_gap,mode
};

struct GapParams {
    int max_len = 4;
    int hard_cap = 6;
    double alpha = 0.95;
    Recipe recipe = Recipe::proxy_plus_chrf;
    int m = 8;  // edits per draft in avg_translate mode
    int threads = 1;
};

GapCurve baseline_gap_curve(const PolicyParams& theta, const std::vector<TaskInstance>& instances,
                            GapMode mode, const std::vector<int>& ks, int k_ref,
                            std::uint64_t seed, const GapParams& params);

// Least-squares slope of log(std_gap) against log(K), fitted over K <= k_max.
double loglog_slope(const GapCurve& curve, int k_max);

// Exact law-of-total-variance split of the two-stage reward distribution.
struct VarianceDecomposition {
    double var_total = 0.0;
    double expected_within = 0.0;
    double var_between = 0.0;
};

VarianceDecomposition variance_decomposition_exact(const PolicyParams& theta,
                                                   const TaskInstance& instance,
                                                   const PairRewardFn& reward_fn, int len0,
                                                   int len1);

// Monte Carlo mean-estimator scaling: empirical Var(mu_hat_N) over `repeats`
// resamples of the empirical reward sample, against Var[f]/N.
struct ScalingRow {
    int n = 0;
    double empirical_var = 0.0;
    double predicted_var = 0.0;  // population variance / n
};

std::vector<ScalingRow> mc_variance_scaling(const std::vector<double>& dist,
                                            const std::vector<int>& ns, int repeats,
                                            std::uint64_t seed);

std::string scaling_csv(const std::vector<ScalingRow>& rows);

// Empirical study of the weighted single-tree gradient estimator against the
// exact enumerated gradient, per (lambda_pe, lambda_mt) setting.
struct StudyParams {
    int n = 2;
    int m = 2;
    int max_len = 1;
    int hard_cap = 2;
    double alpha = 0.95;
    Recipe recipe = Recipe::proxy_plus_chrf;
};

struct EstimatorStudyRow {
    double lambda_pe = 0.0;
    double lambda_mt = 0.0;
    int samples = 0;
    double bias_l2 = 0.0;        // || mean estimate - exact unweighted gradient ||
    double bias_max = 0.0;
    double var_mean = 0.0;       // mean per-coordinate estimator variance
    double var_total = 0.0;      // summed per-coordinate variance
    double cosine_to_exact = 0.0;
    // Reweighting identity: largest |mean - (l_pe*term_pe + l_mt*term_mt)|
    // over coordinates, in units of that coordinate's standard error.
    double identity_max_se = 0.0;
};

std::vector<EstimatorStudyRow> gradient_estimator_study(
    const PolicyParams& theta, const TaskInstance& instance,
    const std::vector<std::pair<double, double>>& lambda_settings, int samples,
    std::uint64_t seed, const StudyParams& params);

std::string study_csv(const std::vector<EstimatorStudyRow>& rows);

}  // namespace pegrl

// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pegrl/trainer.hpp"
#include "pegrl/variance.hpp"

namespace pegrl {

// Flat key/value run configuration: one `key = value` per line, `#` starts a
// comment. Every key must be consumed by the loading schema; leftovers are
// hard errors so a typo in lambda_pe or alpha cannot silently pass.
class KeyValueConfig {
  public:
    static KeyValueConfig parse(const std::string& text);
    static KeyValueConfig load(const std::string& path);

    bool has(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback);
    std::string require_string(const std::string& key);
    int get_int(const std::string& key, int fallback);
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
    double get_double(const std::string& key, double fallback);
    bool get_bool(const std::string& key, bool fallback);
    std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback);

    // Throws std::invalid_argument naming every unconsumed key.
    void ensure_all_consumed() const;

    // Resolved snapshot (raw key/value pairs) for the run manifest.
    const std::map<std::string, std::string>& entries() const { return entries_; }

  private:
    std::map<std::string, std::string> entries_;
    std::set<std::string> consumed_;
};

// Schema bindings for the CLI subcommands.
TrainConfig train_config_from(KeyValueConfig& cfg);

struct GapRunConfig {
    GapMode mode = GapMode::translate;
    std::vector<int> ks;
    int k_ref = 1024;
    int instances = 100;
    int vocab_size = 4;
    int task_length = 3;
    std::uint64_t seed = 0;
    GapParams params;
    // Constructed-policy knob: boosts the post-edit logit that copies the
    // aligned draft token, giving a low-entropy edit policy.
    double pe_copy_bias = 0.0;
    std::string theta_file;  // optional starting parameters
};

GapRunConfig gap_config_from(KeyValueConfig& cfg);

struct DecompRunConfig {
    int configurations = 100;
    int vocab_size = 3;
    int task_length = 1;
    int len0 = 2;
    int len1 = 2;
    double logit_scale = 1.0;  // random-policy spread
    double alpha = 0.95;
    Recipe recipe = Recipe::proxy_plus_chrf;
    std::uint64_t seed = 0;
};

DecompRunConfig decomp_config_from(KeyValueConfig& cfg);

struct ScalingRunConfig {
    std::vector<int> ns;
    int repeats = 10000;
    std::string dist = "bernoulli";  // bernoulli | rollout
    double bernoulli_p = 0.5;
    int dist_size = 2048;
    int vocab_size = 4;
    int task_length = 3;
    int max_len = 3;
    int hard_cap = 5;
    double alpha = 0.95;
    Recipe recipe = Recipe::proxy_plus_chrf;
    std::uint64_t seed = 0;
};

ScalingRunConfig scaling_config_from(KeyValueConfig& cfg);

struct StudyRunConfig {
    std::vector<std::pair<double, double>> lambda_settings;
    int samples = 20000;
    int vocab_size = 3;
    int task_length = 1;
    StudyParams params;
    std::uint64_t seed = 0;
};

StudyRunConfig study_config_from(KeyValueConfig& cfg);

struct CompareRunConfig {
    TrainConfig base;
    int seeds = 5;
};

CompareRunConfig compare_config_from(KeyValueConfig& cfg);

}  // namespace pegrl

// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0

#include "pegrl/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pegrl {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
    throw std::invalid_argument("config: key '" + key + "' expects " + want + ", got '" + value + "'");
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
    KeyValueConfig cfg;
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                        " is not 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config: empty key on line " + std::to_string(line_no));
        if (!cfg.entries_.emplace(key, value).second)
            throw std::invalid_argument("config: duplicate key '" + key + "'");
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("config: cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << file.rdbuf();
    return parse(buffer.str());
}

bool KeyValueConfig::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) {
    consumed_.insert(key);
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

std::string KeyValueConfig::require_string(const std::string& key) {
    consumed_.insert(key);
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw std::invalid_argument("config: missing required key '" + key + "'");
    return it->second;
}

int KeyValueConfig::get_int(const std::string& key, int fallback) {
    consumed_.insert(key);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const int v = std::stoi(it->second, &pos);
        if (pos != it->second.size()) bad_value(key, it->second, "an integer");
        return v;
    } catch (const std::invalid_argument&) {
        bad_value(key, it->second, "an integer");
    } catch (const std::out_of_range&) {
        bad_value(key, it->second, "an integer");
    }
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) {
    consumed_.insert(key);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(it->second, &pos);
        if (pos != it->second.size()) bad_value(key, it->second, "an unsigned integer");
        return static_cast<std::uint64_t>(v);
    } catch (const std::invalid_argument&) {
        bad_value(key, it->second, "an unsigned integer");
    } catch (const std::out_of_range&) {
        bad_value(key, it->second, "an unsigned integer");
    }
}

double KeyValueConfig::get_double(const std::string& key, double fallback) {
    consumed_.insert(key);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) bad_value(key, it->second, "a number");
        return v;
    } catch (const std::invalid_argument&) {
        bad_value(key, it->second, "a number");
    } catch (const std::out_of_range&) {
        bad_value(key, it->second, "a number");
    }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) {
    consumed_.insert(key);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    bad_value(key, it->second, "true or false");
}

std::vector<int> KeyValueConfig::get_int_list(const std::string& key,
                                              const std::vector<int>& fallback) {
    consumed_.insert(key);
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::vector<int> out;
    std::istringstream stream(it->second);
    std::string item;
    while (std::getline(stream, item, ',')) {
        item = trim(item);
        if (item.empty()) bad_value(key, it->second, "a comma-separated integer list");
        try {
            std::size_t pos = 0;
            out.push_back(std::stoi(item, &pos));
            if (pos != item.size()) bad_value(key, it->second, "a comma-separated integer list");
        } catch (const std::invalid_argument&) {
            bad_value(key, it->second, "a comma-separated integer list");
        } catch (const std::out_of_range&) {
            bad_value(key, it->second, "a comma-separated integer list");
        }
    }
    if (out.empty()) bad_value(key, it->second, "a comma-separated integer list");
    return out;
}

void KeyValueConfig::ensure_all_consumed() const {
    std::string unknown;
    for (const auto& [key, value] : entries_) {
        if (consumed_.count(key)) continue;
        if (!unknown.empty()) unknown += ", ";
        unknown += key;
    }
    if (!unknown.empty())
        throw std::invalid_argument("config: unknown key(s): " + unknown);
}

TrainConfig train_config_from(KeyValueConfig& cfg) {
    TrainConfig c;
    c.vocab_size = cfg.get_int("vocab_size", c.vocab_size);
    c.task_length = cfg.get_int("task_length", c.task_length);
    c.train_instances = cfg.get_int("train_instances", c.train_instances);
    c.eval_instances = cfg.get_int("eval_instances", c.eval_instances);
    c.n = cfg.get_int("N", c.n);
    c.m = cfg.get_int("M", c.m);
    c.max_len = cfg.get_int("max_len", c.task_length);
    c.hard_cap = cfg.get_int("hard_cap", c.task_length + 2);
    c.alpha = cfg.get_double("alpha", c.alpha);
    c.recipe = recipe_from_string(cfg.get_string("recipe", "proxy_plus_chrf"));
    c.advantage_eps = cfg.get_double("advantage_eps", c.advantage_eps);
    c.lambda_pe = cfg.get_double("lambda_pe", static_cast<double>(c.m));  // defaults to M
    c.lambda_mt = cfg.get_double("lambda_mt", 1.0);
    c.learning_rate = cfg.get_double("learning_rate", 0.1);
    c.steps = cfg.get_int("steps", c.steps);
    c.batch_size = cfg.get_int("batch_size", 16);
    c.regime = regime_from_string(cfg.get_string("regime", "pegrl"));
    c.seed = cfg.get_u64("seed", 0);
    c.eval_interval = cfg.get_int("eval_interval", 5);
    c.log_rollouts = cfg.get_bool("log_rollouts", false);
    c.threads = cfg.get_int("threads", 1);
    c.validate();
    return c;
}

CompareRunConfig compare_config_from(KeyValueConfig& cfg) {
    CompareRunConfig c;
    c.seeds = cfg.get_int("seeds", 5);
    c.base = train_config_from(cfg);
    if (c.seeds < 1) throw std::invalid_argument("config: seeds must be >= 1");
    return c;
}

GapRunConfig gap_config_from(KeyValueConfig& cfg) {
    GapRunConfig c;
    c.mode = gap_mode_from_string(cfg.require_string("mode"));
    c.k_ref = cfg.get_int("K_ref", c.k_ref);
    std::vector<int> default_ks;
    for (int k = 1; k <= c.k_ref; k *= 2) default_ks.push_back(k);
    if (default_ks.empty() || default_ks.back() != c.k_ref) default_ks.push_back(c.k_ref);
    c.ks = cfg.get_int_list("Ks", default_ks);
    c.instances = cfg.get_int("instances", c.instances);
    c.vocab_size = cfg.get_int("vocab_size", c.vocab_size);
    c.task_length = cfg.get_int("task_length", c.task_length);
    c.seed = cfg.get_u64("seed", 0);
    c.params.max_len = cfg.get_int("max_len", c.task_length);
    c.params.hard_cap = cfg.get_int("hard_cap", c.task_length + 2);
    c.params.alpha = cfg.get_double("alpha", c.params.alpha);
    c.params.recipe = recipe_from_string(cfg.get_string("recipe", "proxy_plus_chrf"));
    c.params.m = cfg.get_int("M", c.params.m);
    c.params.threads = cfg.get_int("threads", 1);
    c.pe_copy_bias = cfg.get_double("pe_copy_bias", 0.0);
    c.theta_file = cfg.get_string("theta_file", "");
    if (c.k_ref < 2) throw std::invalid_argument("config: K_ref must be >= 2");
    if (c.instances < 10) throw std::invalid_argument("config: instances must be >= 10");
    return c;
}

DecompRunConfig decomp_config_from(KeyValueConfig& cfg) {
    DecompRunConfig c;
    c.configurations = cfg.get_int("configurations", c.configurations);
    c.vocab_size = cfg.get_int("vocab_size", c.vocab_size);
    c.task_length = cfg.get_int("task_length", c.task_length);
    c.len0 = cfg.get_int("len0", c.len0);
    c.len1 = cfg.get_int("len1", c.len1);
    c.logit_scale = cfg.get_double("logit_scale", c.logit_scale);
    c.alpha = cfg.get_double("alpha", c.alpha);
    c.recipe = recipe_from_string(cfg.get_string("recipe", "proxy_plus_chrf"));
    c.seed = cfg.get_u64("seed", 0);
    if (c.configurations < 1) throw std::invalid_argument("config: configurations must be >= 1");
    return c;
}

ScalingRunConfig scaling_config_from(KeyValueConfig& cfg) {
    ScalingRunConfig c;
    c.ns = cfg.get_int_list("Ns", {1, 4, 16, 64});
    c.repeats = cfg.get_int("repeats", c.repeats);
    c.dist = cfg.get_string("dist", c.dist);
    c.bernoulli_p = cfg.get_double("bernoulli_p", c.bernoulli_p);
    c.dist_size = cfg.get_int("dist_size", c.dist_size);
    c.vocab_size = cfg.get_int("vocab_size", c.vocab_size);
    c.task_length = cfg.get_int("task_length", c.task_length);
    c.max_len = cfg.get_int("max_len", c.task_length);
    c.hard_cap = cfg.get_int("hard_cap", c.task_length + 2);
    c.alpha = cfg.get_double("alpha", c.alpha);
    c.recipe = recipe_from_string(cfg.get_string("recipe", "proxy_plus_chrf"));
    c.seed = cfg.get_u64("seed", 0);
    if (c.dist != "bernoulli" && c.dist != "rollout")
        throw std::invalid_argument("config: dist must be bernoulli or rollout");
    if (c.bernoulli_p < 0.0 || c.bernoulli_p > 1.0)
        throw std::invalid_argument("config: bernoulli_p must be in [0,1]");
    if (c.dist_size < 1) throw std::invalid_argument("config: dist_size must be >= 1");
    return c;
}

StudyRunConfig study_config_from(KeyValueConfig& cfg) {
    StudyRunConfig c;
    const std::string settings = cfg.get_string("lambda_settings", "8:1,1:1,8:0");
    std::istringstream stream(settings);
    std::string item;
    while (std::getline(stream, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("config: lambda_settings expects 'pe:mt' pairs, got '" +
                                        item + "'");
        try {
            c.lambda_settings.emplace_back(std::stod(item.substr(0, colon)),
                                           std::stod(item.substr(colon + 1)));
        } catch (const std::exception&) {
            throw std::invalid_argument("config: lambda_settings expects 'pe:mt' pairs, got '" +
                                        item + "'");
        }
    }
    if (c.lambda_settings.empty())
        throw std::invalid_argument("config: lambda_settings must not be empty");
    c.samples = cfg.get_int("samples", c.samples);
    c.vocab_size = cfg.get_int("vocab_size", c.vocab_size);
    c.task_length = cfg.get_int("task_length", c.task_length);
    c.params.n = cfg.get_int("N", c.params.n);
    c.params.m = cfg.get_int("M", c.params.m);
    c.params.max_len = cfg.get_int("max_len", c.task_length);
    c.params.hard_cap = cfg.get_int("hard_cap", c.task_length + 1);
    c.params.alpha = cfg.get_double("alpha", c.params.alpha);
    c.params.recipe = recipe_from_string(cfg.get_string("recipe", "proxy_plus_chrf"));
    c.seed = cfg.get_u64("seed", 0);
    if (c.samples < 100) throw std::invalid_argument("config: samples must be >= 100");
    return c;
}

}  // namespace pegrl

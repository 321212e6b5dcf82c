// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0

#include "pegrl/runner.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pegrl/config.hpp"
#include "pegrl/manifest.hpp"
#include "pegrl/metrics.hpp"
#include "pegrl/sampling.hpp"
#include "pegrl/trainer.hpp"
#include "pegrl/variance.hpp"
#include "pegrl/version.hpp"

namespace pegrl {

namespace {

namespace fs = std::filesystem;

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write '" + path.string() + "'");
    file << content;
}

// flag > config key > PEGRL_THREADS env var > 1
int resolve_threads(int flag_value, const KeyValueConfig& cfg, int config_value) {
    if (flag_value > 0) return flag_value;
    if (cfg.has("threads")) return config_value;
    if (const char* env = std::getenv("PEGRL_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return config_value;
}

RunManifest start_manifest(const std::string& subcommand, const KeyValueConfig& cfg,
                           std::uint64_t seed, const std::string& out_dir,
                           std::vector<std::string> artifacts) {
    RunManifest manifest;
    manifest.subcommand = subcommand;
    manifest.config_snapshot = cfg.entries();
    manifest.seed = seed;
    manifest.started_at = utc_timestamp_now();
    manifest.artifacts = std::move(artifacts);
    manifest.build_id = kBuildId;
    write_manifest(out_dir, manifest);  // present before any output artifact
    return manifest;
}

void finish_manifest(const std::string& out_dir, RunManifest& manifest) {
    manifest.finished_at = utc_timestamp_now();
    write_manifest(out_dir, manifest);
}

std::string instances_jsonl(const std::vector<TaskInstance>& train_set,
                            const std::vector<TaskInstance>& eval_set) {
    std::string out;
    for (const auto& inst : train_set) {
        out += instance_to_json(inst);
        out += '\n';
    }
    for (const auto& inst : eval_set) {
        out += instance_to_json(inst);
        out += '\n';
    }
    return out;
}

int run_train(const std::string& config_path, const std::string& out_dir, int threads_flag) {
    KeyValueConfig cfg = KeyValueConfig::load(config_path);
    TrainConfig config = train_config_from(cfg);
    config.threads = resolve_threads(threads_flag, cfg, config.threads);
    cfg.ensure_all_consumed();

    std::vector<std::string> artifacts = {"log.jsonl", "eval.csv", "theta.json", "instances.jsonl"};
    if (config.log_rollouts) artifacts.push_back("rollouts.jsonl");
    RunManifest manifest = start_manifest("train", cfg, config.seed, out_dir, artifacts);

    const Vocab vocab(config.vocab_size);
    const auto train_set = make_instances(config.seed, 0, config.train_instances, vocab,
                                          config.task_length);
    const auto eval_set =
        make_instances(config.seed, static_cast<std::uint64_t>(config.train_instances),
                       config.eval_instances, vocab, config.task_length);

    const auto result = train(config, train_set, eval_set);

    const fs::path dir(out_dir);
    write_text_file(dir / "log.jsonl", result.log.to_jsonl());
    write_text_file(dir / "eval.csv", result.log.eval_csv());
    write_text_file(dir / "theta.json", policy_to_json(result.theta) + "\n");
    write_text_file(dir / "instances.jsonl", instances_jsonl(train_set, eval_set));
    if (config.log_rollouts) write_text_file(dir / "rollouts.jsonl", result.rollout_jsonl);

    finish_manifest(out_dir, manifest);
    return 0;
}

int run_compare(const std::string& config_path, const std::string& out_dir, int threads_flag) {
    KeyValueConfig cfg = KeyValueConfig::load(config_path);
    CompareRunConfig compare = compare_config_from(cfg);
    compare.base.threads = resolve_threads(threads_flag, cfg, compare.base.threads);
    cfg.ensure_all_consumed();

    RunManifest manifest =
        start_manifest("compare", cfg, compare.base.seed, out_dir, {"compare.csv"});

    // Shared seeds: both regimes see seed + k, hence identical instance sets.
    std::vector<SweepOutcome> outcomes;
    for (int k = 0; k < compare.seeds; ++k) {
        for (const Regime regime : {Regime::pegrl, Regime::baseline_grpo}) {
            TrainConfig config = compare.base;
            config.seed = compare.base.seed + static_cast<std::uint64_t>(k);
            config.regime = regime;
            outcomes.push_back(run_training_outcome(config));
        }
    }

    write_text_file(fs::path(out_dir) / "compare.csv", sweep_csv(outcomes));
    finish_manifest(out_dir, manifest);
    return 0;
}

void apply_pe_copy_bias(PolicyParams& theta, double bias) {
    if (bias == 0.0) return;
    const int v = theta.vocab_size;
    for (int src_slot = 0; src_slot <= v; ++src_slot) {
        for (int draft_slot = 0; draft_slot <= v; ++draft_slot) {
            double* row = theta.row(Mode::post_edit, src_slot * (v + 1) + draft_slot);
            // copy the aligned draft token; past the draft end, emit eos
            row[draft_slot] += bias;
        }
    }
}

int run_variance_gap(KeyValueConfig& cfg, const std::string& out_dir, int threads_flag) {
    GapRunConfig gap = gap_config_from(cfg);
    gap.params.threads = resolve_threads(threads_flag, cfg, gap.params.threads);
    cfg.ensure_all_consumed();

    RunManifest manifest = start_manifest("variance gap", cfg, gap.seed, out_dir, {"gap.csv"});

    const Vocab vocab(gap.vocab_size);
    PolicyParams theta = PolicyParams::zeros(vocab);
    if (!gap.theta_file.empty()) {
        std::ifstream file(gap.theta_file);
        if (!file) throw std::runtime_error("cannot open theta file '" + gap.theta_file + "'");
        std::ostringstream buffer;
        buffer << file.rdbuf();
        theta = policy_from_json(buffer.str());
        if (theta.vocab_size != gap.vocab_size)
            throw std::invalid_argument("theta file vocab_size does not match config");
    }
    apply_pe_copy_bias(theta, gap.pe_copy_bias);

    const auto instances = make_instances(gap.seed, 0, gap.instances, vocab, gap.task_length);
    const auto curve =
        baseline_gap_curve(theta, instances, gap.mode, gap.ks, gap.k_ref, gap.seed, gap.params);

    write_text_file(fs::path(out_dir) / "gap.csv", curve.to_csv());
    finish_manifest(out_dir, manifest);
    return 0;
}

int run_variance_decomp(KeyValueConfig& cfg, const std::string& out_dir) {
    DecompRunConfig decomp = decomp_config_from(cfg);
    cfg.ensure_all_consumed();

    RunManifest manifest =
        start_manifest("variance decomp", cfg, decomp.seed, out_dir, {"decomp.csv"});

    const Vocab vocab(decomp.vocab_size);
    std::string csv = "config,var_total,expected_within,var_between,identity_residual,ordering_ok\n";
    for (int c = 0; c < decomp.configurations; ++c) {
        Rng rng(derive_stream(decomp.seed, {stream_tag::kStudy, static_cast<std::uint64_t>(c)}));
        PolicyParams theta = PolicyParams::zeros(vocab);
        for (auto& x : theta.theta_mt) x = decomp.logit_scale * (2.0 * rng.next_double() - 1.0);
        for (auto& x : theta.theta_pe) x = decomp.logit_scale * (2.0 * rng.next_double() - 1.0);
        const auto instance = make_cipher_instance_seeded(decomp.seed, static_cast<std::uint64_t>(c),
                                                          vocab, decomp.task_length);
        const auto d = variance_decomposition_exact(
            theta, instance, pair_reward_fn(instance, decomp.alpha, decomp.recipe), decomp.len0,
            decomp.len1);
        const double residual = d.var_total - (d.expected_within + d.var_between);
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g,%d\n", c, d.var_total,
                      d.expected_within, d.var_between, residual,
                      d.var_total >= d.expected_within ? 1 : 0);
        csv += buf;
    }

    write_text_file(fs::path(out_dir) / "decomp.csv", csv);
    finish_manifest(out_dir, manifest);
    return 0;
}

int run_variance_scaling(KeyValueConfig& cfg, const std::string& out_dir) {
    ScalingRunConfig scaling = scaling_config_from(cfg);
    cfg.ensure_all_consumed();

    RunManifest manifest =
        start_manifest("variance scaling", cfg, scaling.seed, out_dir, {"scaling.csv"});

    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(scaling.dist_size));
    if (scaling.dist == "bernoulli") {
        const int ones = static_cast<int>(scaling.bernoulli_p * scaling.dist_size + 0.5);
        for (int i = 0; i < scaling.dist_size; ++i) dist.push_back(i < ones ? 1.0 : 0.0);
    } else {
        const Vocab vocab(scaling.vocab_size);
        const auto instance = make_cipher_instance_seeded(scaling.seed, 0, vocab, scaling.task_length);
        const PolicyParams theta = PolicyParams::zeros(vocab);
        const auto cond = Conditioning::for_translate(instance.src);
        for (int i = 0; i < scaling.dist_size; ++i) {
            Rng rng(derive_stream(scaling.seed, {stream_tag::kScaling, 0, static_cast<std::uint64_t>(i)}));
            const auto draft =
                sample_trajectory(theta, Mode::translate, cond, rng, scaling.max_len, scaling.hard_cap);
            dist.push_back(draft.truncated
                               ? -1.0
                               : quality_f(draft.tokens, instance.src, instance.tgt, scaling.recipe).total());
        }
    }

    const auto rows = mc_variance_scaling(dist, scaling.ns, scaling.repeats, scaling.seed);
    write_text_file(fs::path(out_dir) / "scaling.csv", scaling_csv(rows));
    finish_manifest(out_dir, manifest);
    return 0;
}

int run_variance_gradstudy(KeyValueConfig& cfg, const std::string& out_dir) {
    StudyRunConfig study = study_config_from(cfg);
    cfg.ensure_all_consumed();

    RunManifest manifest =
        start_manifest("variance gradstudy", cfg, study.seed, out_dir, {"gradstudy.csv"});

    const Vocab vocab(study.vocab_size);
    const PolicyParams theta = PolicyParams::zeros(vocab);
    const auto instance = make_cipher_instance_seeded(study.seed, 0, vocab, study.task_length);
    const auto rows = gradient_estimator_study(theta, instance, study.lambda_settings,
                                               study.samples, study.seed, study.params);

    write_text_file(fs::path(out_dir) / "gradstudy.csv", study_csv(rows));
    finish_manifest(out_dir, manifest);
    return 0;
}

TokenSeq tokenize_line(const std::string& line, std::map<std::string, int>& dict) {
    TokenSeq tokens;
    std::istringstream stream(line);
    std::string word;
    while (stream >> word) {
        const auto [it, inserted] = dict.emplace(word, static_cast<int>(dict.size()));
        tokens.push_back(it->second);
    }
    return tokens;
}

int run_score(const std::string& hyp_path, const std::string& ref_path, const std::string& recipe_name,
              const std::string& out_dir) {
    const Recipe recipe = recipe_from_string(recipe_name);

    std::ifstream hyp_file(hyp_path);
    if (!hyp_file) throw std::runtime_error("cannot open '" + hyp_path + "'");
    std::ifstream ref_file(ref_path);
    if (!ref_file) throw std::runtime_error("cannot open '" + ref_path + "'");

    RunManifest manifest;
    const bool to_dir = !out_dir.empty();
    if (to_dir) {
        KeyValueConfig empty = KeyValueConfig::parse("");
        manifest = start_manifest("score", empty, 0, out_dir, {"scores.jsonl"});
    }

    std::map<std::string, int> dict;  // shared, so equal strings share ids
    std::string out;
    std::string hyp_line, ref_line;
    int line_no = 0;
    while (true) {
        const bool have_hyp = static_cast<bool>(std::getline(hyp_file, hyp_line));
        const bool have_ref = static_cast<bool>(std::getline(ref_file, ref_line));
        if (!have_hyp && !have_ref) break;
        if (have_hyp != have_ref)
            throw std::runtime_error("score: input files are not line-aligned");
        ++line_no;

        const TokenSeq hyp = tokenize_line(hyp_line, dict);
        const TokenSeq ref = tokenize_line(ref_line, dict);
        if (hyp.empty() && ref.empty())
            throw std::runtime_error("score: undefined metric input on line " +
                                     std::to_string(line_no));

        nlohmann::ordered_json j;
        if (ref.empty()) {
            j["chrf_pp"] = 0.0;
            j["bleu"] = 0.0;
            j["proxy"] = 0.0;
            j["quality_f"] = 0.0;
        } else {
            const QualityScore q = quality_f(hyp, {}, ref, recipe);
            j["chrf_pp"] = chrf_pp(hyp, ref).value;
            j["bleu"] = bleu(hyp, ref).value;
            j["proxy"] = q.semantic;
            j["quality_f"] = q.total();
        }
        out += j.dump();
        out += '\n';
    }

    if (to_dir) {
        write_text_file(fs::path(out_dir) / "scores.jsonl", out);
        finish_manifest(out_dir, manifest);
    } else {
        std::cout << out;
    }
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& argv) {
    CLI::App app{"two-stage translate/post-edit RL simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int threads_flag = 0;

    auto* train_cmd = app.add_subcommand("train", "run one training regime");
    train_cmd->add_option("--config", config_path, "flat key=value config file")->required();
    train_cmd->add_option("--out", out_dir, "output directory")->required();
    train_cmd->add_option("--threads", threads_flag, "worker threads (overrides config and env)");

    auto* compare_cmd = app.add_subcommand("compare", "pegrl vs baseline_grpo on shared seeds");
    compare_cmd->add_option("--config", config_path)->required();
    compare_cmd->add_option("--out", out_dir)->required();
    compare_cmd->add_option("--threads", threads_flag);

    auto* variance_cmd = app.add_subcommand("variance", "variance studies");
    variance_cmd->require_subcommand(1);
    auto* gap_cmd = variance_cmd->add_subcommand("gap", "baseline gap curve");
    auto* decomp_cmd = variance_cmd->add_subcommand("decomp", "exact total-variance decomposition");
    auto* scaling_cmd = variance_cmd->add_subcommand("scaling", "MC mean-estimator scaling");
    auto* study_cmd = variance_cmd->add_subcommand("gradstudy", "weighted-estimator study");
    for (auto* cmd : {gap_cmd, decomp_cmd, scaling_cmd, study_cmd}) {
        cmd->add_option("--config", config_path)->required();
        cmd->add_option("--out", out_dir)->required();
        cmd->add_option("--threads", threads_flag);
    }

    std::string hyp_path, ref_path, recipe_name = "proxy_plus_chrf", score_out;
    auto* score_cmd = app.add_subcommand("score", "score line-aligned token files");
    score_cmd->add_option("hypothesis", hyp_path, "hypothesis token file")->required();
    score_cmd->add_option("reference", ref_path, "reference token file")->required();
    score_cmd->add_option("--recipe", recipe_name, "quality_f recipe");
    score_cmd->add_option("--out", score_out, "output directory (default: stdout)");

    std::vector<std::string> args = argv;
    std::vector<const char*> cargs;
    cargs.push_back("pegrl");
    for (const auto& a : args) cargs.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);  // prints help, exit 0
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 2;
    }

    try {
        if (train_cmd->parsed()) return run_train(config_path, out_dir, threads_flag);
        if (compare_cmd->parsed()) return run_compare(config_path, out_dir, threads_flag);
        if (variance_cmd->parsed()) {
            KeyValueConfig cfg = KeyValueConfig::load(config_path);
            if (gap_cmd->parsed()) return run_variance_gap(cfg, out_dir, threads_flag);
            if (decomp_cmd->parsed()) return run_variance_decomp(cfg, out_dir);
            if (scaling_cmd->parsed()) return run_variance_scaling(cfg, out_dir);
            if (study_cmd->parsed()) return run_variance_gradstudy(cfg, out_dir);
        }
        if (score_cmd->parsed()) return run_score(hyp_path, ref_path, recipe_name, score_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
    return 2;
}

}  // namespace pegrl

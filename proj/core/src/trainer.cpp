// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0

#include "pegrl/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "pegrl/parallel.hpp"

namespace pegrl {

namespace {

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

Regime regime_from_string(const std::string& name) {
    if (name == "pegrl") return Regime::pegrl;
    if (name == "separate") return Regime::separate;
    if (name == "baseline_grpo") return Regime::baseline_grpo;
    throw std::invalid_argument("regime: expected pegrl, separate or baseline_grpo, got '" + name +
                                "'");
}

std::string regime_to_string(Regime regime) {
    switch (regime) {
        case Regime::pegrl: return "pegrl";
        case Regime::separate: return "separate";
        case Regime::baseline_grpo: return "baseline_grpo";
    }
    return "pegrl";
}

int TrainConfig::rollouts_per_instance() const {
    return regime == Regime::baseline_grpo ? baseline_group_size() : n + n * m;
}

void TrainConfig::validate() const {
    if (vocab_size < 2) throw std::invalid_argument("config: vocab_size must be >= 2");
    if (task_length < 1) throw std::invalid_argument("config: task_length must be >= 1");
    if (train_instances < 1) throw std::invalid_argument("config: train_instances must be >= 1");
    if (eval_instances < 1) throw std::invalid_argument("config: eval_instances must be >= 1");
    if (n < 2 || m < 2)
        throw std::invalid_argument("config: N and M must be >= 2 (group too small for advantage normalization)");
    if (max_len < 1 || hard_cap < max_len)
        throw std::invalid_argument("config: need hard_cap >= max_len >= 1");
    if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("config: alpha must be in (0,1]");
    if (!std::isfinite(lambda_pe) || !std::isfinite(lambda_mt))
        throw std::invalid_argument("config: lambda_pe/lambda_mt must be finite");
    if (!std::isfinite(learning_rate)) throw std::invalid_argument("config: learning_rate must be finite");
    if (steps < 0) throw std::invalid_argument("config: steps must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("config: batch_size must be >= 1");
    if (eval_interval < 1) throw std::invalid_argument("config: eval_interval must be >= 1");
    if (advantage_eps < 0.0) throw std::invalid_argument("config: advantage_eps must be >= 0");
    if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
}

GradientAccumulator estimate_weighted_gradient(const PolicyParams& theta,
                                               const TrajectoryTree& tree,
                                               const TreeRewards& records,
                                               const std::vector<GrpoGroup>& groups,
                                               double lambda_pe, double lambda_mt,
                                               RewardWeighting weighting) {
    const int n = tree.n();
    const int m = tree.m();
    if (static_cast<int>(records.draft_records.size()) != n ||
        static_cast<int>(records.edit_records.size()) != n)
        throw std::invalid_argument("estimate_weighted_gradient: records/tree shape mismatch");

    // Coefficient tables: advantages in training mode, raw rewards (with the
    // plain per-draft child mean) in oracle mode.
    std::vector<double> mt_coeff(static_cast<std::size_t>(n), 0.0);
    std::vector<std::vector<double>> pe_coeff(static_cast<std::size_t>(n));

    if (weighting == RewardWeighting::advantages) {
        bool found_mt = false;
        std::vector<bool> found_pe(static_cast<std::size_t>(n), false);
        for (const auto& group : groups) {
            if (group.kind == GroupKind::mt_group) {
                if (static_cast<int>(group.advantages.size()) != n)
                    throw std::invalid_argument("estimate_weighted_gradient: mt group size mismatch");
                for (int i = 0; i < n; ++i) mt_coeff[static_cast<std::size_t>(i)] = group.advantages[static_cast<std::size_t>(i)];
                found_mt = true;
            } else {
                if (group.draft_index < 0 || group.draft_index >= n ||
                    static_cast<int>(group.advantages.size()) != m)
                    throw std::invalid_argument("estimate_weighted_gradient: pe group shape mismatch");
                pe_coeff[static_cast<std::size_t>(group.draft_index)] = group.advantages;
                found_pe[static_cast<std::size_t>(group.draft_index)] = true;
            }
        }
        if (!found_mt) throw std::invalid_argument("estimate_weighted_gradient: missing mt group");
        for (bool f : found_pe)
            if (!f) throw std::invalid_argument("estimate_weighted_gradient: missing pe group");
    } else {
        for (int i = 0; i < n; ++i) {
            const auto& row = records.edit_records[static_cast<std::size_t>(i)];
            auto& coeff = pe_coeff[static_cast<std::size_t>(i)];
            coeff.reserve(row.size());
            double sum = 0.0;
            for (const auto& rec : row) {
                coeff.push_back(rec.reward);
                sum += rec.reward;
            }
            mt_coeff[static_cast<std::size_t>(i)] = sum / static_cast<double>(m);
        }
    }

    GradientAccumulator acc;
    acc.grad = DenseGradient::zeros_like(theta);
    acc.trajectory_count = n + n * m;

    if (lambda_pe != 0.0) {
        const double scale = lambda_pe / static_cast<double>(n * m);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j)
                accumulate_logprob_gradient(
                    acc.grad, theta,
                    tree.edits[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
                    scale * pe_coeff[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
    }
    if (lambda_mt != 0.0) {
        const double scale = lambda_mt / static_cast<double>(n);
        for (int i = 0; i < n; ++i)
            accumulate_logprob_gradient(acc.grad, theta, tree.drafts[static_cast<std::size_t>(i)],
                                        scale * mt_coeff[static_cast<std::size_t>(i)]);
    }
    return acc;
}

PolicyParams sgd_step(const PolicyParams& theta, const DenseGradient& grad, double learning_rate) {
    if (grad.mt.size() != theta.theta_mt.size() || grad.pe.size() != theta.theta_pe.size())
        throw std::invalid_argument("sgd_step: gradient/parameter shape mismatch");
    if (!grad.all_finite())
        throw std::runtime_error("sgd_step: non-finite gradient, step rejected");

    PolicyParams next = theta;
    for (std::size_t i = 0; i < next.theta_mt.size(); ++i) next.theta_mt[i] += learning_rate * grad.mt[i];
    for (std::size_t i = 0; i < next.theta_pe.size(); ++i) next.theta_pe[i] += learning_rate * grad.pe[i];
    return next;
}

namespace {

struct EvalAccum {
    double chrf = 0.0;
    double proxy = 0.0;
    double quality = 0.0;

    void add(const TokenSeq& out, const TaskInstance& inst, Recipe recipe) {
        const QualityScore q = quality_f(out, inst.src, inst.tgt, recipe);
        chrf += chrf_pp(out, inst.tgt).value;
        proxy += q.semantic;
        quality += q.total();
    }
};

}  // namespace

EvalSnapshot evaluate_policy(const PolicyParams& theta, const std::vector<TaskInstance>& instances,
                             const TrainConfig& config, int step) {
    const int count = static_cast<int>(instances.size());
    if (count == 0) throw std::invalid_argument("evaluate_policy: no instances");

    struct PerInstance {
        TokenSeq greedy_draft, greedy_edit, sampled_draft, sampled_edit;
    };
    std::vector<PerInstance> outs(static_cast<std::size_t>(count));

    parallel_for(count, config.threads, [&](int k) {
        const auto& inst = instances[static_cast<std::size_t>(k)];
        const auto cond0 = Conditioning::for_translate(inst.src);

        const auto g_draft = greedy_trajectory(theta, Mode::translate, cond0, config.hard_cap);
        const auto g_edit = greedy_trajectory(
            theta, Mode::post_edit, Conditioning::for_post_edit(inst.src, g_draft.tokens),
            config.hard_cap);

        Rng draft_rng(derive_stream(config.seed, {stream_tag::kEval, static_cast<std::uint64_t>(step),
                                                  inst.id, 0}));
        const auto s_draft = sample_trajectory(theta, Mode::translate, cond0, draft_rng,
                                               config.max_len, config.hard_cap);
        Rng edit_rng(derive_stream(config.seed, {stream_tag::kEval, static_cast<std::uint64_t>(step),
                                                 inst.id, 1}));
        const auto s_edit = sample_trajectory(
            theta, Mode::post_edit, Conditioning::for_post_edit(inst.src, s_draft.tokens), edit_rng,
            config.max_len, config.hard_cap);

        outs[static_cast<std::size_t>(k)] = {g_draft.tokens, g_edit.tokens, s_draft.tokens,
                                             s_edit.tokens};
    });

    EvalAccum greedy_draft, greedy_edit, sampled_draft, sampled_edit;
    for (int k = 0; k < count; ++k) {
        const auto& inst = instances[static_cast<std::size_t>(k)];
        const auto& o = outs[static_cast<std::size_t>(k)];
        greedy_draft.add(o.greedy_draft, inst, config.recipe);
        greedy_edit.add(o.greedy_edit, inst, config.recipe);
        sampled_draft.add(o.sampled_draft, inst, config.recipe);
        sampled_edit.add(o.sampled_edit, inst, config.recipe);
    }

    const double inv = 1.0 / static_cast<double>(count);
    auto row = [inv](EvalView view, EvalDecode decode, const EvalAccum& a) {
        return EvalRow{view, decode, a.chrf * inv, a.proxy * inv, a.quality * inv};
    };
    return {row(EvalView::draft, EvalDecode::greedy, greedy_draft),
            row(EvalView::draft, EvalDecode::sampled, sampled_draft),
            row(EvalView::post_edit, EvalDecode::greedy, greedy_edit),
            row(EvalView::post_edit, EvalDecode::sampled, sampled_edit)};
}

namespace {

struct InstanceResult {
    DenseGradient grad;
    double draft_reward_sum = 0.0;
    double edit_reward_sum = 0.0;
    int draft_count = 0;
    int edit_count = 0;
    int gated = 0;
    int penalized = 0;
    std::string rollout_lines;
};

std::string rollout_jsonl(int step, const TrajectoryTree& tree, const TreeRewards& records,
                          const std::vector<GrpoGroup>& groups) {
    // One line per trajectory with its reward record and group advantage.
    std::vector<double> mt_adv;
    std::vector<std::vector<double>> pe_adv(static_cast<std::size_t>(tree.n()));
    for (const auto& g : groups) {
        if (g.kind == GroupKind::mt_group)
            mt_adv = g.advantages;
        else
            pe_adv[static_cast<std::size_t>(g.draft_index)] = g.advantages;
    }

    std::string out;
    auto emit = [&](const Trajectory& traj, const RewardRecord& rec, double adv, bool is_draft,
                    int i, int j) {
        nlohmann::ordered_json line;
        line["step"] = step;
        line["instance"] = tree.instance.id;
        line["kind"] = is_draft ? "draft" : "edit";
        line["i"] = i;
        if (!is_draft) line["j"] = j;
        line["tokens"] = traj.tokens;
        line["truncated"] = traj.truncated;
        line["total_logp"] = traj.total_logp;
        line["reward"] = rec.reward;
        line["gated"] = rec.gated;
        line["penalized"] = rec.penalized;
        line["advantage"] = adv;
        line["group"] = is_draft ? "mt" : ("pe_" + std::to_string(i));
        out += line.dump();
        out += '\n';
    };

    for (int i = 0; i < tree.n(); ++i)
        emit(tree.drafts[static_cast<std::size_t>(i)], records.draft_records[static_cast<std::size_t>(i)],
             mt_adv.empty() ? 0.0 : mt_adv[static_cast<std::size_t>(i)], true, i, 0);
    for (int i = 0; i < tree.n(); ++i)
        for (int j = 0; j < tree.m(); ++j)
            emit(tree.edits[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
                 records.edit_records[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
                 pe_adv[static_cast<std::size_t>(i)].empty()
                     ? 0.0
                     : pe_adv[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
                 false, i, j);
    return out;
}

// Two-stage regimes: hybrid tree, regime-specific rewards, grouped advantages.
InstanceResult two_stage_instance_step(const PolicyParams& theta, const TrainConfig& config,
                                       const TaskInstance& instance, std::uint64_t tree_seed,
                                       int step) {
    const auto tree = hybrid_sample(theta, instance, config.n, config.m, tree_seed, config.max_len,
                                    config.hard_cap);
    const auto records = config.regime == Regime::separate
                             ? score_tree_separate(tree, config.alpha, config.recipe)
                             : score_tree(tree, config.alpha, config.recipe);
    const auto groups = build_groups(tree, records, config.advantage_eps);
    auto acc = estimate_weighted_gradient(theta, tree, records, groups, config.lambda_pe,
                                          config.lambda_mt, RewardWeighting::advantages);

    InstanceResult result;
    result.grad = std::move(acc.grad);
    for (const auto& rec : records.draft_records) {
        result.draft_reward_sum += rec.reward;
        ++result.draft_count;
        if (rec.penalized) ++result.penalized;
    }
    for (const auto& row : records.edit_records)
        for (const auto& rec : row) {
            result.edit_reward_sum += rec.reward;
            ++result.edit_count;
            if (rec.gated) ++result.gated;
            if (rec.penalized) ++result.penalized;
        }
    if (config.log_rollouts) result.rollout_lines = rollout_jsonl(step, tree, records, groups);
    return result;
}

// Single-stage GRPO baseline: one group of N + N*M drafts, quality reward.
InstanceResult baseline_instance_step(const PolicyParams& theta, const TrainConfig& config,
                                      const TaskInstance& instance, std::uint64_t tree_seed,
                                      int step) {
    const int group_size = config.baseline_group_size();
    const auto cond = Conditioning::for_translate(instance.src);

    std::vector<Trajectory> drafts;
    drafts.reserve(static_cast<std::size_t>(group_size));
    std::vector<double> rewards(static_cast<std::size_t>(group_size));
    std::vector<RewardRecord> records(static_cast<std::size_t>(group_size));

    InstanceResult result;
    for (int i = 0; i < group_size; ++i) {
        Rng rng(derive_stream(tree_seed, {stream_tag::kDraft, instance.id, static_cast<std::uint64_t>(i)}));
        drafts.push_back(
            sample_trajectory(theta, Mode::translate, cond, rng, config.max_len, config.hard_cap));
        RewardRecord rec;
        if (drafts.back().truncated) {
            rec.reward = -1.0;
            rec.penalized = true;
            ++result.penalized;
        } else {
            const QualityScore q =
                quality_f(drafts.back().tokens, instance.src, instance.tgt, config.recipe);
            rec.reward = q.total();
            rec.semantic_component = q.semantic;
        }
        records[static_cast<std::size_t>(i)] = rec;
        rewards[static_cast<std::size_t>(i)] = rec.reward;
        result.draft_reward_sum += rec.reward;
        ++result.draft_count;
    }

    const auto advantages = group_advantages(rewards, config.advantage_eps);
    result.grad = DenseGradient::zeros_like(theta);
    const double scale = 1.0 / static_cast<double>(group_size);
    for (int i = 0; i < group_size; ++i)
        accumulate_logprob_gradient(result.grad, theta, drafts[static_cast<std::size_t>(i)],
                                    scale * advantages[static_cast<std::size_t>(i)]);

    if (config.log_rollouts) {
        std::string out;
        for (int i = 0; i < group_size; ++i) {
            nlohmann::ordered_json line;
            line["step"] = step;
            line["instance"] = instance.id;
            line["kind"] = "draft";
            line["i"] = i;
            line["tokens"] = drafts[static_cast<std::size_t>(i)].tokens;
            line["truncated"] = drafts[static_cast<std::size_t>(i)].truncated;
            line["total_logp"] = drafts[static_cast<std::size_t>(i)].total_logp;
            line["reward"] = records[static_cast<std::size_t>(i)].reward;
            line["gated"] = false;
            line["penalized"] = records[static_cast<std::size_t>(i)].penalized;
            line["advantage"] = advantages[static_cast<std::size_t>(i)];
            line["group"] = "mt";
            out += line.dump();
            out += '\n';
        }
        result.rollout_lines = std::move(out);
    }
    return result;
}

}  // namespace

TrainResult train(const TrainConfig& config, const std::vector<TaskInstance>& instances,
                  const std::vector<TaskInstance>& eval_instances) {
    config.validate();
    if (instances.empty()) throw std::invalid_argument("train: no training instances");

    TrainResult result;
    result.theta = PolicyParams::zeros(Vocab(config.vocab_size));

    for (int step = 0; step < config.steps; ++step) {
        const std::uint64_t step_seed =
            derive_stream(config.seed, {stream_tag::kStep, static_cast<std::uint64_t>(step)});

        std::vector<InstanceResult> batch(static_cast<std::size_t>(config.batch_size));
        parallel_for(config.batch_size, config.threads, [&](int k) {
            const std::size_t idx = (static_cast<std::size_t>(step) * config.batch_size + k) %
                                    instances.size();
            const std::uint64_t tree_seed =
                derive_stream(step_seed, {stream_tag::kInstance, static_cast<std::uint64_t>(k)});
            const auto& inst = instances[idx];
            batch[static_cast<std::size_t>(k)] =
                config.regime == Regime::baseline_grpo
                    ? baseline_instance_step(result.theta, config, inst, tree_seed, step)
                    : two_stage_instance_step(result.theta, config, inst, tree_seed, step);
        });

        // Deterministic reduction in batch order.
        DenseGradient step_grad = DenseGradient::zeros_like(result.theta);
        double draft_sum = 0.0, edit_sum = 0.0;
        int draft_count = 0, edit_count = 0, gated = 0, penalized = 0, trajectories = 0;
        const double inv_batch = 1.0 / static_cast<double>(config.batch_size);
        for (const auto& item : batch) {
            step_grad.add_scaled(item.grad, inv_batch);
            draft_sum += item.draft_reward_sum;
            edit_sum += item.edit_reward_sum;
            draft_count += item.draft_count;
            edit_count += item.edit_count;
            gated += item.gated;
            penalized += item.penalized;
            trajectories += item.draft_count + item.edit_count;
            if (config.log_rollouts) result.rollout_jsonl += item.rollout_lines;
        }

        StepRecord record;
        record.step = step;
        record.mean_draft_reward = draft_sum / static_cast<double>(draft_count);
        if (edit_count > 0) record.mean_edit_reward = edit_sum / static_cast<double>(edit_count);
        record.gated_fraction =
            edit_count > 0 ? static_cast<double>(gated) / static_cast<double>(edit_count) : 0.0;
        record.penalty_fraction = static_cast<double>(penalized) / static_cast<double>(trajectories);
        record.grad_norm = step_grad.l2_norm();

        result.theta = sgd_step(result.theta, step_grad, config.learning_rate);

        if (!eval_instances.empty() &&
            ((step + 1) % config.eval_interval == 0 || step + 1 == config.steps)) {
            record.eval = evaluate_policy(result.theta, eval_instances, config, step);
        }
        result.log.steps.push_back(std::move(record));
    }
    return result;
}

namespace {

const char* view_name(EvalView view) { return view == EvalView::draft ? "draft" : "post_edit"; }
const char* decode_name(EvalDecode d) { return d == EvalDecode::greedy ? "greedy" : "sampled"; }

}  // namespace

std::string TrainingLog::to_jsonl() const {
    std::string out;
    for (const auto& record : steps) {
        nlohmann::ordered_json j;
        j["step"] = record.step;
        j["mean_draft_reward"] = record.mean_draft_reward;
        if (record.mean_edit_reward.has_value())
            j["mean_edit_reward"] = record.mean_edit_reward.value();
        else
            j["mean_edit_reward"] = nullptr;
        j["gated_fraction"] = record.gated_fraction;
        j["penalty_fraction"] = record.penalty_fraction;
        j["grad_norm"] = record.grad_norm;
        if (record.eval.has_value()) {
            nlohmann::ordered_json rows = nlohmann::ordered_json::array();
            for (const auto& r : record.eval.value()) {
                nlohmann::ordered_json e;
                e["view"] = view_name(r.view);
                e["decode"] = decode_name(r.decode);
                e["chrf_pp"] = r.chrf_pp;
                e["proxy"] = r.proxy;
                e["quality_f"] = r.quality_f;
                rows.push_back(std::move(e));
            }
            j["eval"] = std::move(rows);
        } else {
            j["eval"] = nullptr;
        }
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::string TrainingLog::eval_csv() const {
    std::string out = "step,view,decode,chrf_pp,proxy,quality_f\n";
    for (const auto& record : steps) {
        if (!record.eval.has_value()) continue;
        for (const auto& r : record.eval.value()) {
            out += std::to_string(record.step);
            out += ',';
            out += view_name(r.view);
            out += ',';
            out += decode_name(r.decode);
            out += ',';
            out += fmt_double(r.chrf_pp);
            out += ',';
            out += fmt_double(r.proxy);
            out += ',';
            out += fmt_double(r.quality_f);
            out += '\n';
        }
    }
    return out;
}

double SweepOutcome::quality(EvalView view, EvalDecode decode) const {
    for (const auto& row : final_eval)
        if (row.view == view && row.decode == decode) return row.quality_f;
    throw std::invalid_argument("SweepOutcome: missing eval row");
}

SweepOutcome run_training_outcome(const TrainConfig& config) {
    const Vocab vocab(config.vocab_size);
    const auto train_set = make_instances(config.seed, 0, config.train_instances, vocab,
                                          config.task_length);
    const auto eval_set =
        make_instances(config.seed, static_cast<std::uint64_t>(config.train_instances),
                       config.eval_instances, vocab, config.task_length);

    const auto result = train(config, train_set, eval_set);

    SweepOutcome outcome;
    outcome.seed = config.seed;
    outcome.regime = config.regime;
    outcome.lambda_pe = config.lambda_pe;
    outcome.lambda_mt = config.lambda_mt;
    if (result.log.steps.empty() || !result.log.steps.back().eval.has_value())
        throw std::runtime_error("run_training_outcome: training produced no final evaluation");
    outcome.final_eval = result.log.steps.back().eval.value();
    return outcome;
}

std::string sweep_csv(const std::vector<SweepOutcome>& outcomes) {
    std::string out = "seed,regime,lambda_pe,lambda_mt,view,decode,chrf_pp,proxy,quality_f\n";
    for (const auto& o : outcomes) {
        for (const auto& r : o.final_eval) {
            out += std::to_string(o.seed);
            out += ',';
            out += regime_to_string(o.regime);
            out += ',';
            out += fmt_double(o.lambda_pe);
            out += ',';
            out += fmt_double(o.lambda_mt);
            out += ',';
            out += view_name(r.view);
            out += ',';
            out += decode_name(r.decode);
            out += ',';
            out += fmt_double(r.chrf_pp);
            out += ',';
            out += fmt_double(r.proxy);
            out += ',';
            out += fmt_double(r.quality_f);
            out += '\n';
        }
    }
    return out;
}

}  // namespace pegrl

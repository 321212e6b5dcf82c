// Copyright (c) 2026 pegrl authors
// SPDX-License-Identifier: Apache-2.0

#include "pegrl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pegrl {

namespace {

void check_conditioning(Mode mode, const Conditioning& cond) {
    if (cond.src.empty()) throw std::invalid_argument("policy: empty source conditioning");
    if (mode == Mode::post_edit && !cond.draft.has_value())
        throw std::invalid_argument("policy: post_edit conditioning requires a draft");
    if (mode == Mode::translate && cond.draft.has_value())
        throw std::invalid_argument("policy: translate conditioning must not carry a draft");
}

double logsumexp(const double* row, int n) {
    double m = row[0];
    for (int i = 1; i < n; ++i) m = std::max(m, row[i]);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += std::exp(row[i] - m);
    return m + std::log(sum);
}

void softmax_row(const double* row, int n, double* out) {
    const double lse = logsumexp(row, n);
    for (int i = 0; i < n; ++i) out[i] = std::exp(row[i] - lse);
}

}  // namespace

PolicyParams PolicyParams::zeros(const Vocab& vocab) {
    PolicyParams p;
    p.vocab_size = vocab.size;
    p.theta_mt.assign(static_cast<std::size_t>(p.mt_rows()) * p.num_actions(), 0.0);
    p.theta_pe.assign(static_cast<std::size_t>(p.pe_rows()) * p.num_actions(), 0.0);
    return p;
}

double* PolicyParams::row(Mode mode, int context) {
    auto& table = mode == Mode::translate ? theta_mt : theta_pe;
    const int rows = context_rows(mode, vocab_size);
    if (context < 0 || context >= rows) throw std::out_of_range("PolicyParams: unknown context id");
    return table.data() + static_cast<std::size_t>(context) * num_actions();
}

const double* PolicyParams::row(Mode mode, int context) const {
    return const_cast<PolicyParams*>(this)->row(mode, context);
}

int context_rows(Mode mode, int vocab_size) {
    return mode == Mode::translate ? vocab_size + 1 : (vocab_size + 1) * (vocab_size + 1);
}

// Steps beyond the conditioning sequence map to the dedicated overflow slot
// (index |V|), so "emit eos after the aligned content" is representable.
namespace {

int aligned_slot(const TokenSeq& seq, int step, int vocab_size) {
    if (step >= static_cast<int>(seq.size())) return vocab_size;
    const int token = seq[static_cast<std::size_t>(step)];
    if (token < 0 || token >= vocab_size)
        throw std::out_of_range("context: conditioning token outside vocab");
    return token;
}

}  // namespace

int translate_context(const Conditioning& cond, int step, int vocab_size) {
    return aligned_slot(cond.src, step, vocab_size);
}

int post_edit_context(const Conditioning& cond, int step, int vocab_size) {
    const int src_slot = aligned_slot(cond.src, step, vocab_size);
    const int draft_slot = aligned_slot(cond.draft.value(), step, vocab_size);
    return src_slot * (vocab_size + 1) + draft_slot;
}

int context_at(Mode mode, const Conditioning& cond, int step, int vocab_size) {
    check_conditioning(mode, cond);
    return mode == Mode::translate ? translate_context(cond, step, vocab_size)
                                   : post_edit_context(cond, step, vocab_size);
}

double log_prob(const PolicyParams& theta, Mode mode, int context, int action) {
    const int n = theta.num_actions();
    if (action < 0 || action >= n) throw std::out_of_range("log_prob: action out of range");
    const double* row = theta.row(mode, context);
    return row[action] - logsumexp(row, n);
}

std::vector<double> log_prob_row(const PolicyParams& theta, Mode mode, int context) {
    const int n = theta.num_actions();
    const double* row = theta.row(mode, context);
    const double lse = logsumexp(row, n);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = row[i] - lse;
    return out;
}

Trajectory sample_trajectory(const PolicyParams& theta, Mode mode, const Conditioning& cond,
                             Rng& rng, int max_len, int hard_cap) {
    if (max_len < 1 || hard_cap < max_len)
        throw std::invalid_argument("sample_trajectory: need hard_cap >= max_len >= 1");
    check_conditioning(mode, cond);

    Trajectory traj;
    traj.mode = mode;
    traj.conditioning = cond;
    const int n = theta.num_actions();
    const int eos = theta.vocab_size;
    std::vector<double> probs(static_cast<std::size_t>(n));

    for (int step = 0;; ++step) {
        const int ctx = context_at(mode, cond, step, theta.vocab_size);
        const double* row = theta.row(mode, ctx);
        softmax_row(row, n, probs.data());

        const double u = rng.next_double();
        int action = n - 1;  // fp residue falls through to the last action
        double cum = 0.0;
        for (int a = 0; a < n; ++a) {
            cum += probs[static_cast<std::size_t>(a)];
            if (u < cum) {
                action = a;
                break;
            }
        }

        const double logp = row[action] - logsumexp(row, n);
        traj.step_logps.push_back(logp);
        traj.total_logp += logp;
        if (action == eos) {
            traj.truncated = false;
            break;
        }
        traj.tokens.push_back(action);
        if (static_cast<int>(traj.tokens.size()) == hard_cap) {
            traj.truncated = true;
            break;
        }
    }
    return traj;
}

Trajectory greedy_trajectory(const PolicyParams& theta, Mode mode, const Conditioning& cond,
                             int hard_cap) {
    if (hard_cap < 1) throw std::invalid_argument("greedy_trajectory: hard_cap must be >= 1");
    check_conditioning(mode, cond);

    Trajectory traj;
    traj.mode = mode;
    traj.conditioning = cond;
    const int n = theta.num_actions();
    const int eos = theta.vocab_size;

    for (int step = 0;; ++step) {
        const int ctx = context_at(mode, cond, step, theta.vocab_size);
        const double* row = theta.row(mode, ctx);
        int action = 0;
        for (int a = 1; a < n; ++a)
            if (row[a] > row[action]) action = a;

        const double logp = row[action] - logsumexp(row, n);
        traj.step_logps.push_back(logp);
        traj.total_logp += logp;
        if (action == eos) {
            traj.truncated = false;
            break;
        }
        traj.tokens.push_back(action);
        if (static_cast<int>(traj.tokens.size()) == hard_cap) {
            traj.truncated = true;
            break;
        }
    }
    return traj;
}

DenseGradient DenseGradient::zeros_like(const PolicyParams& theta) {
    DenseGradient g;
    g.mt.assign(theta.theta_mt.size(), 0.0);
    g.pe.assign(theta.theta_pe.size(), 0.0);
    return g;
}

void DenseGradient::add_scaled(const DenseGradient& other, double scale) {
    if (other.mt.size() != mt.size() || other.pe.size() != pe.size())
        throw std::invalid_argument("DenseGradient: shape mismatch");
    for (std::size_t i = 0; i < mt.size(); ++i) mt[i] += scale * other.mt[i];
    for (std::size_t i = 0; i < pe.size(); ++i) pe[i] += scale * other.pe[i];
}

void DenseGradient::scale(double factor) {
    for (auto& v : mt) v *= factor;
    for (auto& v : pe) v *= factor;
}

double DenseGradient::l2_norm() const {
    double sum = 0.0;
    for (double v : mt) sum += v * v;
    for (double v : pe) sum += v * v;
    return std::sqrt(sum);
}

double DenseGradient::max_abs() const {
    double m = 0.0;
    for (double v : mt) m = std::max(m, std::abs(v));
    for (double v : pe) m = std::max(m, std::abs(v));
    return m;
}

bool DenseGradient::all_finite() const {
    for (double v : mt)
        if (!std::isfinite(v)) return false;
    for (double v : pe)
        if (!std::isfinite(v)) return false;
    return true;
}

namespace {

// Actions taken along a trajectory: the content tokens, plus the final eos
// step when the rollout terminated normally.
int trajectory_steps(const Trajectory& traj) {
    return static_cast<int>(traj.tokens.size()) + (traj.truncated ? 0 : 1);
}

int trajectory_action(const Trajectory& traj, int step, int eos) {
    return step < static_cast<int>(traj.tokens.size()) ? traj.tokens[static_cast<std::size_t>(step)]
                                                       : eos;
}

}  // namespace

SparseGradient logprob_gradient(const PolicyParams& theta, const Trajectory& trajectory) {
    SparseGradient grad;
    grad.mode = trajectory.mode;
    const int n = theta.num_actions();
    const int eos = theta.vocab_size;
    std::vector<double> probs(static_cast<std::size_t>(n));

    const int steps = trajectory_steps(trajectory);
    for (int step = 0; step < steps; ++step) {
        const int ctx = context_at(trajectory.mode, trajectory.conditioning, step, theta.vocab_size);
        const int action = trajectory_action(trajectory, step, eos);
        softmax_row(theta.row(trajectory.mode, ctx), n, probs.data());
        auto [it, inserted] = grad.rows.try_emplace(ctx, std::vector<double>(static_cast<std::size_t>(n), 0.0));
        auto& row = it->second;
        for (int a = 0; a < n; ++a) row[static_cast<std::size_t>(a)] -= probs[static_cast<std::size_t>(a)];
        row[static_cast<std::size_t>(action)] += 1.0;
    }
    return grad;
}

void accumulate_logprob_gradient(DenseGradient& acc, const PolicyParams& theta,
                                 const Trajectory& trajectory, double scale) {
    if (scale == 0.0) return;
    const int n = theta.num_actions();
    const int eos = theta.vocab_size;
    std::vector<double>& table = trajectory.mode == Mode::translate ? acc.mt : acc.pe;
    std::vector<double> probs(static_cast<std::size_t>(n));

    const int steps = trajectory_steps(trajectory);
    for (int step = 0; step < steps; ++step) {
        const int ctx = context_at(trajectory.mode, trajectory.conditioning, step, theta.vocab_size);
        const int action = trajectory_action(trajectory, step, eos);
        softmax_row(theta.row(trajectory.mode, ctx), n, probs.data());
        double* row = table.data() + static_cast<std::size_t>(ctx) * n;
        for (int a = 0; a < n; ++a) row[a] -= scale * probs[static_cast<std::size_t>(a)];
        row[action] += scale;
    }
}

namespace {

std::uint64_t pow_u64_checked(std::uint64_t base, int exp, std::uint64_t limit) {
    std::uint64_t result = 1;
    for (int i = 0; i < exp; ++i) {
        if (result > limit / std::max<std::uint64_t>(base, 1)) return limit + 1;
        result *= base;
    }
    return result;
}

// Shared enumeration core: all sequences of exactly `len` content tokens,
// optionally closed with an eos step.
void enumerate_fixed(const PolicyParams& theta, Mode mode, const Conditioning& cond, int len,
                     bool with_eos, std::vector<EnumeratedTrajectory>& out) {
    const int v = theta.vocab_size;
    const int eos = v;

    // Positional conditioning: the context sequence does not depend on the
    // sampled tokens, so per-position log-softmax rows can be precomputed.
    std::vector<std::vector<double>> rows;
    for (int step = 0; step <= len; ++step)
        rows.push_back(log_prob_row(theta, mode, context_at(mode, cond, step, v)));

    TokenSeq tokens(static_cast<std::size_t>(len), 0);
    while (true) {
        Trajectory traj;
        traj.mode = mode;
        traj.conditioning = cond;
        traj.tokens = tokens;
        traj.truncated = !with_eos;
        for (int step = 0; step < len; ++step) {
            const double lp = rows[static_cast<std::size_t>(step)]
                                  [static_cast<std::size_t>(tokens[static_cast<std::size_t>(step)])];
            traj.step_logps.push_back(lp);
            traj.total_logp += lp;
        }
        if (with_eos) {
            const double lp = rows[static_cast<std::size_t>(len)][static_cast<std::size_t>(eos)];
            traj.step_logps.push_back(lp);
            traj.total_logp += lp;
        }
        out.push_back({std::move(traj), 0.0});

        // odometer increment
        int pos = len - 1;
        while (pos >= 0 && tokens[static_cast<std::size_t>(pos)] == v - 1) {
            tokens[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
        ++tokens[static_cast<std::size_t>(pos)];
    }
}

}  // namespace

std::vector<EnumeratedTrajectory> enumerate_trajectories(const PolicyParams& theta, Mode mode,
                                                         const Conditioning& cond, int exact_len) {
    if (exact_len < 0) throw std::invalid_argument("enumerate_trajectories: negative length");
    check_conditioning(mode, cond);
    const auto count =
        pow_u64_checked(static_cast<std::uint64_t>(theta.vocab_size) + 1, exact_len, kEnumerationBudget);
    if (count > kEnumerationBudget)
        throw std::runtime_error("enumerate_trajectories: enumeration budget exceeded");

    std::vector<EnumeratedTrajectory> out;
    enumerate_fixed(theta, mode, cond, exact_len, /*with_eos=*/true, out);
    for (auto& e : out) e.prob = std::exp(e.trajectory.total_logp);
    return out;
}

std::vector<EnumeratedTrajectory> enumerate_support(const PolicyParams& theta, Mode mode,
                                                    const Conditioning& cond, int hard_cap) {
    if (hard_cap < 1) throw std::invalid_argument("enumerate_support: hard_cap must be >= 1");
    check_conditioning(mode, cond);

    std::uint64_t count = 0;
    for (int len = 0; len <= hard_cap; ++len) {
        const auto c =
            pow_u64_checked(static_cast<std::uint64_t>(theta.vocab_size), len, kEnumerationBudget);
        count += c;
        if (c > kEnumerationBudget || count > kEnumerationBudget)
            throw std::runtime_error("enumerate_support: enumeration budget exceeded");
    }

    std::vector<EnumeratedTrajectory> out;
    out.reserve(count);
    for (int len = 0; len < hard_cap; ++len)
        enumerate_fixed(theta, mode, cond, len, /*with_eos=*/true, out);
    enumerate_fixed(theta, mode, cond, hard_cap, /*with_eos=*/false, out);
    for (auto& e : out) e.prob = std::exp(e.trajectory.total_logp);
    return out;
}

DenseGradient ExactGradient::total() const {
    DenseGradient g = term_pe;
    g.add_scaled(term_mt, 1.0);
    return g;
}

ExactGradient exact_objective_and_gradient(const PolicyParams& theta, const TaskInstance& instance,
                                           const PairRewardFn& reward_fn, int draft_cap,
                                           int edit_cap) {
    const auto cond0 = Conditioning::for_translate(instance.src);
    const auto drafts = enumerate_support(theta, Mode::translate, cond0, draft_cap);

    ExactGradient result;
    result.term_pe = DenseGradient::zeros_like(theta);
    result.term_mt = DenseGradient::zeros_like(theta);

    for (const auto& [draft, p0] : drafts) {
        const auto cond1 = Conditioning::for_post_edit(instance.src, draft.tokens);
        const auto edits = enumerate_support(theta, Mode::post_edit, cond1, edit_cap);

        double inner_mean = 0.0;
        for (const auto& [edit, p1] : edits) {
            const double r = reward_fn(draft, edit);
            inner_mean += p1 * r;
            accumulate_logprob_gradient(result.term_pe, theta, edit, p0 * p1 * r);
        }
        result.objective += p0 * inner_mean;
        accumulate_logprob_gradient(result.term_mt, theta, draft, p0 * inner_mean);
    }
    return result;
}

std::string policy_to_json(const PolicyParams& theta) {
    nlohmann::ordered_json j;
    j["vocab_size"] = theta.vocab_size;
    j["theta_mt"] = theta.theta_mt;
    j["theta_pe"] = theta.theta_pe;
    return j.dump();
}

PolicyParams policy_from_json(const std::string& json_text) {
    const auto j = nlohmann::json::parse(json_text);
    PolicyParams theta;
    theta.vocab_size = j.at("vocab_size").get<int>();
    theta.theta_mt = j.at("theta_mt").get<std::vector<double>>();
    theta.theta_pe = j.at("theta_pe").get<std::vector<double>>();
    const Vocab vocab(theta.vocab_size);
    const auto expect = PolicyParams::zeros(vocab);
    if (theta.theta_mt.size() != expect.theta_mt.size() ||
        theta.theta_pe.size() != expect.theta_pe.size())
        throw std::invalid_argument("policy_from_json: table shape mismatch");
    return theta;
}

}  // namespace pegrl

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#include "empathy/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "empathy/checkpoint.hpp"
#include "empathy/coe_format.hpp"
#include "empathy/error.hpp"

namespace empathy::grpo {

namespace {

void require_finite(double v, const std::string& what) {
    if (!std::isfinite(v)) throw NumericError("non-finite " + what);
}

/// Temperature-1 next-token probabilities for every row.
std::vector<double> all_row_probs(const ToyPolicyParams& params) {
    const std::size_t v = params.vocab_size();
    std::vector<double> probs(v * v);
    for (Token prev = 0; prev < v; ++prev) {
        const auto p = next_token_probs(params, prev, 1.0);
        std::copy(p.begin(), p.end(), probs.begin() + static_cast<std::ptrdiff_t>(prev * v));
    }
    return probs;
}

Token start_token(const ToyPolicyParams& params, std::span<const Token> prompt) {
    return prompt.empty() ? params.bos : prompt.back();
}

double sum(std::span<const double> xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
}

}  // namespace

void validate(const GrpoConfig& c) {
    if (c.group_size < 2) throw ValidationError("group size must be >= 2");
    if (!(c.clip_eps > 0.0)) throw ValidationError("clip epsilon must be > 0");
    if (!(c.kl_beta >= 0.0) || !std::isfinite(c.kl_beta)) throw ValidationError("KL beta must be >= 0");
    if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) {
        throw ValidationError("learning rate must be > 0");
    }
    if (!(c.rollout_temperature > 0.0)) throw ValidationError("rollout temperature must be > 0");
    if (c.max_len < 1) throw ValidationError("max_len must be >= 1");
    if (!(c.sigma_floor >= 0.0)) throw ValidationError("sigma floor must be >= 0");
}

// ---- Policy ------------------------------------------------------------------------

std::string ToyPolicyParams::decode(std::span<const Token> tokens) const {
    std::string out;
    for (Token t : tokens) {
        if (t == bos || t == eos) continue;
        out += vocab.at(t);
    }
    return out;
}

void validate(const ToyPolicyParams& p) {
    const std::size_t v = p.vocab_size();
    if (v < 2) throw ValidationError("policy vocabulary needs at least BOS and EOS");
    if (p.bos >= v || p.eos >= v || p.bos == p.eos) throw ValidationError("policy BOS/EOS indices are invalid");
    if (p.logits.size() != v * v) throw ValidationError("policy logits must be |V| x |V|");
    for (double x : p.logits) {
        if (!std::isfinite(x)) throw ValidationError("policy logits must be finite");
    }
}

ToyPolicyParams make_policy(std::vector<std::string> vocab, Token bos, Token eos) {
    ToyPolicyParams p;
    const std::size_t v = vocab.size();
    p.vocab = std::move(vocab);
    p.bos = bos;
    p.eos = eos;
    p.logits.assign(v * v, 0.0);
    validate(p);
    return p;
}

std::vector<double> next_token_probs(const ToyPolicyParams& params, Token prev, double temperature) {
    if (!(temperature > 0.0)) throw ValidationError("temperature must be > 0");
    if (prev >= params.vocab_size()) throw ValidationError("previous token is outside the vocabulary");
    const auto row = params.row(prev);
    std::vector<double> probs(row.size(), 0.0);
    double max_logit = -std::numeric_limits<double>::infinity();
    for (Token j = 0; j < row.size(); ++j) {
        if (j != params.bos) max_logit = std::max(max_logit, row[j] / temperature);
    }
    double z = 0.0;
    for (Token j = 0; j < row.size(); ++j) {
        if (j == params.bos) continue;
        probs[j] = std::exp(row[j] / temperature - max_logit);
        z += probs[j];
    }
    for (double& p : probs) p /= z;
    return probs;
}

namespace {

double log_prob(const ToyPolicyParams& params, Token prev, Token next) {
    const auto row = params.row(prev);
    double max_logit = -std::numeric_limits<double>::infinity();
    for (Token j = 0; j < row.size(); ++j) {
        if (j != params.bos) max_logit = std::max(max_logit, row[j]);
    }
    double z = 0.0;
    for (Token j = 0; j < row.size(); ++j) {
        if (j != params.bos) z += std::exp(row[j] - max_logit);
    }
    return row[next] - max_logit - std::log(z);
}

}  // namespace

std::vector<double> sequence_logprobs(const ToyPolicyParams& params, std::span<const Token> prompt,
                                      std::span<const Token> tokens) {
    std::vector<double> out;
    out.reserve(tokens.size());
    Token prev = start_token(params, prompt);
    for (Token t : tokens) {
        if (t == params.bos) throw ValidationError("BOS cannot appear in a generated sequence");
        out.push_back(log_prob(params, prev, t));
        prev = t;
    }
    return out;
}

Rollout policy_sample(const ToyPolicyParams& params, std::span<const Token> prompt, double temperature,
                      std::size_t max_len, Rng& rng) {
    if (!(temperature > 0.0)) throw ValidationError("temperature must be > 0");
    Rollout out;
    Token prev = start_token(params, prompt);
    while (out.tokens.size() < max_len) {
        const auto probs = next_token_probs(params, prev, temperature);
        const double u = uniform01(rng);
        double acc = 0.0;
        Token next = params.eos;
        // Fall back to the last admissible token if rounding leaves u above the total.
        for (Token j = 0; j < probs.size(); ++j) {
            if (j == params.bos) continue;
            next = j;
            acc += probs[j];
            if (u < acc) break;
        }
        out.logp.push_back(log_prob(params, prev, next));
        out.tokens.push_back(next);
        prev = next;
        if (next == params.eos) break;
    }
    out.text = params.decode(out.tokens);
    return out;
}

// ---- Objective ---------------------------------------------------------------------

std::vector<double> group_advantages(std::span<const double> rewards, double sigma_floor) {
    if (rewards.size() < 2) throw ValidationError("group advantages need at least two rewards");
    const auto g = static_cast<double>(rewards.size());
    const double mean = sum(rewards) / g;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    const double sigma = std::sqrt(var / g);
    std::vector<double> adv(rewards.size(), 0.0);
    if (sigma < sigma_floor || sigma == 0.0) return adv;
    for (std::size_t i = 0; i < rewards.size(); ++i) adv[i] = (rewards[i] - mean) / sigma;
    return adv;
}

double kl_estimate(std::span<const double> logp_new, std::span<const double> logp_ref) {
    if (logp_new.size() != logp_ref.size()) throw ValidationError("KL estimate: length mismatch");
    if (logp_new.empty()) throw ValidationError("KL estimate: empty sequence");
    double total = 0.0;
    for (std::size_t t = 0; t < logp_new.size(); ++t) {
        const double d = logp_ref[t] - logp_new[t];
        // expm1(d) - d is the same quantity with less cancellation near d = 0.
        total += std::max(0.0, std::expm1(d) - d);
    }
    return total / static_cast<double>(logp_new.size());
}

void validate(const RolloutGroup& g) {
    const std::size_t n = g.outputs.size();
    if (n < 1) throw ValidationError("rollout group is empty");
    if (g.logp_new.size() != n || g.logp_old.size() != n || g.logp_ref.size() != n || g.rewards.size() != n ||
        g.advantages.size() != n) {
        throw ValidationError("rollout group arrays disagree in length");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t t = g.outputs[i].tokens.size();
        if (t == 0) throw ValidationError("rollout group contains an empty sequence");
        if (g.logp_new[i].size() != t || g.logp_old[i].size() != t || g.logp_ref[i].size() != t) {
            throw ValidationError("rollout group log-probabilities disagree with token counts");
        }
    }
}

namespace {

struct Term {
    double value = 0.0;
    bool clipped = false;  ///< Clipped branch strictly smaller; gradient is zero.
    double ratio = 1.0;
};

Term clipped_term(double log_ratio, double advantage, double eps) {
    Term t;
    t.ratio = std::exp(log_ratio);
    const double unclipped = t.ratio * advantage;
    const double clipped = std::clamp(t.ratio, 1.0 - eps, 1.0 + eps) * advantage;
    t.clipped = clipped < unclipped;
    t.value = std::min(unclipped, clipped);
    return t;
}

}  // namespace

SurrogateStats surrogate_objective(const RolloutGroup& group, const GrpoConfig& config) {
    validate(group);
    const auto g = static_cast<double>(group.outputs.size());
    SurrogateStats s;
    double policy_term = 0.0;
    std::size_t n_clipped = 0;
    for (std::size_t i = 0; i < group.outputs.size(); ++i) {
        const double log_ratio = sum(group.logp_new[i]) - sum(group.logp_old[i]);
        const Term t = clipped_term(log_ratio, group.advantages[i], config.clip_eps);
        policy_term += t.value;
        n_clipped += t.clipped ? 1 : 0;
        s.mean_kl += kl_estimate(group.logp_new[i], group.logp_ref[i]);
    }
    s.mean_kl /= g;
    s.objective = policy_term / g - config.kl_beta * s.mean_kl;
    s.clip_fraction = static_cast<double>(n_clipped) / g;
    require_finite(s.objective, "surrogate objective");
    return s;
}

SurrogateGradient surrogate_gradient(const ToyPolicyParams& params, const RolloutGroup& group,
                                     const GrpoConfig& config) {
    const std::size_t v = params.vocab_size();
    const std::size_t n = group.outputs.size();
    const auto g = static_cast<double>(n);
    const auto probs = all_row_probs(params);

    SurrogateGradient out;
    out.grad.assign(v * v, 0.0);
    double policy_term = 0.0;
    std::size_t n_clipped = 0;

    // d log pi(y | p) / d L[p][j] = 1{j = y} - pi(j | p), j != BOS.
    auto add_score = [&](Token prev, Token y, double coeff) {
        const std::size_t base = prev * v;
        for (Token j = 0; j < v; ++j) {
            if (j == params.bos) continue;
            out.grad[base + j] -= coeff * probs[base + j];
        }
        out.grad[base + y] += coeff;
    };

    for (std::size_t i = 0; i < n; ++i) {
        const auto& tokens = group.outputs[i].tokens;
        const auto logp_new = sequence_logprobs(params, group.prompt, tokens);
        if (group.logp_old[i].size() != tokens.size() || group.logp_ref[i].size() != tokens.size()) {
            throw ValidationError("rollout group log-probabilities disagree with token counts");
        }
        const double log_ratio = sum(logp_new) - sum(group.logp_old[i]);
        const Term t = clipped_term(log_ratio, group.advantages[i], config.clip_eps);
        policy_term += t.value;
        n_clipped += t.clipped ? 1 : 0;
        const double kl = kl_estimate(logp_new, group.logp_ref[i]);
        out.stats.mean_kl += kl;

        const double policy_coeff = t.clipped ? 0.0 : group.advantages[i] * t.ratio / g;
        const double kl_scale = config.kl_beta / (g * static_cast<double>(tokens.size()));
        Token prev = start_token(params, group.prompt);
        for (std::size_t k = 0; k < tokens.size(); ++k) {
            // -beta/G * (1/T) * d/dln [exp(ref - ln) - (ref - ln) - 1] = -beta/(G T) * (1 - exp(ref - ln))
            const double kl_coeff = -kl_scale * (-std::expm1(group.logp_ref[i][k] - logp_new[k]));
            const double coeff = policy_coeff + kl_coeff;
            if (coeff != 0.0) add_score(prev, tokens[k], coeff);
            prev = tokens[k];
        }
    }
    out.stats.mean_kl /= g;
    out.stats.objective = policy_term / g - config.kl_beta * out.stats.mean_kl;
    out.stats.clip_fraction = static_cast<double>(n_clipped) / g;
    require_finite(out.stats.objective, "surrogate objective");
    for (double d : out.grad) require_finite(d, "policy gradient");
    return out;
}

// ---- Rewards -------------------------------------------------------------------------

RewardBreakdown total_reward(std::string_view output_text, std::string_view q, const reward::EncoderParams& rm,
                             double threshold) {
    RewardBreakdown r;
    r.format = coe::format_reward(output_text);
    r.answer = reward::answer_reward(q, coe::extract_answer(output_text), rm, threshold);
    r.total = r.format + r.answer;
    return r;
}

RewardFn format_only_reward() {
    return [](std::string_view output, std::string_view) {
        RewardBreakdown r;
        r.format = coe::format_reward(output);
        r.total = r.format;
        return r;
    };
}

RewardFn composite_reward(reward::EncoderParams rm, double threshold) {
    return [rm = std::move(rm), threshold](std::string_view output, std::string_view prompt) {
        return total_reward(output, prompt, rm, threshold);
    };
}

// ---- Training -------------------------------------------------------------------------

nlohmann::json to_json(const TraceRow& r) {
    return {
        {"step", r.step},
        {"mean_reward", r.mean_reward},
        {"mean_format_reward", r.mean_format_reward},
        {"mean_answer_reward", r.mean_answer_reward},
        {"kl", r.kl},
        {"clip_fraction", r.clip_fraction},
        {"objective", r.objective},
    };
}

TrainOutput grpo_train(const ToyPolicyParams& init, std::span<const Prompt> prompts, const RewardFn& reward_fn,
                       const GrpoConfig& config, const std::function<void(const TraceRow&)>& on_step) {
    validate(config);
    validate(init);
    if (prompts.empty()) throw ValidationError("GRPO training needs at least one prompt");
    if (!reward_fn) throw ValidationError("GRPO training needs a reward function");

    const ToyPolicyParams& ref = init;
    TrainOutput out{init, {}};
    out.trace.reserve(config.steps);
    Rng rng(config.seed);
    const auto g = static_cast<double>(config.group_size);

    for (std::size_t step = 1; step <= config.steps; ++step) {
        const Prompt& prompt = prompts[uniform_index(rng, prompts.size())];
        RolloutGroup group;
        group.prompt = prompt.tokens;
        TraceRow row;
        row.step = step;
        for (std::size_t i = 0; i < config.group_size; ++i) {
            Rollout r = policy_sample(out.params, prompt.tokens, config.rollout_temperature, config.max_len, rng);
            const RewardBreakdown rb = reward_fn(r.text, prompt.text);
            row.mean_reward += rb.total / g;
            row.mean_format_reward += rb.format / g;
            row.mean_answer_reward += rb.answer / g;
            group.rewards.push_back(rb.total);
            group.logp_old.push_back(r.logp);
            group.logp_new.push_back(r.logp);
            group.logp_ref.push_back(sequence_logprobs(ref, prompt.tokens, r.tokens));
            group.outputs.push_back(std::move(r));
        }
        group.advantages = group_advantages(group.rewards, config.sigma_floor);

        const SurrogateGradient sg = surrogate_gradient(out.params, group, config);
        for (std::size_t k = 0; k < sg.grad.size(); ++k) out.params.logits[k] += config.learning_rate * sg.grad[k];

        row.kl = sg.stats.mean_kl;
        row.clip_fraction = sg.stats.clip_fraction;
        row.objective = sg.stats.objective;
        out.trace.push_back(row);
        if (on_step) on_step(row);
    }
    return out;
}

RewardBreakdown probe_reward(const ToyPolicyParams& params, std::span<const Prompt> prompts,
                             const RewardFn& reward_fn, std::size_t n_rollouts, double temperature,
                             std::size_t max_len, std::uint64_t seed) {
    if (prompts.empty() || n_rollouts == 0) throw ValidationError("probe needs prompts and rollouts");
    Rng rng(seed);
    RewardBreakdown mean;
    for (std::size_t i = 0; i < n_rollouts; ++i) {
        const Prompt& prompt = prompts[i % prompts.size()];
        const Rollout r = policy_sample(params, prompt.tokens, temperature, max_len, rng);
        const RewardBreakdown rb = reward_fn(r.text, prompt.text);
        mean.total += rb.total;
        mean.format += rb.format;
        mean.answer += rb.answer;
    }
    const auto n = static_cast<double>(n_rollouts);
    mean.total /= n;
    mean.format /= n;
    mean.answer /= n;
    return mean;
}

double max_logit_drift(const ToyPolicyParams& a, const ToyPolicyParams& b) {
    if (a.logits.size() != b.logits.size()) throw ValidationError("policies differ in shape");
    double drift = 0.0;
    for (std::size_t k = 0; k < a.logits.size(); ++k) drift = std::max(drift, std::abs(a.logits[k] - b.logits[k]));
    return drift;
}

// ---- Tag-emission task ----------------------------------------------------------------------

TagEmissionTask make_tag_emission_task(double warm_start_bias) {
    std::vector<std::string> vocab{"<bos>", "<eos>"};
    for (auto tag : coe::kTags) vocab.emplace_back(tag);
    // One content token per section (L1..L4, answer).
    const std::vector<std::string> content{"难过", "压力", "想被理解", "倾听", "抱抱你"};
    vocab.insert(vocab.end(), content.begin(), content.end());

    TagEmissionTask task;
    task.init = make_policy(vocab, 0, 1);
    auto tag = [](std::size_t i) -> Token { return 2 + i; };
    auto word = [](std::size_t i) -> Token { return 2 + coe::kTags.size() + i; };
    // <empathy_think> <L1> w0 </L1> <L2> w1 </L2> <L3> w2 </L3> <L4> w3 </L4> </empathy_think> <answer> w4 </answer>
    const std::vector<Token> canonical{0,       tag(0), tag(1), word(0), tag(2),  tag(3), word(1),
                                       tag(4),  tag(5), word(2), tag(6), tag(7),  word(3), tag(8),
                                       tag(9),  tag(10), word(4), tag(11), 1};
    for (std::size_t k = 0; k + 1 < canonical.size(); ++k) {
        task.init.row(canonical[k])[canonical[k + 1]] = warm_start_bias;
    }
    task.prompts.push_back(Prompt{{0}, ""});
    task.reward = format_only_reward();
    return task;
}

// ---- Checkpoint -------------------------------------------------------------------------------

void save_policy(const std::filesystem::path& path, const ToyPolicyParams& params, const nlohmann::json& extra) {
    validate(params);
    nlohmann::json header = extra.is_object() ? extra : nlohmann::json::object();
    header["format"] = "empathy-policy";
    header["version"] = 1;
    header["vocab"] = params.vocab;
    header["bos"] = params.bos;
    header["eos"] = params.eos;
    checkpoint::save(path, header, params.logits);
}

ToyPolicyParams load_policy(const std::filesystem::path& path) {
    auto blob = checkpoint::load(path);
    const auto& h = blob.header;
    if (h.value("format", "") != "empathy-policy") throw ValidationError(path.string() + " is not a policy checkpoint");
    ToyPolicyParams p;
    try {
        p.vocab = h.at("vocab").get<std::vector<std::string>>();
        p.bos = h.at("bos").get<Token>();
        p.eos = h.at("eos").get<Token>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("policy checkpoint header: ") + e.what());
    }
    p.logits = std::move(blob.values);
    validate(p);
    return p;
}

}  // namespace empathy::grpo

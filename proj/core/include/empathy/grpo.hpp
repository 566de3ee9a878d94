// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "empathy/random.hpp"
#include "empathy/reward_model.hpp"

namespace empathy::grpo {

struct GrpoConfig {
    /// Actor learning rate used at LLM scale. The toy policy needs a far larger
    /// step; see `learning_rate`.
    static constexpr double kLlmLearningRate = 1e-6;

    std::size_t group_size = 4;
    double clip_eps = 0.2;
    double kl_beta = 0.01;
    double learning_rate = 0.1;
    std::size_t steps = 1000;
    double rollout_temperature = 1.0;
    std::size_t max_len = 1024;
    double sigma_floor = 1e-8;
    std::uint64_t seed = 42;
};

void validate(const GrpoConfig& config);

using Token = std::size_t;
using TokenSeq = std::vector<Token>;

/// Bigram-conditioned softmax policy: row = previous token, column = next
/// token. BOS is never emitted; its column is ignored.
struct ToyPolicyParams {
    std::vector<std::string> vocab;
    Token bos = 0;
    Token eos = 1;
    std::vector<double> logits;  ///< Row-major |V| x |V|.

    [[nodiscard]] std::size_t vocab_size() const { return vocab.size(); }
    [[nodiscard]] std::span<double> row(Token prev) { return {logits.data() + prev * vocab.size(), vocab.size()}; }
    [[nodiscard]] std::span<const double> row(Token prev) const {
        return {logits.data() + prev * vocab.size(), vocab.size()};
    }
    /// Concatenates token strings, skipping BOS and EOS.
    [[nodiscard]] std::string decode(std::span<const Token> tokens) const;

    bool operator==(const ToyPolicyParams&) const = default;
};

void validate(const ToyPolicyParams& params);

/// Zero logits over `vocab` (uniform next-token distribution).
ToyPolicyParams make_policy(std::vector<std::string> vocab, Token bos, Token eos);

/// softmax(row / temperature) with the BOS entry forced to 0.
std::vector<double> next_token_probs(const ToyPolicyParams& params, Token prev, double temperature = 1.0);

/// Per-token temperature-1 log-probabilities of `tokens` continuing `prompt`.
std::vector<double> sequence_logprobs(const ToyPolicyParams& params, std::span<const Token> prompt,
                                      std::span<const Token> tokens);

struct Rollout {
    TokenSeq tokens;          ///< Generated tokens, EOS included when emitted.
    std::vector<double> logp; ///< Temperature-1 log-probabilities per token.
    std::string text;
};

/// Samples from softmax(row / temperature) until EOS or `max_len` tokens.
Rollout policy_sample(const ToyPolicyParams& params, std::span<const Token> prompt, double temperature,
                      std::size_t max_len, Rng& rng);

// ---- Objective ------------------------------------------------------------------

/// (r_i - mean) / population std; all zeros when std < sigma_floor.
/// Throws ValidationError for fewer than two rewards.
std::vector<double> group_advantages(std::span<const double> rewards, double sigma_floor = 1e-8);

/// Token mean of exp(ref - new) - (ref - new) - 1.
double kl_estimate(std::span<const double> logp_new, std::span<const double> logp_ref);

struct RolloutGroup {
    TokenSeq prompt;
    std::vector<Rollout> outputs;
    std::vector<std::vector<double>> logp_new;
    std::vector<std::vector<double>> logp_old;
    std::vector<std::vector<double>> logp_ref;
    std::vector<double> rewards;
    std::vector<double> advantages;
};

/// Throws ValidationError when the per-output arrays disagree in shape.
void validate(const RolloutGroup& group);

struct SurrogateStats {
    double objective = 0.0;
    double mean_kl = 0.0;
    double clip_fraction = 0.0;  ///< Share of outputs where the clipped branch is strictly smaller.
};

/// J = mean_i min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i) - beta mean_i KL_i,
/// rho_i = exp(sum logp_new - sum logp_old), using the group's logp_new.
SurrogateStats surrogate_objective(const RolloutGroup& group, const GrpoConfig& config);

struct SurrogateGradient {
    SurrogateStats stats;
    std::vector<double> grad;  ///< dJ/dlogits, same layout as ToyPolicyParams::logits.
};

/// Recomputes logp_new under `params` and returns J with its analytic
/// gradient. `group.logp_new` is ignored.
SurrogateGradient surrogate_gradient(const ToyPolicyParams& params, const RolloutGroup& group,
                                     const GrpoConfig& config);

// ---- Rewards ---------------------------------------------------------------------

struct RewardBreakdown {
    double total = 0.0;
    double format = 0.0;
    double answer = 0.0;
};

/// format_reward(output) + answer_reward(q, answer block). An output that
/// does not parse is scored on an empty answer, which is 0.
RewardBreakdown total_reward(std::string_view output_text, std::string_view q, const reward::EncoderParams& rm,
                             double threshold);

using RewardFn = std::function<RewardBreakdown(std::string_view output, std::string_view prompt)>;

/// Format reward only.
RewardFn format_only_reward();

/// Composite reward backed by a trained encoder.
RewardFn composite_reward(reward::EncoderParams rm, double threshold);

// ---- Training ----------------------------------------------------------------------

struct Prompt {
    TokenSeq tokens;
    std::string text;
};

struct TraceRow {
    std::size_t step = 0;
    double mean_reward = 0.0;
    double mean_format_reward = 0.0;
    double mean_answer_reward = 0.0;
    double kl = 0.0;
    double clip_fraction = 0.0;
    double objective = 0.0;
};

nlohmann::json to_json(const TraceRow& row);

struct TrainOutput {
    ToyPolicyParams params;
    std::vector<TraceRow> trace;
};

/// One update per step: roll out G outputs from the current policy, score
/// them, normalize advantages, ascend dJ/dlogits. The reference policy is
/// `init`, frozen. `on_step` sees every trace row as it is produced.
TrainOutput grpo_train(const ToyPolicyParams& init, std::span<const Prompt> prompts, const RewardFn& reward_fn,
                       const GrpoConfig& config, const std::function<void(const TraceRow&)>& on_step = {});

/// Mean rewards over `n_rollouts` independent samples, cycling through
/// prompts. Uses its own generator seeded with `seed`.
RewardBreakdown probe_reward(const ToyPolicyParams& params, std::span<const Prompt> prompts,
                             const RewardFn& reward_fn, std::size_t n_rollouts, double temperature,
                             std::size_t max_len, std::uint64_t seed);

/// Seed of the evaluation probe belonging to a training run, kept apart from
/// the training stream so probing never perturbs training.
inline std::uint64_t probe_seed(std::uint64_t train_seed) {
    return splitmix64(train_seed ^ 0x70726f6265ULL);
}

/// max |a - b| over all logits.
double max_logit_drift(const ToyPolicyParams& a, const ToyPolicyParams& b);

// ---- Tag-emission task -------------------------------------------------------------

/// Vocabulary: BOS, EOS, the twelve CoE tags, and one content token per
/// section. The initial policy is a weak warm start: every transition of the
/// canonical tag sequence gets `warm_start_bias` over zero, standing in for a
/// structurally-primed SFT policy whose format reward is still rare.
struct TagEmissionTask {
    ToyPolicyParams init;
    std::vector<Prompt> prompts;
    RewardFn reward;
};

inline constexpr double kDefaultWarmStartBias = 4.35;

TagEmissionTask make_tag_emission_task(double warm_start_bias = kDefaultWarmStartBias);

// ---- Checkpoint ------------------------------------------------------------------------

void save_policy(const std::filesystem::path& path, const ToyPolicyParams& params,
                 const nlohmann::json& extra = nlohmann::json::object());
ToyPolicyParams load_policy(const std::filesystem::path& path);

}  // namespace empathy::grpo

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "empathy/corpus.hpp"
#include "empathy/random.hpp"

namespace empathy::reward {

// ---- Encoder ----------------------------------------------------------------

/// Hashed character n-gram bag -> trainable linear embedding -> L2 norm.
///
/// Text is tokenized with text::tokenize (one token per CJK scalar, ASCII
/// alphanumeric runs folded), n-grams of each configured order are hashed
/// into `hash_dim` buckets, and the bucket counts select rows of `weights`.
struct EncoderParams {
    std::size_t hash_dim = std::size_t{1} << 15;
    std::size_t embed_dim = 64;
    std::vector<int> ngram_orders{1, 2};
    std::uint64_t seed = 42;
    std::vector<double> weights;  ///< Row-major hash_dim x embed_dim.

    [[nodiscard]] std::span<double> row(std::size_t bucket) {
        return {weights.data() + bucket * embed_dim, embed_dim};
    }
    [[nodiscard]] std::span<const double> row(std::size_t bucket) const {
        return {weights.data() + bucket * embed_dim, embed_dim};
    }

    bool operator==(const EncoderParams&) const = default;
};

/// Gaussian init with per-entry standard deviation 1/sqrt(embed_dim).
EncoderParams init_encoder(std::size_t hash_dim, std::size_t embed_dim, std::vector<int> ngram_orders,
                           std::uint64_t seed);

/// Throws ValidationError when dims are zero, orders are empty or
/// non-positive, or the weight matrix has the wrong size / non-finite entries.
void validate(const EncoderParams& params);

/// Sorted (bucket, count) pairs with distinct buckets.
using SparseFeatures = std::vector<std::pair<std::size_t, double>>;

SparseFeatures featurize(std::string_view text, const EncoderParams& params);

/// Unit-norm embedding. Throws ValidationError("unencodable text") when the
/// text has no tokens or its raw embedding is the zero vector.
std::vector<double> encode(std::string_view text, const EncoderParams& params);

double cosine(std::span<const double> a, std::span<const double> b);

/// cos(E(q), E(a)), or nullopt when either side is unencodable.
std::optional<double> similarity(std::string_view q, std::string_view a, const EncoderParams& params);

// ---- Triplets and loss --------------------------------------------------------

enum class NegativeKind { mismatched_emotion, generic_frequent, in_batch };
std::string_view to_string(NegativeKind kind);

struct Triplet {
    std::string q;
    std::string a_pos;
    std::string a_neg;
    NegativeKind neg_kind = NegativeKind::in_batch;
};

/// max(0, cos(q, a-) - cos(q, a+) + margin).
double triplet_loss(std::string_view q, std::string_view a_pos, std::string_view a_neg,
                    const EncoderParams& params, double margin);

/// Sparse gradient: bucket -> d(loss)/d(weights row).
using RowGradient = std::unordered_map<std::size_t, std::vector<double>>;

/// Mean triplet loss over `triplets` and its gradient w.r.t. the weights.
/// The hinge subgradient at exactly zero is taken as 0.
double mean_triplet_loss(std::span<const Triplet> triplets, const EncoderParams& params, double margin,
                         RowGradient* grad);

// ---- Negative sampling ----------------------------------------------------------

/// Sentence frequencies over all corpus answers. Sentences are split on
/// 。！？ and newlines, trimmed, and counted by exact string.
class SentenceTable {
public:
    explicit SentenceTable(const std::vector<corpus::QARecord>& corpus);

    /// Most frequent first; ties broken by string order.
    [[nodiscard]] std::vector<std::pair<std::string, std::size_t>> top(std::size_t k) const;

private:
    std::vector<std::pair<std::string, std::size_t>> ranked_;
};

std::vector<std::string> split_sentences(std::string_view text);

struct NegativeConfig {
    std::size_t generic_top_k = 20;
    std::size_t generic_sentences = 3;  ///< Sentences per pseudo-answer; always includes the top one.
};

struct NegativeSet {
    std::vector<Triplet> triplets;
    std::vector<std::string> warnings;
};

/// One triplet per strategy where available: (1) an answer from a record with
/// a different topic label, (2) a pseudo-answer assembled from frequent
/// sentences, (3) an answer from another record of the batch.
NegativeSet sample_negatives(const corpus::QARecord& record, const std::vector<corpus::QARecord>& corpus,
                             std::span<const corpus::QARecord> batch, Rng& rng, const SentenceTable& table,
                             const NegativeConfig& config = {});

NegativeSet sample_negatives(const corpus::QARecord& record, const std::vector<corpus::QARecord>& corpus,
                             std::span<const corpus::QARecord> batch, std::uint64_t seed,
                             const NegativeConfig& config = {});

// ---- Training ---------------------------------------------------------------------

struct RewardConfig {
    double margin = 0.2;
    double threshold = 0.5;
    double learning_rate = 2.0;
    std::size_t batch_size = 16;
    std::size_t epochs = 10;
    std::uint64_t seed = 42;
    std::size_t hash_dim = std::size_t{1} << 15;
    std::size_t embed_dim = 64;
    std::vector<int> ngram_orders{1, 2};
    NegativeConfig negatives;
};

void validate(const RewardConfig& config);

struct TrainingLog {
    std::vector<double> epoch_loss;  ///< Mean triplet loss per epoch.
    std::vector<std::string> warnings;
};

struct TrainResult {
    EncoderParams params;
    TrainingLog log;
};

/// Minibatch gradient descent over a fixed triplet set, starting at `init`.
TrainResult train_on_triplets(std::span<const Triplet> triplets, EncoderParams init, const RewardConfig& config);

/// Samples fresh negatives for every minibatch of records each epoch and
/// descends the mean triplet loss. Zero epochs returns the initialization.
TrainResult train_reward_model(const std::vector<corpus::QARecord>& corpus, const RewardConfig& config);

// ---- Reward and threshold ------------------------------------------------------------

/// 1 iff cos(E(q), E(a)) > threshold; 0 otherwise, including unencodable text.
int answer_reward(std::string_view q, std::string_view a, const EncoderParams& params, double threshold);

struct LabeledPair {
    std::string q;
    std::string a;
    bool positive = false;
};

struct Calibration {
    double threshold = 0.5;
    double balanced_accuracy = 0.0;
    std::vector<std::string> warnings;
};

struct ScoredExample {
    double score = 0.0;
    bool positive = false;
};

/// Threshold maximizing balanced accuracy of `score > T` over candidate
/// midpoints between distinct scores (plus -1 and 1); ties go to the smaller T.
/// Throws ValidationError unless both labels are present.
Calibration calibrate_threshold(std::span<const ScoredExample> examples);
Calibration calibrate_threshold(std::span<const LabeledPair> validation, const EncoderParams& params);

/// One positive (own answer) and one negative pair per answered record. The
/// negative answer comes from a record with a different topic when one
/// exists, otherwise from any other record.
std::vector<LabeledPair> make_labeled_pairs(const std::vector<corpus::QARecord>& records, std::uint64_t seed);

/// Mean similarity over positive pairs minus mean over negative pairs.
/// Unencodable pairs count as -1.
double separation_gap(std::span<const LabeledPair> pairs, const EncoderParams& params);

// ---- Checkpoint -----------------------------------------------------------------------

/// Header line (dims, orders, seed, plus `extra` keys) followed by the
/// weights as little-endian doubles.
void save_encoder(const std::filesystem::path& path, const EncoderParams& params,
                  const nlohmann::json& extra = nlohmann::json::object());

struct LoadedEncoder {
    EncoderParams params;
    nlohmann::json header;
};
LoadedEncoder load_encoder(const std::filesystem::path& path);

}  // namespace empathy::reward

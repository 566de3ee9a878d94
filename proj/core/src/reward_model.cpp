// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#include "empathy/reward_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "empathy/checkpoint.hpp"
#include "empathy/error.hpp"
#include "empathy/text.hpp"

namespace empathy::reward {

namespace {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Raw (unnormalized) embedding with its features.
struct Encoded {
    SparseFeatures features;
    std::vector<double> z;
    double norm = 0.0;
    std::vector<double> unit;
};

Encoded encode_full(std::string_view text, const EncoderParams& params) {
    Encoded e;
    e.features = featurize(text, params);
    if (e.features.empty()) throw ValidationError("unencodable text");
    e.z.assign(params.embed_dim, 0.0);
    for (const auto& [bucket, count] : e.features) {
        const auto row = params.row(bucket);
        for (std::size_t k = 0; k < params.embed_dim; ++k) e.z[k] += count * row[k];
    }
    double sq = 0.0;
    for (double v : e.z) sq += v * v;
    e.norm = std::sqrt(sq);
    if (!(e.norm > 0.0) || !std::isfinite(e.norm)) throw ValidationError("unencodable text");
    e.unit.resize(params.embed_dim);
    for (std::size_t k = 0; k < params.embed_dim; ++k) e.unit[k] = e.z[k] / e.norm;
    return e;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

// d cos(a, b) / d z_a = (u_b - c u_a) / |z_a|, scaled by `weight` and pushed
// through z_a = sum_h x_h W[h].
void accumulate(RowGradient& grad, const Encoded& a, const Encoded& b, double c, double weight,
                std::size_t dim) {
    std::vector<double> dz(dim);
    for (std::size_t k = 0; k < dim; ++k) dz[k] = weight * (b.unit[k] - c * a.unit[k]) / a.norm;
    for (const auto& [bucket, count] : a.features) {
        auto& row = grad[bucket];
        if (row.empty()) row.assign(dim, 0.0);
        for (std::size_t k = 0; k < dim; ++k) row[k] += count * dz[k];
    }
}

void check_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
}

}  // namespace

// ---- Encoder ------------------------------------------------------------------

EncoderParams init_encoder(std::size_t hash_dim, std::size_t embed_dim, std::vector<int> ngram_orders,
                           std::uint64_t seed) {
    EncoderParams p;
    p.hash_dim = hash_dim;
    p.embed_dim = embed_dim;
    p.ngram_orders = std::move(ngram_orders);
    p.seed = seed;
    if (hash_dim == 0 || embed_dim == 0) throw ValidationError("encoder dimensions must be >= 1");
    p.weights.resize(hash_dim * embed_dim);
    Rng rng(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(embed_dim));
    for (double& w : p.weights) w = scale * standard_normal(rng);
    validate(p);
    return p;
}

void validate(const EncoderParams& p) {
    if (p.hash_dim == 0 || p.embed_dim == 0) throw ValidationError("encoder dimensions must be >= 1");
    if (p.ngram_orders.empty()) throw ValidationError("encoder needs at least one n-gram order");
    for (int n : p.ngram_orders) {
        if (n < 1) throw ValidationError("n-gram orders must be >= 1");
    }
    if (p.weights.size() != p.hash_dim * p.embed_dim) {
        throw ValidationError("weight matrix size does not match hash_dim x embed_dim");
    }
    for (double w : p.weights) {
        if (!std::isfinite(w)) throw ValidationError("encoder weights must be finite");
    }
}

SparseFeatures featurize(std::string_view text, const EncoderParams& params) {
    const auto tokens = text::tokenize(text);
    std::map<std::size_t, double> counts;
    std::string gram;
    for (int order : params.ngram_orders) {
        const auto n = static_cast<std::size_t>(order);
        if (tokens.size() < n) continue;
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            gram.clear();
            gram.push_back(static_cast<char>(order));
            for (std::size_t k = 0; k < n; ++k) {
                gram.push_back('\x1f');
                gram += tokens[i + k];
            }
            counts[fnv1a(gram) % params.hash_dim] += 1.0;
        }
    }
    return {counts.begin(), counts.end()};
}

std::vector<double> encode(std::string_view text, const EncoderParams& params) {
    return encode_full(text, params).unit;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    const double na = std::sqrt(dot(a, a));
    const double nb = std::sqrt(dot(b, b));
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

std::optional<double> similarity(std::string_view q, std::string_view a, const EncoderParams& params) {
    try {
        const auto eq = encode(q, params);
        const auto ea = encode(a, params);
        return cosine(eq, ea);
    } catch (const ValidationError&) {
        return std::nullopt;
    }
}

// ---- Loss -------------------------------------------------------------------------

std::string_view to_string(NegativeKind kind) {
    switch (kind) {
        case NegativeKind::mismatched_emotion: return "mismatched_emotion";
        case NegativeKind::generic_frequent: return "generic_frequent";
        case NegativeKind::in_batch: return "in_batch";
    }
    return "unknown";
}

double triplet_loss(std::string_view q, std::string_view a_pos, std::string_view a_neg,
                    const EncoderParams& params, double margin) {
    const auto eq = encode(q, params);
    const auto ep = encode(a_pos, params);
    const auto en = encode(a_neg, params);
    return std::max(0.0, dot(eq, en) - dot(eq, ep) + margin);
}

double mean_triplet_loss(std::span<const Triplet> triplets, const EncoderParams& params, double margin,
                         RowGradient* grad) {
    if (triplets.empty()) return 0.0;
    const double weight = 1.0 / static_cast<double>(triplets.size());
    double total = 0.0;
    for (const auto& t : triplets) {
        const Encoded q = encode_full(t.q, params);
        const Encoded p = encode_full(t.a_pos, params);
        const Encoded n = encode_full(t.a_neg, params);
        const double cp = dot(q.unit, p.unit);
        const double cn = dot(q.unit, n.unit);
        const double inner = cn - cp + margin;
        if (inner <= 0.0) continue;
        total += inner;
        if (grad == nullptr) continue;
        // L = cos(q, n) - cos(q, p) + m
        accumulate(*grad, q, n, cn, weight, params.embed_dim);
        accumulate(*grad, n, q, cn, weight, params.embed_dim);
        accumulate(*grad, q, p, cp, -weight, params.embed_dim);
        accumulate(*grad, p, q, cp, -weight, params.embed_dim);
    }
    return total * weight;
}

// ---- Negative sampling ---------------------------------------------------------------

std::vector<std::string> split_sentences(std::string_view input) {
    std::vector<std::string> out;
    const std::u32string scalars = text::decode(text::nfc(input));
    std::u32string cur;
    auto flush = [&] {
        std::string s = text::encode(cur);
        cur.clear();
        auto t = text::trim(s);
        if (!t.empty()) out.emplace_back(t);
    };
    for (char32_t cp : scalars) {
        if (cp == U'。' || cp == U'！' || cp == U'？' || cp == U'\n') {
            flush();
        } else {
            cur.push_back(cp);
        }
    }
    flush();
    return out;
}

SentenceTable::SentenceTable(const std::vector<corpus::QARecord>& corpus) {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : corpus) {
        for (const auto& a : r.answers) {
            for (auto& s : split_sentences(a.text)) ++counts[std::move(s)];
        }
    }
    ranked_.assign(counts.begin(), counts.end());
    std::stable_sort(ranked_.begin(), ranked_.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
}

std::vector<std::pair<std::string, std::size_t>> SentenceTable::top(std::size_t k) const {
    k = std::min(k, ranked_.size());
    return {ranked_.begin(), ranked_.begin() + static_cast<std::ptrdiff_t>(k)};
}

namespace {

const std::string& pick_answer(const corpus::QARecord& r, Rng& rng) {
    return r.answers[uniform_index(rng, r.answers.size())].text;
}

}  // namespace

NegativeSet sample_negatives(const corpus::QARecord& record, const std::vector<corpus::QARecord>& corpus,
                             std::span<const corpus::QARecord> batch, Rng& rng, const SentenceTable& table,
                             const NegativeConfig& config) {
    NegativeSet out;
    if (record.answers.empty()) {
        out.warnings.push_back("record '" + record.id + "' has no answers; no triplets");
        return out;
    }
    const std::string q = record.question_text();
    const std::string& pos = pick_answer(record, rng);
    auto emit = [&](std::string neg, NegativeKind kind) {
        if (neg == pos || text::is_blank(neg)) return;
        out.triplets.push_back({q, pos, std::move(neg), kind});
    };

    // (1) Mismatched emotion, approximated by a different topic label.
    std::vector<const corpus::QARecord*> other_topic;
    for (const auto& r : corpus) {
        if (r.topic != record.topic && !r.answers.empty()) other_topic.push_back(&r);
    }
    if (other_topic.empty()) {
        out.warnings.push_back("corpus has a single topic; mismatched-emotion negative skipped for '" +
                               record.id + "'");
    } else {
        emit(pick_answer(*other_topic[uniform_index(rng, other_topic.size())], rng),
             NegativeKind::mismatched_emotion);
    }

    // (2) Generic pseudo-answer from the most frequent sentences.
    const auto top = table.top(config.generic_top_k);
    if (!top.empty() && config.generic_sentences > 0) {
        std::vector<std::size_t> picks{0};
        std::vector<std::size_t> rest(top.size() - 1);
        std::iota(rest.begin(), rest.end(), std::size_t{1});
        shuffle(std::span(rest), rng);
        for (std::size_t i = 0; i < rest.size() && picks.size() < config.generic_sentences; ++i) {
            picks.push_back(rest[i]);
        }
        std::sort(picks.begin(), picks.end());
        std::string generic;
        for (std::size_t i : picks) {
            generic += top[i].first;
            generic += "。";
        }
        emit(std::move(generic), NegativeKind::generic_frequent);
    }

    // (3) Another record of the same batch.
    std::vector<const corpus::QARecord*> others;
    for (const auto& r : batch) {
        if (r.id != record.id && !r.answers.empty()) others.push_back(&r);
    }
    if (!others.empty()) {
        emit(pick_answer(*others[uniform_index(rng, others.size())], rng), NegativeKind::in_batch);
    }
    return out;
}

NegativeSet sample_negatives(const corpus::QARecord& record, const std::vector<corpus::QARecord>& corpus,
                             std::span<const corpus::QARecord> batch, std::uint64_t seed,
                             const NegativeConfig& config) {
    Rng rng(seed);
    const SentenceTable table(corpus);
    return sample_negatives(record, corpus, batch, rng, table, config);
}

// ---- Training ---------------------------------------------------------------------------

void validate(const RewardConfig& c) {
    if (!(c.margin >= 0.0) || !std::isfinite(c.margin)) throw ValidationError("margin must be >= 0");
    if (!(c.threshold >= -1.0 && c.threshold <= 1.0)) throw ValidationError("threshold must lie in [-1, 1]");
    if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) {
        throw ValidationError("learning rate must be > 0");
    }
    if (c.batch_size < 2) throw ValidationError("batch size must be >= 2");
    if (c.hash_dim == 0 || c.embed_dim == 0) throw ValidationError("encoder dimensions must be >= 1");
    if (c.ngram_orders.empty()) throw ValidationError("encoder needs at least one n-gram order");
}

namespace {

void apply_step(EncoderParams& params, const RowGradient& grad, double lr) {
    for (const auto& [bucket, g] : grad) {
        auto row = params.row(bucket);
        for (std::size_t k = 0; k < row.size(); ++k) {
            check_finite(g[k], "gradient in reward model training");
            row[k] -= lr * g[k];
        }
    }
}

}  // namespace

TrainResult train_on_triplets(std::span<const Triplet> triplets, EncoderParams init, const RewardConfig& config) {
    validate(config);
    validate(init);
    TrainResult result{std::move(init), {}};
    if (triplets.empty()) {
        result.log.warnings.emplace_back("no triplets; parameters unchanged");
        return result;
    }
    Rng rng(splitmix64(config.seed));
    std::vector<std::size_t> order(triplets.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<Triplet> batch;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle(std::span(order), rng);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(triplets[order[i]]);
            RowGradient grad;
            const double loss = mean_triplet_loss(batch, result.params, config.margin, &grad);
            check_finite(loss, "triplet loss");
            loss_sum += loss * static_cast<double>(batch.size());
            apply_step(result.params, grad, config.learning_rate);
        }
        result.log.epoch_loss.push_back(loss_sum / static_cast<double>(triplets.size()));
    }
    return result;
}

TrainResult train_reward_model(const std::vector<corpus::QARecord>& corpus, const RewardConfig& config) {
    validate(config);
    TrainResult result{init_encoder(config.hash_dim, config.embed_dim, config.ngram_orders, config.seed), {}};
    if (config.epochs == 0) return result;

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!corpus[i].answers.empty()) order.push_back(i);
    }
    if (order.empty()) throw ValidationError("reward model training needs at least one answered record");

    const SentenceTable table(corpus);
    Rng rng(splitmix64(config.seed ^ 0x7265776172645f6dULL));
    std::set<std::string> warned;
    std::vector<corpus::QARecord> batch;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle(std::span(order), rng);
        double loss_sum = 0.0;
        std::size_t count = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(corpus[order[i]]);
            std::vector<Triplet> triplets;
            for (const auto& r : batch) {
                auto neg = sample_negatives(r, corpus, batch, rng, table, config.negatives);
                for (auto& w : neg.warnings) {
                    // Per-record warnings repeat every epoch; keep the first of each kind.
                    const std::string key = w.substr(0, w.find('\''));
                    if (warned.insert(key).second) result.log.warnings.push_back(std::move(w));
                }
                for (auto& t : neg.triplets) triplets.push_back(std::move(t));
            }
            if (triplets.empty()) continue;
            RowGradient grad;
            const double loss = mean_triplet_loss(triplets, result.params, config.margin, &grad);
            check_finite(loss, "triplet loss");
            loss_sum += loss * static_cast<double>(triplets.size());
            count += triplets.size();
            apply_step(result.params, grad, config.learning_rate);
        }
        result.log.epoch_loss.push_back(count > 0 ? loss_sum / static_cast<double>(count) : 0.0);
    }
    return result;
}

// ---- Reward and threshold -----------------------------------------------------------------

int answer_reward(std::string_view q, std::string_view a, const EncoderParams& params, double threshold) {
    const auto c = similarity(q, a, params);
    return c && *c > threshold ? 1 : 0;
}

Calibration calibrate_threshold(std::span<const ScoredExample> examples) {
    std::size_t n_pos = 0;
    for (const auto& e : examples) n_pos += e.positive ? 1 : 0;
    const std::size_t n_neg = examples.size() - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw ValidationError("threshold calibration needs both positive and negative examples");
    }

    std::vector<double> distinct;
    distinct.reserve(examples.size());
    for (const auto& e : examples) distinct.push_back(e.score);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> candidates{-1.0};
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
        candidates.push_back(0.5 * (distinct[i] + distinct[i + 1]));
    }
    candidates.push_back(1.0);
    std::sort(candidates.begin(), candidates.end());

    Calibration best;
    best.balanced_accuracy = -1.0;
    for (double t : candidates) {
        std::size_t tp = 0;
        std::size_t tn = 0;
        for (const auto& e : examples) {
            const bool predicted = e.score > t;
            if (e.positive && predicted) ++tp;
            if (!e.positive && !predicted) ++tn;
        }
        const double ba = 0.5 * (static_cast<double>(tp) / static_cast<double>(n_pos) +
                                 static_cast<double>(tn) / static_cast<double>(n_neg));
        if (ba > best.balanced_accuracy) {
            best.balanced_accuracy = ba;
            best.threshold = t;
        }
    }
    if (best.balanced_accuracy <= 0.5) {
        best.warnings.push_back("calibrated balanced accuracy " + std::to_string(best.balanced_accuracy) +
                                " is no better than chance");
    }
    return best;
}

Calibration calibrate_threshold(std::span<const LabeledPair> validation, const EncoderParams& params) {
    std::vector<ScoredExample> examples;
    examples.reserve(validation.size());
    for (const auto& v : validation) {
        // Unencodable answers can never clear any threshold.
        examples.push_back({similarity(v.q, v.a, params).value_or(-1.0), v.positive});
    }
    return calibrate_threshold(examples);
}

std::vector<LabeledPair> make_labeled_pairs(const std::vector<corpus::QARecord>& records, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<LabeledPair> pairs;
    for (const auto& r : records) {
        if (r.answers.empty()) continue;
        std::vector<const corpus::QARecord*> other_topic;
        std::vector<const corpus::QARecord*> others;
        for (const auto& o : records) {
            if (o.id == r.id || o.answers.empty()) continue;
            others.push_back(&o);
            if (o.topic != r.topic) other_topic.push_back(&o);
        }
        const auto& pool = other_topic.empty() ? others : other_topic;
        if (pool.empty()) continue;
        const std::string q = r.question_text();
        pairs.push_back({q, pick_answer(r, rng), true});
        pairs.push_back({q, pick_answer(*pool[uniform_index(rng, pool.size())], rng), false});
    }
    return pairs;
}

double separation_gap(std::span<const LabeledPair> pairs, const EncoderParams& params) {
    double pos = 0.0;
    double neg = 0.0;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    for (const auto& p : pairs) {
        const double s = similarity(p.q, p.a, params).value_or(-1.0);
        if (p.positive) {
            pos += s;
            ++n_pos;
        } else {
            neg += s;
            ++n_neg;
        }
    }
    if (n_pos == 0 || n_neg == 0) throw ValidationError("separation gap needs both positive and negative pairs");
    return pos / static_cast<double>(n_pos) - neg / static_cast<double>(n_neg);
}

// ---- Checkpoint ------------------------------------------------------------------------------

void save_encoder(const std::filesystem::path& path, const EncoderParams& params, const nlohmann::json& extra) {
    validate(params);
    nlohmann::json header = extra.is_object() ? extra : nlohmann::json::object();
    header["format"] = "empathy-encoder";
    header["version"] = 1;
    header["hash_dim"] = params.hash_dim;
    header["embed_dim"] = params.embed_dim;
    header["ngram_orders"] = params.ngram_orders;
    header["seed"] = params.seed;
    checkpoint::save(path, header, params.weights);
}

LoadedEncoder load_encoder(const std::filesystem::path& path) {
    auto blob = checkpoint::load(path);
    const auto& h = blob.header;
    if (h.value("format", "") != "empathy-encoder") throw ValidationError(path.string() + " is not an encoder checkpoint");
    LoadedEncoder out;
    try {
        out.params.hash_dim = h.at("hash_dim").get<std::size_t>();
        out.params.embed_dim = h.at("embed_dim").get<std::size_t>();
        out.params.ngram_orders = h.at("ngram_orders").get<std::vector<int>>();
        out.params.seed = h.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("encoder checkpoint header: ") + e.what());
    }
    out.params.weights = std::move(blob.values);
    validate(out.params);
    out.header = std::move(blob.header);
    return out;
}

}  // namespace empathy::reward

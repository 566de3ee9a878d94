// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace empathy::preference {

// ---- Tasks ----------------------------------------------------------------------

/// One sample to be ranked: the question plus one response per model.
struct EvalSample {
    std::string sample_id;
    std::string question;
    std::map<std::string, std::string> outputs;  ///< model name -> response text
};

struct Candidate {
    std::string slot;  ///< "A", "B", ...
    std::string text;
};

/// What an annotator sees. Model identities are not part of the payload.
struct RankingTask {
    std::string task_id;
    std::string sample_id;
    std::string question_text;
    std::vector<Candidate> candidates;
    std::uint64_t permutation_seed = 0;
};

/// Server-side de-anonymization: slot i -> model name.
struct SlotMap {
    std::string task_id;
    std::vector<std::string> models;  ///< models[i] sits in slot_label(i)
};

struct Assignment {
    std::vector<RankingTask> tasks;
    std::vector<SlotMap> slot_maps;
};

std::string slot_label(std::size_t index);  ///< 0 -> "A", 25 -> "Z", 26 -> "AA"

/// One task per sample with a seeded random presentation order. Throws
/// ValidationError when a sample lacks an output for one of `models`, has
/// outputs for unknown models, or sample ids repeat.
Assignment make_assignment(std::span<const EvalSample> samples, std::span<const std::string> models,
                           std::uint64_t seed);

nlohmann::json to_json(const RankingTask& task);
RankingTask task_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SlotMap& map);
SlotMap slot_map_from_json(const nlohmann::json& j);
EvalSample sample_from_json(const nlohmann::json& j);

std::vector<RankingTask> load_tasks(const std::filesystem::path& path);
std::vector<SlotMap> load_slot_maps(const std::filesystem::path& path);
void save_assignment(const Assignment& assignment, const std::filesystem::path& tasks_path,
                     const std::filesystem::path& slot_map_path);

// ---- Rankings ---------------------------------------------------------------------

struct RankingRecord {
    std::string task_id;
    std::string annotator_id;
    std::vector<std::string> ordering;  ///< Slot labels, best first.
    std::string submitted_at;           ///< ISO-8601 UTC.
};

nlohmann::json to_json(const RankingRecord& record);
RankingRecord ranking_from_json(const nlohmann::json& j);

enum class SubmitStatus { accepted, unknown_task, malformed, duplicate };

struct SubmitResult {
    SubmitStatus status = SubmitStatus::accepted;
    std::string message;
    [[nodiscard]] bool ok() const { return status == SubmitStatus::accepted; }
};

/// Checks that `ordering` is a complete permutation of `n_slots` labels.
std::optional<std::string> check_permutation(std::span<const std::string> ordering, std::size_t n_slots);

/// Append-only JSON-lines log of rankings with an in-memory index.
///
/// Appends are serialized through one writer and flushed to disk before they
/// are acknowledged. Readers take an immutable snapshot and never block the
/// writer for longer than a pointer copy.
class RankingStore {
public:
    /// `log_path` may be empty for a memory-only store. An existing log is
    /// replayed; a torn final line (crash mid-append) is truncated away.
    RankingStore(std::vector<RankingTask> tasks, std::filesystem::path log_path = {});

    SubmitResult record(RankingRecord record);

    using Snapshot = std::shared_ptr<const std::vector<RankingRecord>>;
    [[nodiscard]] Snapshot snapshot() const;
    [[nodiscard]] std::size_t size() const { return snapshot()->size(); }

    [[nodiscard]] const std::vector<RankingTask>& tasks() const { return tasks_; }
    [[nodiscard]] const RankingTask* find_task(const std::string& task_id) const;

    /// First task (in file order) this annotator has not ranked yet.
    [[nodiscard]] const RankingTask* next_task(const std::string& annotator_id) const;
    [[nodiscard]] std::size_t completed_by(const std::string& annotator_id) const;

    /// Lines of the log that failed to parse during replay.
    [[nodiscard]] std::size_t skipped_on_replay() const { return skipped_; }

private:
    std::vector<RankingTask> tasks_;
    std::map<std::string, std::size_t> task_index_;
    std::filesystem::path log_path_;

    mutable std::mutex snapshot_mutex_;
    Snapshot records_;
    std::set<std::pair<std::string, std::string>> done_;  ///< (task, annotator); guarded by write_mutex_
    std::mutex write_mutex_;
    std::size_t skipped_ = 0;
};

/// Reads a rankings log without validating it against tasks.
std::vector<RankingRecord> load_rankings(const std::filesystem::path& path);

// ---- Aggregation ------------------------------------------------------------------

struct ModelReport {
    std::map<int, double> win_at;          ///< K -> percentage of rankings with the model in the top K
    std::map<int, std::size_t> top_count;  ///< K -> number of such rankings
    double mean_rank = 0.0;
    std::size_t rank_sum = 0;
    std::size_t n_rankings = 0;
};

struct AggregateReport {
    std::map<std::string, ModelReport> models;
    std::vector<int> k_values;
    std::size_t n_rankings = 0;
    std::size_t n_models = 0;
};

/// De-anonymizes each ranking through its task's slot map and accumulates
/// Win@K and mean rank. Throws ValidationError for a ranking whose task has
/// no slot map or whose ordering is not a complete permutation.
AggregateReport aggregate(std::span<const RankingRecord> records, std::span<const SlotMap> slot_maps,
                          std::span<const int> k_values = std::array<int, 2>{1, 2});

/// Full precision under "models", 2-decimal display values under "display".
nlohmann::json to_json(const AggregateReport& report);

/// One model's summary row, computed or taken from an external table.
struct RankSummary {
    std::string model;
    std::map<int, double> win_at;
    double mean_rank = 0.0;
};

std::vector<RankSummary> summarize(const AggregateReport& report);

struct InvariantCheck {
    bool ok = true;
    std::vector<std::string> violations;
};

/// Protocol invariants for complete rankings over `n_models` models:
/// sum Win@K = 100 K, sum MR = n(n+1)/2, Win@K nondecreasing in K, and
/// MR in [1, n]. Each sum may deviate by at most `slack`.
InvariantCheck check_rank_invariants(std::span<const RankSummary> rows, std::size_t n_models, double slack);

}  // namespace empathy::preference

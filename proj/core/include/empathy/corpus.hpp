// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "empathy/coe_format.hpp"

namespace empathy::corpus {

struct AnswerRecord {
    std::string text;
    std::size_t char_count = 0;  ///< Unicode scalars after NFC.

    static AnswerRecord from_text(std::string text);
    bool operator==(const AnswerRecord&) const = default;
};

/// One help-seeker question with its topic labels and human answers.
struct QARecord {
    std::string id;
    std::string title;
    std::string description;
    std::string topic;
    std::vector<std::string> subtopics;
    std::vector<AnswerRecord> answers;

    /// Title and description joined the way the question is presented to
    /// models and to the reward encoder.
    [[nodiscard]] std::string question_text() const;

    bool operator==(const QARecord&) const = default;
};

struct CorpusStats {
    std::size_t n_questions = 0;
    std::size_t n_answers = 0;
    std::size_t n_main_topics = 0;
    std::size_t n_subtopics = 0;
    double avg_chars_title = 0.0;
    double avg_chars_description = 0.0;
    double avg_chars_answer = 0.0;
    double avg_responses_per_question = 0.0;
};

struct Diagnostic {
    std::size_t line = 0;  ///< 1-based.
    std::string message;
};

struct ParsedCorpus {
    std::vector<QARecord> records;
    std::vector<Diagnostic> diagnostics;
};

/// Reads one JSON object per line. Malformed lines are skipped and reported;
/// blank lines are ignored. Duplicate ids are reported and the later line is
/// dropped.
ParsedCorpus parse_corpus(std::istream& in);
ParsedCorpus load_corpus(const std::filesystem::path& path);

nlohmann::json to_json(const QARecord& record);
QARecord record_from_json(const nlohmann::json& j);  ///< Throws ValidationError.

void write_corpus(std::ostream& out, const std::vector<QARecord>& records);
void save_corpus(const std::filesystem::path& path, const std::vector<QARecord>& records);

inline constexpr std::size_t kDefaultMinChars = 100;

/// Keeps answers strictly longer than `min_chars`; drops records left with
/// no answers. Order is preserved.
std::vector<QARecord> filter_corpus(const std::vector<QARecord>& records,
                                    std::size_t min_chars = kDefaultMinChars);

/// Throws ValidationError("empty corpus") on empty input.
CorpusStats compute_stats(const std::vector<QARecord>& records);
nlohmann::json to_json(const CorpusStats& stats);

// ---- Anonymization ---------------------------------------------------------

/// Pattern classes scrubbed by anonymize(). Each class is replaced by a fixed
/// placeholder; the placeholders themselves never match any class, which makes
/// the scrub idempotent.
struct AnonymizerConfig {
    bool urls = true;       ///< http(s)://... and www.... -> ⟨URL⟩
    bool emails = true;     ///< local@domain.tld -> ⟨EMAIL⟩
    bool handles = true;    ///< @name -> ⟨HANDLE⟩
    bool digit_runs = true; ///< >= min_digit_run ASCII digits -> ⟨NUM⟩
    std::size_t min_digit_run = 5;
};

inline constexpr std::string_view kUrlPlaceholder = "⟨URL⟩";
inline constexpr std::string_view kEmailPlaceholder = "⟨EMAIL⟩";
inline constexpr std::string_view kHandlePlaceholder = "⟨HANDLE⟩";
inline constexpr std::string_view kNumPlaceholder = "⟨NUM⟩";

std::string anonymize(std::string_view text, const AnonymizerConfig& config = {});
QARecord anonymize(const QARecord& record, const AnonymizerConfig& config = {});

// ---- SFT records -----------------------------------------------------------

struct SftRecord {
    std::string system;
    std::string user;
    std::string assistant;
};

/// Persona and four-layer reasoning instruction used as the system turn.
std::string_view sft_system_prompt();

/// Builds a single-turn (system, user, assistant) record whose assistant turn
/// is the rendered CoE chain. `coe.answer` must match the selected human
/// answer (compared after NFC and whitespace trimming).
SftRecord build_sft_record(const QARecord& record, std::size_t answer_index, const coe::CoeOutput& coe);
nlohmann::json to_json(const SftRecord& record);

}  // namespace empathy::corpus

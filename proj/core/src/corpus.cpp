// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#include "empathy/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <regex>
#include <set>
#include <unordered_set>

#include "empathy/error.hpp"
#include "empathy/text.hpp"

namespace empathy::corpus {

using nlohmann::json;

AnswerRecord AnswerRecord::from_text(std::string text) {
    AnswerRecord a;
    a.char_count = text::char_count(text);
    a.text = std::move(text);
    return a;
}

std::string QARecord::question_text() const {
    if (description.empty()) return title;
    if (title.empty()) return description;
    return title + "\n" + description;
}

// ---- Serialization ---------------------------------------------------------

namespace {

const std::string& require_string(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) throw ValidationError(std::string("missing required field '") + key + "'");
    if (!it->is_string()) throw ValidationError(std::string("field '") + key + "' must be a string");
    return it->get_ref<const std::string&>();
}

}  // namespace

QARecord record_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("record is not a JSON object");
    QARecord r;
    r.id = require_string(j, "id");
    r.title = require_string(j, "title");
    r.description = require_string(j, "description");
    r.topic = require_string(j, "topic");
    if (r.id.empty()) throw ValidationError("field 'id' is empty");
    if (r.topic.empty()) throw ValidationError("field 'topic' is empty");

    if (auto it = j.find("subtopics"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw ValidationError("field 'subtopics' must be an array");
        for (const auto& s : *it) {
            if (!s.is_string()) throw ValidationError("subtopic labels must be strings");
            r.subtopics.push_back(s.get<std::string>());
        }
    }

    auto answers = j.find("answers");
    if (answers == j.end()) throw ValidationError("missing required field 'answers'");
    if (!answers->is_array()) throw ValidationError("field 'answers' must be an array");
    for (const auto& a : *answers) {
        if (!a.is_object()) throw ValidationError("answers must be objects with a 'text' key");
        r.answers.push_back(AnswerRecord::from_text(require_string(a, "text")));
    }
    return r;
}

json to_json(const QARecord& record) {
    json answers = json::array();
    for (const auto& a : record.answers) answers.push_back({{"text", a.text}});
    return {
        {"id", record.id},
        {"title", record.title},
        {"description", record.description},
        {"topic", record.topic},
        {"subtopics", record.subtopics},
        {"answers", std::move(answers)},
    };
}

ParsedCorpus parse_corpus(std::istream& in) {
    ParsedCorpus out;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::is_blank(line)) continue;
        try {
            json j = json::parse(line);
            QARecord r = record_from_json(j);
            if (!seen.insert(r.id).second) {
                out.diagnostics.push_back({lineno, "duplicate id '" + r.id + "'"});
                continue;
            }
            out.records.push_back(std::move(r));
        } catch (const json::exception& e) {
            out.diagnostics.push_back({lineno, std::string("invalid JSON: ") + e.what()});
        } catch (const ValidationError& e) {
            out.diagnostics.push_back({lineno, e.what()});
        }
    }
    if (in.bad()) throw IoError("read failure while parsing corpus");
    return out;
}

ParsedCorpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    return parse_corpus(in);
}

void write_corpus(std::ostream& out, const std::vector<QARecord>& records) {
    for (const auto& r : records) out << to_json(r).dump() << '\n';
    if (!out) throw IoError("write failure while writing corpus");
}

void save_corpus(const std::filesystem::path& path, const std::vector<QARecord>& records) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_corpus(out, records);
}

// ---- Filtering and statistics ----------------------------------------------

std::vector<QARecord> filter_corpus(const std::vector<QARecord>& records, std::size_t min_chars) {
    std::vector<QARecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        QARecord kept = r;
        kept.answers.clear();
        for (const auto& a : r.answers) {
            if (a.char_count > min_chars) kept.answers.push_back(a);
        }
        if (!kept.answers.empty()) out.push_back(std::move(kept));
    }
    return out;
}

CorpusStats compute_stats(const std::vector<QARecord>& records) {
    if (records.empty()) throw ValidationError("empty corpus");
    CorpusStats s;
    std::set<std::string> topics;
    std::set<std::string> subtopics;
    double title_chars = 0;
    double description_chars = 0;
    double answer_chars = 0;
    for (const auto& r : records) {
        ++s.n_questions;
        s.n_answers += r.answers.size();
        topics.insert(r.topic);
        subtopics.insert(r.subtopics.begin(), r.subtopics.end());
        title_chars += static_cast<double>(text::char_count(r.title));
        description_chars += static_cast<double>(text::char_count(r.description));
        for (const auto& a : r.answers) answer_chars += static_cast<double>(a.char_count);
    }
    const auto nq = static_cast<double>(s.n_questions);
    s.n_main_topics = topics.size();
    s.n_subtopics = subtopics.size();
    s.avg_chars_title = title_chars / nq;
    s.avg_chars_description = description_chars / nq;
    s.avg_chars_answer = s.n_answers > 0 ? answer_chars / static_cast<double>(s.n_answers) : 0.0;
    s.avg_responses_per_question = static_cast<double>(s.n_answers) / nq;
    return s;
}

json to_json(const CorpusStats& s) {
    return {
        {"n_questions", s.n_questions},
        {"n_answers", s.n_answers},
        {"n_main_topics", s.n_main_topics},
        {"n_subtopics", s.n_subtopics},
        {"avg_chars_title", s.avg_chars_title},
        {"avg_chars_description", s.avg_chars_description},
        {"avg_chars_answer", s.avg_chars_answer},
        {"avg_responses_per_question", s.avg_responses_per_question},
    };
}

// ---- Anonymization ---------------------------------------------------------

namespace {

const std::regex& url_pattern() {
    static const std::regex re(R"((?:https?://|www\.)[A-Za-z0-9._~:/?#\[\]@!$&'()*+,;=%-]+)",
                               std::regex::ECMAScript | std::regex::icase);
    return re;
}

const std::regex& email_pattern() {
    static const std::regex re(R"([A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)+)");
    return re;
}

const std::regex& handle_pattern() {
    static const std::regex re(R"(@[A-Za-z0-9_]+)");
    return re;
}

}  // namespace

std::string anonymize(std::string_view input, const AnonymizerConfig& config) {
    std::string out(input);
    if (config.urls) out = std::regex_replace(out, url_pattern(), std::string(kUrlPlaceholder));
    if (config.emails) out = std::regex_replace(out, email_pattern(), std::string(kEmailPlaceholder));
    if (config.handles) out = std::regex_replace(out, handle_pattern(), std::string(kHandlePlaceholder));
    if (config.digit_runs && config.min_digit_run > 0) {
        const std::regex digits("[0-9]{" + std::to_string(config.min_digit_run) + ",}");
        out = std::regex_replace(out, digits, std::string(kNumPlaceholder));
    }
    return out;
}

QARecord anonymize(const QARecord& record, const AnonymizerConfig& config) {
    QARecord r = record;
    r.title = anonymize(record.title, config);
    r.description = anonymize(record.description, config);
    for (auto& a : r.answers) a = AnswerRecord::from_text(anonymize(a.text, config));
    return r;
}

// ---- SFT records -----------------------------------------------------------

std::string_view sft_system_prompt() {
    return "你是一名专业、温暖的心理咨询师。请先在 <empathy_think> 标签内按顺序完成四层共情分析，"
           "再在 <answer> 标签内给出面向求助者的回复。\n"
           "<L1> 情绪与情境：识别求助者的核心情绪及其所处的客观情境。</L1>\n"
           "<L2> 原因与信念：探究情绪背后的原因以及可能存在的认知偏差。</L2>\n"
           "<L3> 意图分析：判断求助者希望获得的支持类型（认可、理解或建议）。</L3>\n"
           "<L4> 回应策略：综合以上分析，确定积极倾听式的回应策略。</L4>\n"
           "输出格式：<empathy_think><L1>...</L1><L2>...</L2><L3>...</L3><L4>...</L4></empathy_think>"
           "<answer>...</answer>";
}

SftRecord build_sft_record(const QARecord& record, std::size_t answer_index, const coe::CoeOutput& coe) {
    if (answer_index >= record.answers.size()) {
        throw ValidationError("answer index " + std::to_string(answer_index) + " out of range for record '" +
                              record.id + "' with " + std::to_string(record.answers.size()) + " answers");
    }
    const std::string human = text::nfc(text::trim(record.answers[answer_index].text));
    if (text::nfc(text::trim(coe.answer)) != human) {
        throw ValidationError("CoE answer does not match human answer " + std::to_string(answer_index) +
                              " of record '" + record.id + "'");
    }
    return SftRecord{
        std::string(sft_system_prompt()),
        record.question_text(),
        coe::render_coe(coe),
    };
}

json to_json(const SftRecord& r) {
    return {{"system", r.system}, {"user", r.user}, {"assistant", r.assistant}};
}

}  // namespace empathy::corpus

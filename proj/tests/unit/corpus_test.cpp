// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "empathy/coe_format.hpp"
#include "empathy/corpus.hpp"
#include "empathy/error.hpp"
#include "empathy/text.hpp"
#include "fixtures.hpp"

namespace empathy::corpus {
namespace {

ParsedCorpus parse(const std::string& text) {
    std::istringstream in(text);
    return parse_corpus(in);
}

AnswerRecord answer_of(std::size_t chars) {
    return AnswerRecord::from_text(std::string(chars, 'a'));
}

QARecord record(std::string id, std::vector<AnswerRecord> answers, std::string topic = "t") {
    return {std::move(id), "title", "desc", std::move(topic), {}, std::move(answers)};
}

std::vector<QARecord> random_corpus(Rng& rng) {
    std::vector<QARecord> out;
    const std::size_t n = 1 + uniform_index(rng, 12);
    for (std::size_t i = 0; i < n; ++i) {
        QARecord r{"r" + std::to_string(i), testing::random_field(rng, 10), testing::random_field(rng, 30),
                   "topic" + std::to_string(uniform_index(rng, 3)), {}, {}};
        if (uniform01(rng) < 0.5) r.subtopics.push_back("sub" + std::to_string(uniform_index(rng, 4)));
        const std::size_t k = uniform_index(rng, 4);
        for (std::size_t a = 0; a < k; ++a) r.answers.push_back(answer_of(uniform_index(rng, 250)));
        out.push_back(std::move(r));
    }
    return out;
}

// ---- parse_corpus -------------------------------------------------------------------

TEST(ParseCorpus, MinimalRecord) {
    const auto p = parse(R"({"id":"q1","title":"你好","description":"d","topic":"t","answers":[{"text":"x"}]})");
    ASSERT_EQ(p.records.size(), 1u);
    EXPECT_EQ(p.records[0].answers.size(), 1u);
    EXPECT_TRUE(p.records[0].subtopics.empty());
    EXPECT_TRUE(p.diagnostics.empty());
}

TEST(ParseCorpus, EmptyStream) {
    const auto p = parse("");
    EXPECT_TRUE(p.records.empty());
    EXPECT_TRUE(p.diagnostics.empty());
}

TEST(ParseCorpus, MissingTopicIsReportedByLine) {
    const auto p = parse(
        R"({"id":"a","title":"t","description":"d","topic":"x","answers":[]})"
        "\n"
        R"({"id":"b","title":"t","description":"d","answers":[]})"
        "\n"
        R"({"id":"c","title":"t","description":"d","topic":"x","answers":[]})"
        "\n");
    ASSERT_EQ(p.records.size(), 2u);
    EXPECT_EQ(p.records[0].id, "a");
    EXPECT_EQ(p.records[1].id, "c");
    ASSERT_EQ(p.diagnostics.size(), 1u);
    EXPECT_EQ(p.diagnostics[0].line, 2u);
    EXPECT_NE(p.diagnostics[0].message.find("topic"), std::string::npos);
}

TEST(ParseCorpus, EveryRequiredFieldIsChecked) {
    for (const char* field : {"id", "title", "description", "topic", "answers"}) {
        nlohmann::json j = {{"id", "a"}, {"title", "t"}, {"description", "d"}, {"topic", "x"},
                            {"answers", nlohmann::json::array()}};
        j.erase(field);
        const auto p = parse(j.dump());
        EXPECT_TRUE(p.records.empty()) << field;
        ASSERT_EQ(p.diagnostics.size(), 1u) << field;
        EXPECT_NE(p.diagnostics[0].message.find(field), std::string::npos) << field;
    }
}

TEST(ParseCorpus, MalformedJsonAndDuplicateIdsAreDiagnosed) {
    const auto p = parse(
        "{not json\n"
        R"({"id":"a","title":"t","description":"d","topic":"x","answers":[]})"
        "\n"
        R"({"id":"a","title":"t2","description":"d","topic":"x","answers":[]})"
        "\n");
    ASSERT_EQ(p.records.size(), 1u);
    EXPECT_EQ(p.records[0].title, "t");
    ASSERT_EQ(p.diagnostics.size(), 2u);
    EXPECT_EQ(p.diagnostics[0].line, 1u);
    EXPECT_EQ(p.diagnostics[1].line, 3u);
}

TEST(ParseCorpus, CachesScalarCounts) {
    const auto p = parse(R"({"id":"a","title":"t","description":"d","topic":"x","answers":[{"text":"难过😢"}]})");
    ASSERT_EQ(p.records.size(), 1u);
    EXPECT_EQ(p.records[0].answers[0].char_count, 3u);
}

TEST(LoadCorpus, MissingFileIsAnIoError) {
    EXPECT_THROW(load_corpus("/nonexistent/corpus.jsonl"), IoError);
}

// ---- filter_corpus -------------------------------------------------------------------

TEST(FilterCorpus, ExactlyMinCharsIsRemoved) {
    EXPECT_TRUE(filter_corpus({record("a", {answer_of(100)})}, 100).empty());
    EXPECT_EQ(filter_corpus({record("a", {answer_of(101)})}, 100).size(), 1u);
}

TEST(FilterCorpus, ZeroThresholdKeepsNonEmptyAnswers) {
    const std::vector<QARecord> in = {record("a", {answer_of(1), answer_of(5)}), record("b", {answer_of(3)})};
    EXPECT_EQ(filter_corpus(in, 0), in);
}

TEST(FilterCorpus, MixedLengthsKeepOnlyTheLongOne) {
    const auto out = filter_corpus({record("a", {answer_of(50), answer_of(150)})}, 100);
    ASSERT_EQ(out.size(), 1u);
    ASSERT_EQ(out[0].answers.size(), 1u);
    EXPECT_EQ(out[0].answers[0].char_count, 150u);
}

TEST(FilterCorpus, CountsCharactersNotBytes) {
    // 101 CJK characters are 303 bytes but only 101 scalars.
    std::string s;
    for (int i = 0; i < 100; ++i) s += "字";
    EXPECT_TRUE(filter_corpus({record("a", {AnswerRecord::from_text(s)})}, 100).empty());
    EXPECT_EQ(filter_corpus({record("a", {AnswerRecord::from_text(s + "字")})}, 100).size(), 1u);
}

TEST(FilterCorpus, IsIdempotentAndOrderPreserving) {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        const auto c = random_corpus(rng);
        const std::size_t m = uniform_index(rng, 200);
        const auto once = filter_corpus(c, m);
        EXPECT_EQ(filter_corpus(once, m), once);
        std::vector<std::string> ids;
        for (const auto& r : once) ids.push_back(r.id);
        EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end(), [](const auto& a, const auto& b) {
            return std::stoi(a.substr(1)) < std::stoi(b.substr(1));
        }));
        for (const auto& r : once) {
            for (const auto& a : r.answers) EXPECT_GT(a.char_count, m);
        }
    }
}

// ---- compute_stats -------------------------------------------------------------------

TEST(ComputeStats, AverageResponsesPerQuestion) {
    const auto s = compute_stats({record("a", {answer_of(1)}), record("b", {answer_of(2), answer_of(3)})});
    EXPECT_DOUBLE_EQ(s.avg_responses_per_question, 1.5);
    EXPECT_DOUBLE_EQ(s.avg_chars_answer, 2.0);
}

TEST(ComputeStats, SingleTitle) {
    QARecord r = record("a", {answer_of(1)});
    r.title = "你好";
    EXPECT_DOUBLE_EQ(compute_stats({r}).avg_chars_title, 2.0);
}

TEST(ComputeStats, DistinctLabelCounts) {
    std::vector<QARecord> rs = {record("a", {}, "x"), record("b", {}, "y"), record("c", {}, "x")};
    rs[0].subtopics = {"p", "q"};
    rs[1].subtopics = {"q"};
    const auto s = compute_stats(rs);
    EXPECT_EQ(s.n_main_topics, 2u);
    EXPECT_EQ(s.n_subtopics, 2u);
    EXPECT_EQ(s.n_answers, 0u);
}

TEST(ComputeStats, EmptyCorpusIsRejected) {
    try {
        compute_stats({});
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_STREQ(e.what(), "empty corpus");
    }
}

TEST(ComputeStats, AveragesLieWithinPerRecordRange) {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const auto c = random_corpus(rng);
        const auto s = compute_stats(c);
        double lo = 1e18, hi = -1.0;
        std::size_t alo = SIZE_MAX, ahi = 0;
        for (const auto& r : c) {
            const double t = static_cast<double>(text::char_count(r.title));
            lo = std::min(lo, t);
            hi = std::max(hi, t);
            alo = std::min(alo, r.answers.size());
            ahi = std::max(ahi, r.answers.size());
        }
        EXPECT_GE(s.avg_chars_title, lo - 1e-12);
        EXPECT_LE(s.avg_chars_title, hi + 1e-12);
        EXPECT_GE(s.avg_responses_per_question, static_cast<double>(alo));
        EXPECT_LE(s.avg_responses_per_question, static_cast<double>(ahi));
    }
}

TEST(ComputeStats, JsonMirrorsFieldNames) {
    const auto j = to_json(compute_stats({record("a", {answer_of(1)})}));
    for (const char* k : {"n_questions", "n_answers", "n_main_topics", "n_subtopics", "avg_chars_title",
                          "avg_chars_description", "avg_chars_answer", "avg_responses_per_question"}) {
        EXPECT_TRUE(j.contains(k)) << k;
    }
}

// ---- round trip ------------------------------------------------------------------------

TEST(CorpusRoundTrip, SerializeThenParseIsIdentity) {
    Rng rng(9);
    for (int i = 0; i < 100; ++i) {
        const auto c = random_corpus(rng);
        std::ostringstream out;
        write_corpus(out, c);
        const auto back = parse(out.str());
        ASSERT_TRUE(back.diagnostics.empty());
        ASSERT_EQ(back.records, c);
    }
}

TEST(CorpusRoundTrip, FileRoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "empathy_corpus_roundtrip.jsonl";
    const auto c = testing::topical_corpus({.n_topics = 2, .records_per_topic = 3});
    save_corpus(path, c);
    const auto back = load_corpus(path);
    std::filesystem::remove(path);
    EXPECT_EQ(back.records, c);
}

// ---- anonymize -------------------------------------------------------------------------

TEST(Anonymize, LongDigitRun) {
    EXPECT_EQ(anonymize("call 13800138000"), "call ⟨NUM⟩");
}

TEST(Anonymize, NoMatchesIsIdentity) {
    EXPECT_EQ(anonymize("今天心情不好 1234"), "今天心情不好 1234");
}

TEST(Anonymize, UrlsEmailsAndHandles) {
    EXPECT_EQ(anonymize("see https://example.com/a?b=1 now"), "see ⟨URL⟩ now");
    EXPECT_EQ(anonymize("www.example.org"), "⟨URL⟩");
    EXPECT_EQ(anonymize("mail me: someone@example.com"), "mail me: ⟨EMAIL⟩");
    EXPECT_EQ(anonymize("ask @helper_01 please"), "ask ⟨HANDLE⟩ please");
}

TEST(Anonymize, ClassesCanBeDisabled) {
    AnonymizerConfig cfg;
    cfg.digit_runs = false;
    EXPECT_EQ(anonymize("13800138000", cfg), "13800138000");
    cfg.digit_runs = true;
    cfg.min_digit_run = 12;
    EXPECT_EQ(anonymize("13800138000", cfg), "13800138000");
}

TEST(Anonymize, IdempotentAndNeverAddsDigits) {
    Rng rng(17);
    const std::vector<std::string> parts = {"http://x.y/1", "a@b.cn", "@bob", "123456", "12", "你好", " ", "www.q.com",
                                            "。", "@", "9"};
    for (int i = 0; i < 500; ++i) {
        std::string s;
        const std::size_t n = uniform_index(rng, 8);
        for (std::size_t k = 0; k < n; ++k) s += parts[uniform_index(rng, parts.size())];
        const std::string once = anonymize(s);
        EXPECT_EQ(anonymize(once), once) << s;
        auto digits = [](const std::string& t) { return std::count_if(t.begin(), t.end(), ::isdigit); };
        EXPECT_LE(digits(once), digits(s)) << s;
    }
}

TEST(Anonymize, RecordRecomputesCharCounts) {
    QARecord r = record("a", {AnswerRecord::from_text("call 13800138000")});
    const auto out = anonymize(r);
    EXPECT_EQ(out.answers[0].text, "call ⟨NUM⟩");
    EXPECT_EQ(out.answers[0].char_count, text::char_count("call ⟨NUM⟩"));
}

// ---- build_sft_record ------------------------------------------------------------------

TEST(BuildSftRecord, AssistantIsACanonicalCoeBlock) {
    QARecord r = record("a", {AnswerRecord::from_text("e")});
    const coe::CoeOutput chain{"a", "b", "c", "d", "e"};
    const auto sft = build_sft_record(r, 0, chain);
    EXPECT_TRUE(sft.assistant.starts_with("<empathy_think>"));
    EXPECT_TRUE(sft.assistant.ends_with("</answer>"));
    EXPECT_EQ(*coe::parse_coe(sft.assistant).output, chain);
    EXPECT_EQ(sft.user, "title\ndesc");
    for (const char* layer : {"<L1>", "<L2>", "<L3>", "<L4>"}) {
        EXPECT_NE(sft.system.find(layer), std::string::npos);
    }
}

TEST(BuildSftRecord, RejectsBadIndexAndMismatchedAnswer) {
    QARecord r = record("a", {AnswerRecord::from_text("e")});
    EXPECT_THROW(build_sft_record(r, 1, {"a", "b", "c", "d", "e"}), ValidationError);
    EXPECT_THROW(build_sft_record(r, 0, {"a", "b", "c", "d", "other"}), ValidationError);
}

TEST(BuildSftRecord, TwoHundredRecordsAllParse) {
    Rng rng(23);
    std::size_t parsed = 0;
    for (int i = 0; i < 200; ++i) {
        auto chain = testing::random_coe_output(rng);
        QARecord r = record("r" + std::to_string(i), {AnswerRecord::from_text(chain.answer)});
        const auto sft = build_sft_record(r, 0, chain);
        parsed += coe::parse_coe(sft.assistant) ? 1 : 0;
    }
    EXPECT_EQ(parsed, 200u);
}

}  // namespace
}  // namespace empathy::corpus

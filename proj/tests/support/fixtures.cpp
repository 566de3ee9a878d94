// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#include "fixtures.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "empathy/text.hpp"

namespace empathy::testing {

namespace {

constexpr std::array<ReferenceRow, 12> kRows{{
    {"Empathy-QA", "Empathy-R1", 0.314, 0.375, 0.045, 0.314, 0.262, 44.30, 56.30, 2.600},
    {"Empathy-QA", "Qwen3-8B-NT", 0.253, 0.318, 0.117, 0.298, 0.246, 16.30, 39.40, 3.114},
    {"Empathy-QA", "Qwen3-8B-T", 0.250, 0.315, 0.111, 0.299, 0.244, 11.40, 34.00, 3.257},
    {"Empathy-QA", "CBT-LLM", 0.251, 0.449, 0.013, 0.270, 0.246, 10.90, 30.60, 3.411},
    {"Empathy-QA", "EmoLLM", 0.004, 0.785, 0.003, 0.118, 0.228, 2.60, 7.20, 5.457},
    {"Empathy-QA", "Deepseek-R1", 0.232, 0.457, 0.126, 0.249, 0.266, 14.60, 32.60, 3.160},
    {"PsyQA", "Empathy-R1", 0.261, 0.389, 0.046, 0.275, 0.243, 37.50, 55.60, 2.616},
    {"PsyQA", "Qwen3-8B-NT", 0.161, 0.307, 0.084, 0.250, 0.201, 10.30, 37.60, 3.333},
    {"PsyQA", "Qwen3-8B-T", 0.161, 0.307, 0.084, 0.249, 0.200, 9.50, 25.00, 3.296},
    {"PsyQA", "CBT-LLM", 0.257, 0.451, 0.009, 0.241, 0.240, 12.30, 29.20, 3.298},
    {"PsyQA", "EmoLLM", 0.022, 0.781, 0.003, 0.140, 0.237, 2.30, 3.20, 5.614},
    {"PsyQA", "Deepseek-R1", 0.124, 0.383, 0.077, 0.193, 0.194, 28.00, 49.40, 2.837},
}};

const std::array<std::string_view, 6> kGenericSentences{
    "我理解你的感受", "加油", "一切都会好起来的", "照顾好自己", "你并不孤单", "慢慢来",
};

std::string topic_char(std::size_t topic, std::size_t index, std::size_t vocab) {
    // Start well inside the unified ideograph block; every code point there is assigned.
    std::string out;
    text::append_utf8(out, static_cast<char32_t>(0x4E10 + topic * vocab + index));
    return out;
}

std::string draw_topic_text(Rng& rng, std::size_t topic, std::size_t vocab, std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += topic_char(topic, uniform_index(rng, vocab), vocab);
    return s;
}

}  // namespace

std::span<const ReferenceRow> reference_rows() {
    return kRows;
}

std::vector<preference::RankSummary> reference_rank_summaries(std::string_view dataset) {
    std::vector<preference::RankSummary> rows;
    for (const auto& r : kRows) {
        if (r.dataset != dataset) continue;
        rows.push_back({std::string(r.model), {{1, r.win1}, {2, r.win2}}, r.mr});
    }
    return rows;
}

std::vector<corpus::QARecord> topical_corpus(const TopicalCorpusSpec& spec) {
    Rng rng(spec.seed);
    std::vector<corpus::QARecord> records;
    for (std::size_t r = 0; r < spec.records_per_topic; ++r) {
        for (std::size_t t = 0; t < spec.n_topics; ++t) {
            corpus::QARecord rec;
            rec.id = "s" + std::to_string(spec.seed) + "-t" + std::to_string(t) + "-r" + std::to_string(r);
            const std::size_t title_len = std::max<std::size_t>(1, spec.question_chars / 4);
            rec.title = draw_topic_text(rng, t, spec.vocab_per_topic, title_len);
            rec.description = draw_topic_text(rng, t, spec.vocab_per_topic, spec.question_chars - title_len);
            rec.topic = "topic-" + std::to_string(t);
            rec.subtopics = {rec.topic + "/" + std::to_string(r % 3)};
            std::string answer = draw_topic_text(rng, t, spec.vocab_per_topic, spec.answer_chars);
            answer += "。";
            answer += kGenericSentences[uniform_index(rng, kGenericSentences.size())];
            answer += "。";
            rec.answers.push_back(corpus::AnswerRecord::from_text(std::move(answer)));
            records.push_back(std::move(rec));
        }
    }
    return records;
}

std::vector<reward::Triplet> topical_triplets(const std::vector<corpus::QARecord>& records, std::size_t count,
                                              std::size_t batch_size, std::uint64_t seed) {
    Rng rng(seed);
    const reward::SentenceTable table(records);
    std::vector<reward::Triplet> out;
    std::size_t start = 0;
    while (out.size() < count) {
        const std::size_t end = std::min(records.size(), start + batch_size);
        const std::span<const corpus::QARecord> batch(records.data() + start, end - start);
        for (const auto& r : batch) {
            for (auto& t : reward::sample_negatives(r, records, batch, rng, table).triplets) {
                if (out.size() < count) out.push_back(std::move(t));
            }
        }
        start = end == records.size() ? 0 : end;
    }
    return out;
}

std::vector<GoldenCoe> golden_coe_cases() {
    using R = coe::FailureReason;
    const std::string think = "<empathy_think><L1>a</L1><L2>b</L2><L3>c</L3><L4>d</L4></empathy_think>";
    const std::string v = think + "<answer>e</answer>";
    return {
        {"canonical", v, 1, R::none},
        {"newlines between blocks",
         "<empathy_think>\n<L1>a</L1>\n<L2>b</L2>\n<L3>c</L3>\n<L4>d</L4>\n</empathy_think>\n<answer>e</answer>", 1,
         R::none},
        {"outer whitespace", "\n  " + v + "  \n", 1, R::none},
        {"multiline CJK content",
         "<empathy_think><L1>焦虑，\n失眠</L1><L2>担心考试</L2><L3>想被理解</L3><L4>先共情再建议</L4>"
         "</empathy_think><answer>我能感受到你的压力。\n试着慢慢来。</answer>",
         1, R::none},
        {"less-than sign in content",
         "<empathy_think><L1>a < b</L1><L2>b</L2><L3>c</L3><L4>d</L4></empathy_think><answer>e</answer>", 1,
         R::none},
        {"lowercase lookalike tag is content",
         "<empathy_think><L1><l1>x</l1></L1><L2>b</L2><L3>c</L3><L4>d</L4></empathy_think><answer>e</answer>", 1,
         R::none},
        {"unterminated tag text is content", think + "<answer>e <answer</answer>", 1, R::none},
        {"padded sections",
         "<empathy_think><L1>  a  </L1><L2>\tb</L2><L3>c\n</L3><L4> d </L4></empathy_think><answer> e </answer>", 1,
         R::none},
        {"full-width punctuation", think + "<answer>抱抱你！别怕？我在。</answer>", 1, R::none},
        {"tabs between blocks",
         "<empathy_think>\t<L1>a</L1>\t<L2>b</L2>\t<L3>c</L3>\t<L4>d</L4>\t</empathy_think>\t<answer>e</answer>", 1,
         R::none},

        {"empty string", "", 0, R::missing_tag},
        {"plain prose", "I hear you, that sounds hard.", 0, R::missing_tag},
        {"L3 block deleted",
         "<empathy_think><L1>a</L1><L2>b</L2><L4>d</L4></empathy_think><answer>e</answer>", 0, R::missing_tag},
        {"answer never closed", think + "<answer>e", 0, R::missing_tag},
        {"think never opened", "<L1>a</L1><L2>b</L2><L3>c</L3><L4>d</L4></empathy_think><answer>e</answer>", 0,
         R::missing_tag},
        {"L2 before L1",
         "<empathy_think><L2>b</L2><L1>a</L1><L3>c</L3><L4>d</L4></empathy_think><answer>e</answer>", 0,
         R::bad_order},
        {"answer before think", "<answer>e</answer>" + think, 0, R::bad_order},
        {"L1 tags swapped",
         "<empathy_think></L1>a<L1><L2>b</L2><L3>c</L3><L4>d</L4></empathy_think><answer>e</answer>", 0,
         R::bad_order},
        {"L4 outside the think block",
         "<empathy_think><L1>a</L1><L2>b</L2><L3>c</L3></empathy_think><L4>d</L4><answer>e</answer>", 0,
         R::bad_order},
        {"duplicate L1 block",
         "<empathy_think><L1>a</L1><L1>a</L1><L2>b</L2><L3>c</L3><L4>d</L4></empathy_think><answer>e</answer>", 0,
         R::duplicate_tag},
        {"duplicate answer block", v + "<answer>e</answer>", 0, R::duplicate_tag},
        {"nested think block",
         "<empathy_think><empathy_think><L1>a</L1><L2>b</L2><L3>c</L3><L4>d</L4></empathy_think></empathy_think>"
         "<answer>e</answer>",
         0, R::duplicate_tag},
        {"trailing word", v + "extra", 0, R::trailing_content},
        {"leading preamble", "Sure! " + v, 0, R::trailing_content},
        {"text between L1 and L2",
         "<empathy_think><L1>a</L1>oops<L2>b</L2><L3>c</L3><L4>d</L4></empathy_think><answer>e</answer>", 0,
         R::trailing_content},
        {"text between think and answer", think + " note <answer>e</answer>", 0, R::trailing_content},
        {"trailing CJK after blank line", v + "\n\n谢谢", 0, R::trailing_content},
        {"empty L2", "<empathy_think><L1>a</L1><L2></L2><L3>c</L3><L4>d</L4></empathy_think><answer>e</answer>",
         0, R::empty_section},
        {"whitespace-only answer", think + "<answer>   </answer>", 0, R::empty_section},
        {"whitespace-only L4",
         "<empathy_think><L1>a</L1><L2>b</L2><L3>c</L3><L4>\n\t</L4></empathy_think><answer>e</answer>", 0,
         R::empty_section},
    };
}

std::string random_field(Rng& rng, std::size_t max_len) {
    // No '>' in the alphabet, so a random field can never spell a tag.
    static const std::vector<std::string> solid = {
        "a", "b", "z", "Q", "7", "0", "我", "你", "难", "过", "压", "力", "，", "。", "！", "？", "<", "/", "L",
        "1", "-", "(", ")", "\"", "'",
    };
    static const std::vector<std::string> spaces = {" ", "\n", "\t", "  "};
    const std::size_t len = 1 + uniform_index(rng, std::max<std::size_t>(1, max_len));
    std::string out;
    for (std::size_t i = 0; i < len; ++i) {
        const bool edge = i == 0 || i + 1 == len;
        if (!edge && uniform01(rng) < 0.15) {
            out += spaces[uniform_index(rng, spaces.size())];
        } else {
            out += solid[uniform_index(rng, solid.size())];
        }
    }
    return out;
}

coe::CoeOutput random_coe_output(Rng& rng) {
    return {random_field(rng, 24), random_field(rng, 24), random_field(rng, 24), random_field(rng, 24),
            random_field(rng, 48)};
}

double central_difference(const std::function<double()>& f, double& x_i, double h) {
    const double saved = x_i;
    x_i = saved + h;
    const double plus = f();
    x_i = saved - h;
    const double minus = f();
    x_i = saved;
    return (plus - minus) / (2.0 * h);
}

double relative_error(std::span<const double> a, std::span<const double> b) {
    double diff = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double scale = std::sqrt(std::max(na, nb));
    return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

}  // namespace empathy::testing

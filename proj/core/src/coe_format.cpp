// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#include "empathy/coe_format.hpp"

#include <vector>

#include "empathy/error.hpp"
#include "empathy/text.hpp"

namespace empathy::coe {

namespace {

struct TagHit {
    std::size_t tag;
    std::size_t begin;
    std::size_t end;
};

std::vector<TagHit> scan_tags(std::string_view s) {
    std::vector<TagHit> hits;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '<') continue;
        for (std::size_t t = 0; t < kTags.size(); ++t) {
            if (s.substr(i).starts_with(kTags[t])) {
                hits.push_back({t, i, i + kTags[t].size()});
                i += kTags[t].size() - 1;
                break;
            }
        }
    }
    return hits;
}

// Gap k sits between hit k and hit k+1. Content gaps hold a section body;
// every other gap must be whitespace.
constexpr std::array<bool, 11> kContentGap = {
    false, true, false, true, false, true, false, true, false, false, true,
};

constexpr std::array<std::string_view, 5> kSectionNames = {"L1", "L2", "L3", "L4", "answer"};

ParseResult parse_normalized(std::string_view s, std::size_t* first_begin, std::size_t* last_end) {
    const auto hits = scan_tags(s);

    std::array<int, kTags.size()> counts{};
    for (const auto& h : hits) ++counts[h.tag];
    for (std::size_t t = 0; t < kTags.size(); ++t) {
        if (counts[t] == 0) {
            return {std::nullopt, FormatVerdict::fail(FailureReason::missing_tag,
                                                      "missing " + std::string(kTags[t]))};
        }
    }
    for (std::size_t t = 0; t < kTags.size(); ++t) {
        if (counts[t] > 1) {
            return {std::nullopt, FormatVerdict::fail(FailureReason::duplicate_tag,
                                                      "duplicate " + std::string(kTags[t]))};
        }
    }
    for (std::size_t k = 0; k < hits.size(); ++k) {
        if (hits[k].tag != k) {
            return {std::nullopt,
                    FormatVerdict::fail(FailureReason::bad_order, std::string(kTags[hits[k].tag]) +
                                                                      " where " + std::string(kTags[k]) +
                                                                      " was expected")};
        }
    }

    std::array<std::string, 5> sections;
    std::size_t section = 0;
    for (std::size_t k = 0; k + 1 < hits.size(); ++k) {
        std::string_view gap = s.substr(hits[k].end, hits[k + 1].begin - hits[k].end);
        std::string_view body = text::trim(gap);
        if (kContentGap[k]) {
            if (body.empty()) {
                return {std::nullopt,
                        FormatVerdict::fail(FailureReason::empty_section,
                                            "empty " + std::string(kSectionNames[section]) + " section")};
            }
            sections[section++] = std::string(body);
        } else if (!body.empty()) {
            return {std::nullopt, FormatVerdict::fail(FailureReason::trailing_content,
                                                      "content between " + std::string(kTags[k]) + " and " +
                                                          std::string(kTags[k + 1]))};
        }
    }

    if (first_begin != nullptr) *first_begin = hits.front().begin;
    if (last_end != nullptr) *last_end = hits.back().end;
    CoeOutput out{std::move(sections[0]), std::move(sections[1]), std::move(sections[2]),
                  std::move(sections[3]), std::move(sections[4])};
    return {std::move(out), FormatVerdict::ok()};
}

void check_field(std::string_view name, std::string_view value) {
    if (text::is_blank(value)) {
        throw ValidationError("CoE field '" + std::string(name) + "' is empty");
    }
    const std::string normalized = text::nfc(value);
    if (!scan_tags(normalized).empty()) {
        throw ValidationError("CoE field '" + std::string(name) + "' contains a structural tag");
    }
}

}  // namespace

std::string_view to_string(FailureReason reason) {
    switch (reason) {
        case FailureReason::none: return "none";
        case FailureReason::missing_tag: return "missing_tag";
        case FailureReason::bad_order: return "bad_order";
        case FailureReason::duplicate_tag: return "duplicate_tag";
        case FailureReason::trailing_content: return "trailing_content";
        case FailureReason::empty_section: return "empty_section";
    }
    return "unknown";
}

ParseResult parse_coe(std::string_view text) {
    const std::string s = text::nfc(text);
    return parse_normalized(s, nullptr, nullptr);
}

void validate(const CoeOutput& coe) {
    check_field("l1", coe.l1);
    check_field("l2", coe.l2);
    check_field("l3", coe.l3);
    check_field("l4", coe.l4);
    check_field("answer", coe.answer);
}

std::string render_coe(const CoeOutput& coe) {
    validate(coe);
    std::string out;
    out.reserve(coe.l1.size() + coe.l2.size() + coe.l3.size() + coe.l4.size() + coe.answer.size() + 96);
    out += "<empathy_think>";
    out += "<L1>";
    out += text::trim(coe.l1);
    out += "</L1><L2>";
    out += text::trim(coe.l2);
    out += "</L2><L3>";
    out += text::trim(coe.l3);
    out += "</L3><L4>";
    out += text::trim(coe.l4);
    out += "</L4>";
    out += "</empathy_think>";
    out += "<answer>";
    out += text::trim(coe.answer);
    out += "</answer>";
    return out;
}

FormatVerdict check_format(std::string_view text) {
    const std::string s = text::nfc(text);
    std::size_t first = 0;
    std::size_t last = 0;
    auto parsed = parse_normalized(s, &first, &last);
    if (!parsed) return parsed.verdict;
    if (!text::is_blank(std::string_view(s).substr(0, first))) {
        return FormatVerdict::fail(FailureReason::trailing_content, "content before <empathy_think>");
    }
    if (!text::is_blank(std::string_view(s).substr(last))) {
        return FormatVerdict::fail(FailureReason::trailing_content, "content after </answer>");
    }
    return FormatVerdict::ok();
}

std::string extract_answer(std::string_view text) {
    auto parsed = parse_coe(text);
    return parsed ? parsed.output->answer : std::string{};
}

}  // namespace empathy::coe

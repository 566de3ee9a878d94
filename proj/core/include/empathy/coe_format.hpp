// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace empathy::coe {

/// Structured generation: four reasoning layers followed by the user-facing
/// answer.
///
/// Canonical serialization (no whitespace between blocks):
///
///     <empathy_think><L1>..</L1><L2>..</L2><L3>..</L3><L4>..</L4></empathy_think><answer>..</answer>
struct CoeOutput {
    std::string l1;  ///< Emotions and context.
    std::string l2;  ///< Causes and beliefs.
    std::string l3;  ///< Intent analysis.
    std::string l4;  ///< Response strategy.
    std::string answer;

    bool operator==(const CoeOutput&) const = default;
};

enum class FailureReason {
    none,
    missing_tag,
    bad_order,
    duplicate_tag,
    trailing_content,
    empty_section,
};

std::string_view to_string(FailureReason reason);

struct FormatVerdict {
    bool valid = false;
    int reward = 0;
    FailureReason failure_reason = FailureReason::missing_tag;
    std::string detail;

    static FormatVerdict ok() { return {true, 1, FailureReason::none, {}}; }
    static FormatVerdict fail(FailureReason r, std::string detail) { return {false, 0, r, std::move(detail)}; }
};

struct ParseResult {
    std::optional<CoeOutput> output;
    FormatVerdict verdict;

    explicit operator bool() const { return output.has_value(); }
};

/// The twelve literal tags, in required order.
inline constexpr std::array<std::string_view, 12> kTags = {
    "<empathy_think>", "<L1>", "</L1>", "<L2>", "</L2>", "<L3>",
    "</L3>", "<L4>", "</L4>", "</empathy_think>", "<answer>", "</answer>",
};

/// Parses a CoE block sequence. Text before the think block and after the
/// answer block is ignored here; format_reward() is the whole-output check.
ParseResult parse_coe(std::string_view text);

/// Canonical serialization. Fields are trimmed; throws ValidationError when a
/// field is blank or contains one of the structural tags.
std::string render_coe(const CoeOutput& coe);

/// Validates the CoeOutput invariants, throwing ValidationError on violation.
void validate(const CoeOutput& coe);

/// Whole-output grammar check: parse succeeds and nothing but whitespace
/// surrounds the blocks.
FormatVerdict check_format(std::string_view text);

/// Binary format reward, 1 iff check_format() is valid.
inline int format_reward(std::string_view text) { return check_format(text).reward; }

/// Answer-block body for reward scoring; empty when the output does not parse.
std::string extract_answer(std::string_view text);

}  // namespace empathy::coe

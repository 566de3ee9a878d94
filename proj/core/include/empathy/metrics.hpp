// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace empathy::metrics {

using TokenSeq = std::vector<std::string>;

/// See text::tokenize for the rules.
TokenSeq tokenize(std::string_view text);

/// Clipped unigram precision times the brevity penalty.
double bleu1(const TokenSeq& hyp, const TokenSeq& ref);

/// LCS-based F1.
double rouge_l(const TokenSeq& hyp, const TokenSeq& ref);
std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b);

/// Exact-match METEOR: greedy left-to-right one-to-one alignment,
/// Fmean = 10PR / (R + 9P), fragmentation penalty 0.5 (chunks/matches)^3.
double meteor(const TokenSeq& hyp, const TokenSeq& ref);

struct Alignment {
    std::size_t matches = 0;
    std::size_t chunks = 0;
};
Alignment meteor_alignment(const TokenSeq& hyp, const TokenSeq& ref);

double distinct1(const TokenSeq& hyp);

struct MetricVector {
    double b1 = 0.0;
    double d1 = 0.0;
    double rl = 0.0;
    double met = 0.0;
    double navg = 0.0;
};

/// Unweighted mean of the four metrics.
inline double navg(double b1, double d1, double rl, double met) { return (b1 + d1 + rl + met) / 4.0; }

MetricVector make_vector(double b1, double d1, double rl, double met);

/// Scores `hyp` against every reference and averages b1/rl/met over them;
/// d1 is computed once on the hypothesis. Throws ValidationError on empty refs.
MetricVector score_multi_reference(std::string_view hyp, std::span<const std::string> refs);

/// Unweighted mean over questions. Throws ValidationError on empty input.
MetricVector macro_average(std::span<const MetricVector> per_question);

/// Full-precision fields plus 3-decimal display values.
nlohmann::json to_json(const MetricVector& v);

}  // namespace empathy::metrics

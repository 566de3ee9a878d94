// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#include "empathy/metrics.hpp"

#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "empathy/error.hpp"
#include "empathy/text.hpp"

namespace empathy::metrics {

TokenSeq tokenize(std::string_view text) {
    return text::tokenize(text);
}

double bleu1(const TokenSeq& hyp, const TokenSeq& ref) {
    if (hyp.empty()) return 0.0;
    std::unordered_map<std::string_view, std::size_t> ref_counts;
    for (const auto& t : ref) ++ref_counts[t];
    std::unordered_map<std::string_view, std::size_t> hyp_counts;
    for (const auto& t : hyp) ++hyp_counts[t];
    std::size_t clipped = 0;
    for (const auto& [tok, n] : hyp_counts) {
        auto it = ref_counts.find(tok);
        if (it != ref_counts.end()) clipped += std::min(n, it->second);
    }
    const double precision = static_cast<double>(clipped) / static_cast<double>(hyp.size());
    const double bp = hyp.size() >= ref.size()
                          ? 1.0
                          : std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(hyp.size()));
    return bp * precision;
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
    if (a.empty() || b.empty()) return 0;
    // Two-row DP, O(|a||b|) time and O(|b|) memory.
    std::vector<std::size_t> prev(b.size() + 1, 0);
    std::vector<std::size_t> cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double rouge_l(const TokenSeq& hyp, const TokenSeq& ref) {
    const std::size_t l = lcs_length(hyp, ref);
    if (l == 0) return 0.0;
    const double p = static_cast<double>(l) / static_cast<double>(hyp.size());
    const double r = static_cast<double>(l) / static_cast<double>(ref.size());
    return 2.0 * p * r / (p + r);
}

Alignment meteor_alignment(const TokenSeq& hyp, const TokenSeq& ref) {
    // Positions of each token in ref, consumed left to right.
    std::unordered_map<std::string_view, std::vector<std::size_t>> positions;
    for (std::size_t j = ref.size(); j-- > 0;) positions[ref[j]].push_back(j);

    Alignment a;
    bool have_prev = false;
    std::size_t prev_ref = 0;
    std::size_t prev_hyp = 0;
    for (std::size_t i = 0; i < hyp.size(); ++i) {
        auto it = positions.find(hyp[i]);
        if (it == positions.end() || it->second.empty()) continue;
        const std::size_t j = it->second.back();
        it->second.pop_back();
        ++a.matches;
        if (!have_prev || i != prev_hyp + 1 || j != prev_ref + 1) ++a.chunks;
        have_prev = true;
        prev_hyp = i;
        prev_ref = j;
    }
    return a;
}

double meteor(const TokenSeq& hyp, const TokenSeq& ref) {
    const Alignment a = meteor_alignment(hyp, ref);
    if (a.matches == 0) return 0.0;
    const double m = static_cast<double>(a.matches);
    const double p = m / static_cast<double>(hyp.size());
    const double r = m / static_cast<double>(ref.size());
    const double fmean = 10.0 * p * r / (r + 9.0 * p);
    const double frag = static_cast<double>(a.chunks) / m;
    const double penalty = 0.5 * frag * frag * frag;
    return fmean * (1.0 - penalty);
}

double distinct1(const TokenSeq& hyp) {
    if (hyp.empty()) return 0.0;
    std::unordered_set<std::string_view> unique(hyp.begin(), hyp.end());
    return static_cast<double>(unique.size()) / static_cast<double>(hyp.size());
}

MetricVector make_vector(double b1, double d1, double rl, double met) {
    return {b1, d1, rl, met, navg(b1, d1, rl, met)};
}

MetricVector score_multi_reference(std::string_view hyp, std::span<const std::string> refs) {
    if (refs.empty()) throw ValidationError("score_multi_reference: no references");
    const TokenSeq h = tokenize(hyp);
    double b1 = 0;
    double rl = 0;
    double met = 0;
    for (const auto& ref : refs) {
        const TokenSeq r = tokenize(ref);
        b1 += bleu1(h, r);
        rl += rouge_l(h, r);
        met += meteor(h, r);
    }
    const auto n = static_cast<double>(refs.size());
    return make_vector(b1 / n, distinct1(h), rl / n, met / n);
}

MetricVector macro_average(std::span<const MetricVector> per_question) {
    if (per_question.empty()) throw ValidationError("macro_average: no questions scored");
    double b1 = 0;
    double d1 = 0;
    double rl = 0;
    double met = 0;
    for (const auto& v : per_question) {
        b1 += v.b1;
        d1 += v.d1;
        rl += v.rl;
        met += v.met;
    }
    const auto n = static_cast<double>(per_question.size());
    return make_vector(b1 / n, d1 / n, rl / n, met / n);
}

nlohmann::json to_json(const MetricVector& v) {
    auto round3 = [](double x) { return std::round(x * 1000.0) / 1000.0; };
    return {
        {"b1", v.b1},
        {"d1", v.d1},
        {"rl", v.rl},
        {"met", v.met},
        {"navg", v.navg},
        {"display",
         {{"b1", round3(v.b1)}, {"d1", round3(v.d1)}, {"rl", round3(v.rl)}, {"met", round3(v.met)},
          {"navg", round3(v.navg)}}},
    };
}

}  // namespace empathy::metrics

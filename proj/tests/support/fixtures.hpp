// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "empathy/coe_format.hpp"
#include "empathy/corpus.hpp"
#include "empathy/preference.hpp"
#include "empathy/random.hpp"
#include "empathy/reward_model.hpp"

namespace empathy::testing {

// ---- Reference evaluation table ----------------------------------------------------

struct ReferenceRow {
    std::string_view dataset;
    std::string_view model;
    double b1, d1, rl, met, navg;
    double win1, win2, mr;
};

/// The twelve printed rows (six models on each of two test sets).
std::span<const ReferenceRow> reference_rows();

/// Human-preference columns of one test set as rank summaries.
std::vector<preference::RankSummary> reference_rank_summaries(std::string_view dataset);

// ---- Synthetic topical corpus -------------------------------------------------------

struct TopicalCorpusSpec {
    std::size_t n_topics = 8;
    std::size_t records_per_topic = 40;
    std::size_t vocab_per_topic = 40;
    std::size_t question_chars = 16;
    std::size_t answer_chars = 30;
    std::uint64_t seed = 42;
};

/// Records whose questions and answers draw CJK characters from disjoint
/// per-topic vocabularies. Every answer also ends with one generic comfort
/// sentence shared across topics, so frequent-sentence negatives exist.
std::vector<corpus::QARecord> topical_corpus(const TopicalCorpusSpec& spec);

/// Draws triplets with `sample_negatives` over consecutive batches until
/// `count` are collected.
std::vector<reward::Triplet> topical_triplets(const std::vector<corpus::QARecord>& records, std::size_t count,
                                              std::size_t batch_size, std::uint64_t seed);

// ---- CoE strings -------------------------------------------------------------------

struct GoldenCoe {
    std::string name;
    std::string text;
    int reward;
    coe::FailureReason reason;
};

/// Thirty hand-written valid and invalid outputs with their expected verdicts.
std::vector<GoldenCoe> golden_coe_cases();

/// Non-blank, already-trimmed, NFC-stable text drawn from ASCII, CJK,
/// punctuation, and embedded whitespace (including newlines).
std::string random_field(Rng& rng, std::size_t max_len);

coe::CoeOutput random_coe_output(Rng& rng);

// ---- Numerical helpers ----------------------------------------------------------------

/// Central difference (f(x + h e_i) - f(x - h e_i)) / 2h, restoring x[i].
double central_difference(const std::function<double()>& f, double& x_i, double h);

/// ||a - b|| / max(||a||, ||b||), or 0 when both are zero.
double relative_error(std::span<const double> a, std::span<const double> b);

}  // namespace empathy::testing

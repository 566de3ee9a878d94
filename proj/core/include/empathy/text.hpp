// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace empathy::text {

/// Unicode NFC normalization. Invalid UTF-8 sequences become U+FFFD.
std::string nfc(std::string_view utf8);

/// Decodes UTF-8 into scalar values without normalizing.
std::u32string decode(std::string_view utf8);

std::string encode(std::u32string_view scalars);
void append_utf8(std::string& out, char32_t cp);

/// Number of Unicode scalar values after NFC normalization.
std::size_t char_count(std::string_view utf8);

bool is_space(char32_t cp);
bool is_cjk(char32_t cp);
inline bool is_ascii_alnum(char32_t cp) {
    return (cp >= U'0' && cp <= U'9') || (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z');
}

/// Strips leading and trailing Unicode whitespace.
std::string_view trim(std::string_view utf8);

/// True when every scalar in `utf8` is whitespace (or the input is empty).
bool is_blank(std::string_view utf8);

/// Tokenization shared by the metrics and the reward encoder.
///
/// After NFC normalization: each CJK scalar is one token, each maximal run of
/// ASCII alphanumerics is one lowercased token, whitespace is dropped, and any
/// other scalar is a token of its own.
std::vector<std::string> tokenize(std::string_view utf8);

}  // namespace empathy::text

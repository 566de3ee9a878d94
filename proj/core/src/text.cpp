// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#include "empathy/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <stdexcept>

namespace empathy::text {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Decodes one scalar starting at `i`, advancing `i`. Malformed input yields
// U+FFFD and consumes a single byte.
char32_t next_scalar(std::string_view s, std::size_t& i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
        min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
        min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
        min = 0x10000;
    } else {
        ++i;
        return kReplacement;
    }
    if (i + len > s.size()) {
        ++i;
        return kReplacement;
    }
    for (int k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) {
            ++i;
            return kReplacement;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        ++i;
        return kReplacement;
    }
    i += len;
    return cp;
}

const icu::Normalizer2& nfc_instance() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || norm == nullptr) {
        throw std::runtime_error("ICU NFC normalizer unavailable");
    }
    return *norm;
}

}  // namespace

std::u32string decode(std::string_view utf8) {
    std::u32string out;
    out.reserve(utf8.size());
    std::size_t i = 0;
    while (i < utf8.size()) out.push_back(next_scalar(utf8, i));
    return out;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string encode(std::u32string_view scalars) {
    std::string out;
    out.reserve(scalars.size());
    for (char32_t cp : scalars) append_utf8(out, cp);
    return out;
}

std::string nfc(std::string_view utf8) {
    // Fast path: pure ASCII is always NFC.
    bool ascii = true;
    for (char c : utf8) {
        if (static_cast<unsigned char>(c) >= 0x80) {
            ascii = false;
            break;
        }
    }
    if (ascii) return std::string(utf8);

    // Round-trip through our decoder first so malformed bytes map to U+FFFD
    // deterministically before ICU sees them.
    const std::string clean = encode(decode(utf8));
    const auto& norm = nfc_instance();
    UErrorCode status = U_ZERO_ERROR;
    icu::UnicodeString src = icu::UnicodeString::fromUTF8(clean);
    if (norm.isNormalized(src, status) && U_SUCCESS(status)) return clean;
    status = U_ZERO_ERROR;
    icu::UnicodeString dst = norm.normalize(src, status);
    if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
    std::string out;
    dst.toUTF8String(out);
    return out;
}

std::size_t char_count(std::string_view utf8) {
    return decode(nfc(utf8)).size();
}

bool is_space(char32_t cp) {
    return u_isUWhiteSpace(static_cast<UChar32>(cp)) != 0;
}

bool is_cjk(char32_t cp) {
    return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
           (cp >= 0x20000 && cp <= 0x2A6DF) || (cp >= 0x2A700 && cp <= 0x2EBEF) ||
           (cp >= 0x30000 && cp <= 0x3134F) || (cp >= 0xF900 && cp <= 0xFAFF) ||
           (cp >= 0x2F800 && cp <= 0x2FA1F);
}

std::string_view trim(std::string_view utf8) {
    std::size_t begin = 0;
    std::size_t i = 0;
    // Skip leading whitespace.
    while (i < utf8.size()) {
        std::size_t j = i;
        if (!is_space(next_scalar(utf8, j))) break;
        i = j;
    }
    begin = i;
    std::size_t end = begin;
    while (i < utf8.size()) {
        std::size_t j = i;
        char32_t cp = next_scalar(utf8, j);
        if (!is_space(cp)) end = j;
        i = j;
    }
    return utf8.substr(begin, end - begin);
}

bool is_blank(std::string_view utf8) {
    return trim(utf8).empty();
}

std::vector<std::string> tokenize(std::string_view utf8) {
    const std::u32string scalars = decode(nfc(utf8));
    std::vector<std::string> tokens;
    std::string run;
    auto flush = [&] {
        if (!run.empty()) {
            tokens.push_back(std::move(run));
            run.clear();
        }
    };
    for (char32_t cp : scalars) {
        if (is_ascii_alnum(cp)) {
            char c = static_cast<char>(cp);
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            run.push_back(c);
            continue;
        }
        flush();
        if (is_space(cp)) continue;
        std::string tok;
        append_utf8(tok, cp);
        tokens.push_back(std::move(tok));
    }
    flush();
    return tokens;
}

}  // namespace empathy::text

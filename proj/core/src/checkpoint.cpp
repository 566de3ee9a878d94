// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#include "empathy/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "empathy/error.hpp"

namespace empathy::checkpoint {

void write(std::ostream& out, nlohmann::json header, std::span<const double> values) {
    header["count"] = values.size();
    out << header.dump() << '\n';
    std::array<char, 8> bytes{};
    for (double v : values) {
        auto bits = std::bit_cast<std::uint64_t>(v);
        for (std::size_t k = 0; k < 8; ++k) {
            bytes[k] = static_cast<char>((bits >> (8 * k)) & 0xFF);
        }
        out.write(bytes.data(), bytes.size());
    }
    if (!out) throw IoError("checkpoint write failed");
}

Blob read(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("checkpoint: missing header line");
    Blob blob;
    try {
        blob.header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("checkpoint: bad header: ") + e.what());
    }
    if (!blob.header.contains("count") || !blob.header["count"].is_number_unsigned()) {
        throw ValidationError("checkpoint: header lacks 'count'");
    }
    const auto count = blob.header["count"].get<std::size_t>();
    blob.values.resize(count);
    std::array<char, 8> bytes{};
    for (std::size_t i = 0; i < count; ++i) {
        if (!in.read(bytes.data(), bytes.size())) {
            throw ValidationError("checkpoint: truncated payload at value " + std::to_string(i));
        }
        std::uint64_t bits = 0;
        for (std::size_t k = 0; k < 8; ++k) {
            bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[k])) << (8 * k);
        }
        blob.values[i] = std::bit_cast<double>(bits);
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw ValidationError("checkpoint: trailing bytes after payload");
    }
    return blob;
}

void save(const std::filesystem::path& path, const nlohmann::json& header, std::span<const double> values) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write(out, header, values);
}

Blob load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read(in);
}

}  // namespace empathy::checkpoint

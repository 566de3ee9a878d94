// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace empathy::checkpoint {

/// A checkpoint is one JSON header line followed by raw little-endian
/// IEEE-754 doubles. The header always carries `count`, the number of doubles.
struct Blob {
    nlohmann::json header;
    std::vector<double> values;
};

void write(std::ostream& out, nlohmann::json header, std::span<const double> values);
Blob read(std::istream& in);

void save(const std::filesystem::path& path, const nlohmann::json& header, std::span<const double> values);
Blob load(const std::filesystem::path& path);

}  // namespace empathy::checkpoint

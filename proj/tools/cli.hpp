// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#pragma once

#include <iostream>
#include <ostream>

namespace empathy::cli {

/// Parses `argv` and runs one subcommand. Data goes to files or `out`,
/// diagnostics and the resolved-config line go to `err`.
///
/// Returns 0 on success, 1 on a usage or validation error, 2 on an I/O error.
int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace empathy::cli

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 Empathy-R1 Contributors

#include "cli.hpp"

int main(int argc, char** argv) {
    return empathy::cli::run(argc, argv);
}

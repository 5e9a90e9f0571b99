// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fixcert::cli {

enum ExitCode : int { kSuccess = 0, kUnknown = 1, kUsage = 2, kNoFixpoint = 3 };

/// @brief Entry point shared by the executable and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int run(int argc, char** argv);

} // namespace fixcert::cli

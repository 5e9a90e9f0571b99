// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#include "fixcert/cli.hpp"

int main(int argc, char** argv) { return fixcert::cli::run(argc, argv); }

// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "fixcert/mondeq.hpp"

namespace fixcert {

/// @brief Parse a model from JSON text (format_version "1").
/// @throws ParseError, ShapeMismatch
MonDeqParams parse_model(const std::string& text);

/// @brief Serialize with 17 significant digits so binary64 values round-trip.
std::string dump_model(const MonDeqParams& params);

/// @throws ParseError if the file cannot be read or parsed
MonDeqParams load_model(const std::string& path);
void save_model(const MonDeqParams& params, const std::string& path);

using LabeledPoint = std::pair<Vector, int>;

/// @brief Comma separated rows, final column an integer label, optional header.
/// @throws ParseError
/// @param q expected feature count, or -1 to take it from the first row
std::vector<LabeledPoint> parse_dataset(const std::string& text, int q = -1);
std::vector<LabeledPoint> load_dataset(const std::string& path, int q = -1);

/// @brief Comma separated list of reals, e.g. "0.2,0.5".
/// @throws ParseError
Vector parse_vector(const std::string& text);

} // namespace fixcert

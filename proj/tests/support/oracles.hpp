// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

#include "fixcert/chzono.hpp"

namespace fixcert::testing {

/// @brief Feasibility of {u >= 0 : G u <= h} by a dense phase-one simplex with Bland's rule.
bool lp_feasible(const Matrix& G, const Vector& h, double tol = 1e-9);

/// @brief LP membership of y in {a + A e + diag(b) beta : |e|, |beta| <= 1}.
bool lp_member(const ChZonotope& z, const Vector& y, double tol = 1e-9);

/// @brief Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
Vector jacobi_eigenvalues(const Matrix& m, double tol = 1e-13, int max_sweeps = 100);

/// @brief Point of z for the given symbol values (e for generators, beta for the box).
Vector evaluate(const ChZonotope& z, const Vector& e, const Vector& beta);

/// @brief Random point of z; with probability vertex_prob all symbols are +-1.
Vector sample(const ChZonotope& z, std::mt19937_64& rng, double vertex_prob = 0.3);

/// @brief Uniform point of the box center +- radius.
Vector sample_box(const Vector& center, const Vector& radius, std::mt19937_64& rng);

/// @brief Matrix with entries uniform in [lo, hi].
Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng,
                     double lo = -1.0, double hi = 1.0);

} // namespace fixcert::testing

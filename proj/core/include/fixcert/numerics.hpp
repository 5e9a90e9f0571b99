// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Dense>

#include "fixcert/errors.hpp"

namespace fixcert {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace numerics {

/// @brief Inverse via LU with partial pivoting.
/// @throws SingularMatrix if the estimated condition number exceeds 1e12
Matrix invert(const Matrix& m);

/// @brief Orthonormal p x p basis from the left singular vectors of a.
///
/// Columns are ordered by descending singular value. Directions outside the
/// column space of a are completed by Gram-Schmidt against e_1, ..., e_p.
/// The first nonzero entry of every column is positive.
Matrix pca_basis(const Matrix& a);

/// @brief Largest singular value by power iteration on m^T m.
/// @throws NonConvergence
double spectral_norm(const Matrix& m);

/// @brief Smallest eigenvalue of the symmetric part (m + m^T) / 2.
/// @throws NonConvergence
double min_sym_eig(const Matrix& m);

/// @brief Max-abs entry, 0 for empty matrices.
double max_abs(const Matrix& m);

} // namespace numerics
} // namespace fixcert

// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <optional>
#include <utility>

#include "fixcert/numerics.hpp"

namespace fixcert {

/// @brief CH-Zonotope A*nu + diag(b)*eta + a with nu in [-1,1]^k, eta in [-1,1]^p.
///
/// Values are immutable. A zonotope is proper when k = p and A is invertible;
/// a proper zonotope may carry a cached inverse of A.
class ChZonotope {
public:
    ChZonotope() = default;

    /// @throws ShapeMismatch on inconsistent sizes
    /// @throws std::invalid_argument if any box radius is negative
    ChZonotope(Vector center, Matrix generators, Vector box, bool proper = false,
               std::shared_ptr<const Matrix> inverse = nullptr);

    const Vector& center() const { return a_; }
    const Matrix& generators() const { return A_; }
    const Vector& box() const { return b_; }
    bool proper() const { return proper_; }

    Eigen::Index dim() const { return a_.size(); }
    Eigen::Index order() const { return A_.cols(); }

    /// @brief Inverse of the generator matrix if known, else nullptr.
    const Matrix* cached_inverse() const { return inv_.get(); }

private:
    Vector a_;
    Matrix A_;
    Vector b_;
    bool proper_ = false;
    std::shared_ptr<const Matrix> inv_;
};

/// @brief Per-dimension ReLU slopes, each in [0, 1].
struct ReluSlopes {
    Vector lambda;
};

using Hull = std::pair<Vector, Vector>;

ChZonotope point(const Vector& a);
ChZonotope from_box(const Vector& center, const Vector& radius);

/// @brief Tight per-dimension bounds (lower, upper).
Hull interval_hull(const ChZonotope& z);

double mean_width(const ChZonotope& z);
double max_width(const ChZonotope& z);

/// @brief Exact image under x -> w*x + c. Box errors become generator columns.
ChZonotope affine(const ChZonotope& z, const Matrix& w, const Vector& c);

/// @brief ReLU transformer on all dimensions.
/// @param applied if non-null, receives the slope used in every dimension
///        (1 for stable-positive, 0 for stable-negative)
/// @throws InvalidSlope
ChZonotope relu(const ChZonotope& z, const std::optional<ReluSlopes>& slopes = std::nullopt,
                ReluSlopes* applied = nullptr);

/// @brief ReLU transformer on rows [begin, begin + count); other rows pass through.
ChZonotope relu_rows(const ChZonotope& z, Eigen::Index begin, Eigen::Index count,
                     const std::optional<ReluSlopes>& slopes = std::nullopt,
                     ReluSlopes* applied = nullptr);

/// @brief Error consolidation into basis * diag(c) with
/// c = (1 + w_mul) * |basis^-1 A| 1 + w_add, floored at 1e-12.
/// @throws SingularMatrix if basis cannot be inverted
ChZonotope consolidate(const ChZonotope& z, const Matrix& basis, double w_mul = 0.0,
                       double w_add = 0.0);

/// @brief Same as consolidate with a precomputed inverse of basis.
ChZonotope consolidate(const ChZonotope& z, const Matrix& basis, const Matrix& basis_inv,
                       double w_mul, double w_add);

/// @brief Sound, incomplete containment test gamma(inner) in gamma(outer).
///
/// False whenever outer is not proper or its generators cannot be inverted.
bool contains(const ChZonotope& outer, const ChZonotope& inner);

/// @brief Exact (min, max) of d . x over gamma(z).
std::pair<double, double> linear_bounds(const ChZonotope& z, const Vector& d);

/// @brief Rows [begin, begin + count) of z. Never proper.
ChZonotope marginal(const ChZonotope& z, Eigen::Index begin, Eigen::Index count);

/// @brief Interval hull as a box-only zonotope (no generators).
ChZonotope to_box(const ChZonotope& z);

/// @brief Smallest axis-aligned box over gamma(a) and gamma(b), as fresh generators.
ChZonotope hull_join(const ChZonotope& a, const ChZonotope& b);

/// @brief Interval hull of inner lies within [lo, hi].
bool hull_within(const Hull& outer, const ChZonotope& inner);

} // namespace fixcert

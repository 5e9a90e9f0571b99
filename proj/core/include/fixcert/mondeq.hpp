// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "fixcert/chzono.hpp"

namespace fixcert {

/// @brief Raw monotone operator network parameters.
struct MonDeqParams {
    Matrix P;     // p x p
    Matrix Q;     // p x p
    Matrix U;     // p x q
    Vector bias;  // p
    Matrix V;     // r x p
    Vector v;     // r
    double m = 1.0;

    Eigen::Index p() const { return P.rows(); }
    Eigen::Index q() const { return U.cols(); }
    Eigen::Index r() const { return V.rows(); }
};

/// @brief Parameters together with W = (1 - m) I - P^T P + Q - Q^T.
struct MonDeqWeights {
    MonDeqParams params;
    Matrix W;
    Matrix I_minus_W;
};

enum class SolverMethod { FB, PR };

struct SolverConfig {
    SolverMethod method = SolverMethod::PR;
    double alpha = 0.1;
    double tol = 1e-10;
    long max_steps = 1000000;
};

/// @throws ShapeMismatch
/// @throws std::invalid_argument if m <= 0
MonDeqWeights build_weights(const MonDeqParams& params);

/// @brief Step size bound 2m / ||I - W||_F^2 for forward-backward splitting.
///
/// The Frobenius norm bounds the spectral norm from above, so every step size
/// below this value also satisfies the spectral condition.
double fb_alpha_max(const MonDeqWeights& w, double m);

/// @brief The exact spectral bound 2m / ||I - W||_2^2.
double fb_alpha_max_spectral(const MonDeqWeights& w, double m);

/// @brief One forward-backward step ReLU((1 - alpha) s + alpha (W s + U x + b)).
Vector fb_step(const MonDeqWeights& w, const Vector& x, const Vector& s, double alpha);

/// @brief Forward-backward splitting with cached affine parts.
class FbOperator {
public:
    FbOperator(const MonDeqWeights& w, double alpha);

    double alpha() const { return alpha_; }
    Eigen::Index latent() const { return L_.rows(); }

    Vector step(const Vector& x, const Vector& s) const;

    /// @brief Pre-activation zonotope over the joint (s, x) abstraction.
    ChZonotope preactivation(const ChZonotope& x, const ChZonotope& s) const;

    ChZonotope abstract(const ChZonotope& x, const ChZonotope& s,
                        const std::optional<ReluSlopes>& slopes = std::nullopt,
                        ReluSlopes* applied = nullptr) const;

    /// @brief Interval-only step; x and s are treated as boxes.
    ChZonotope box_step(const ChZonotope& x, const ChZonotope& s) const;

private:
    double alpha_;
    Matrix L_;
    Matrix K_;
    Vector c_;
};

/// @brief Peaceman-Rachford splitting on the stacked state [z; u].
class PrOperator {
public:
    /// @throws SingularMatrix if I + alpha (I - W) cannot be inverted
    PrOperator(const MonDeqWeights& w, double alpha);

    double alpha() const { return alpha_; }
    Eigen::Index latent() const { return p_; }
    const Matrix& resolvent() const { return M_; }

    Vector step(const Vector& x, const Vector& s) const;
    ChZonotope abstract(const ChZonotope& x, const ChZonotope& s) const;
    ChZonotope box_step(const ChZonotope& x, const ChZonotope& s) const;

private:
    double alpha_;
    Eigen::Index p_;
    Matrix M_;
    Matrix L_;  // 2p x 2p, rows duplicated for z and u
    Matrix K_;  // 2p x q
    Vector c_;  // 2p
    Matrix U_;
    Vector bias_;
};

/// @brief One Peaceman-Rachford step given the resolvent M = (I + alpha (I - W))^-1.
Vector pr_step(const MonDeqWeights& w, const Matrix& M, const Vector& x, const Vector& s,
               double alpha);

/// @brief Concrete fixpoint z* of the network at x.
/// @throws NonConvergence
Vector solve_fixpoint(const MonDeqWeights& w, const Vector& x, const SolverConfig& cfg = {});

/// @brief Abstract forward-backward step. The first x.order() generator
/// columns of s are identified with the generators of x.
ChZonotope fb_abstract(const MonDeqWeights& w, const ChZonotope& x, const ChZonotope& s,
                       double alpha);

/// @brief Abstract Peaceman-Rachford step on [z; u], same column convention.
ChZonotope pr_abstract(const MonDeqWeights& w, const ChZonotope& x, const ChZonotope& s,
                       double alpha);

/// @brief Logits V z + v.
Vector logits(const MonDeqParams& params, const Vector& z);

/// @brief Predicted class. With a single output row the class is 1 iff y > 0.
int classify(const MonDeqParams& params, const Vector& z);

/// @brief Linear terms d . z + offset whose positivity certifies target class t.
struct MarginTerm {
    Vector d;
    double offset = 0.0;
};
std::vector<MarginTerm> margin_terms(const MonDeqParams& params, int target);

/// @brief Entries of P, Q, U, V uniform in [-1, 1] / sqrt(p); bias, v uniform in [-0.5, 0.5].
MonDeqParams random_monotone_model(int p, int q, int r, double m, std::uint64_t seed);

/// @brief The two-neuron example network used throughout the docs.
MonDeqParams example_model();

/// @brief Input abstraction for the box center +- radius; zero radii get no generator.
ChZonotope input_box(const Vector& center, const Vector& radius);

} // namespace fixcert

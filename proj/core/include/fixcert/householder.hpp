// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <utility>
#include <vector>

#include "fixcert/engine.hpp"

namespace fixcert {

/// @brief Scalar affine form c + sum_i a_i e_i + [-box, box] with named symbols e_i in [-1, 1].
class AffineForm {
public:
    AffineForm() = default;
    explicit AffineForm(double center, std::map<int, double> coeffs = {}, double box = 0.0);

    double center() const { return center_; }
    const std::map<int, double>& coeffs() const { return coeffs_; }
    double box() const { return box_; }

    double radius() const;
    std::pair<double, double> hull() const;

    AffineForm operator+(const AffineForm& o) const;
    AffineForm operator-(const AffineForm& o) const;
    AffineForm operator+(double c) const;
    AffineForm operator*(double k) const;

private:
    double center_ = 0.0;
    std::map<int, double> coeffs_;
    double box_ = 0.0;
};

/// @brief Sound product enclosure. Symbol products e_i^2 are centered at 1/2.
AffineForm mul(const AffineForm& a, const AffineForm& b);

/// @brief One concrete iteration s + s (h / 2 + 3 h^2 / 8) with h = 1 - x s^2.
double householder_step(double x, double s);

/// @brief The same iteration on affine forms.
AffineForm householder_step_abstract(const AffineForm& x, const AffineForm& s);

enum class RootMode { Fix, Reach };

struct RootTask {
    double lo = 16.0;
    double hi = 20.0;
    double s0 = 0.125;
    double epsilon = 1e-8;
    RootMode mode = RootMode::Fix;

    /// @throws std::invalid_argument
    void validate() const;
};

/// @brief Iterate from task.s0 until s > 0 and |s^2 - 1/x| < epsilon; returns s.
/// @throws NonConvergence after 10^4 steps
double root_concrete(double x, const RootTask& task);

struct RootResult {
    Status status = Status::Unknown;
    double root_lo = 0.0;
    double root_hi = 0.0;
    double s_lo = 0.0;
    double s_hi = 0.0;
    int iterations = 0;
    std::vector<std::pair<double, double>> hulls;  // s-hull after every abstract step
};

/// @brief Engine config used by analyze_root: r = 1, history 10, no expansion.
EngineConfig root_engine_config();

/// @brief Contracting abstract iteration over the input interval.
/// @throws NonConvergence if the engine diverges or exhausts its budget
RootResult analyze_root(const RootTask& task, const EngineConfig& cfg = root_engine_config());

/// @brief Relational keeps a common coefficient on the input symbol; Interval drops it.
enum class KleeneJoin { Relational, Interval };

/// @brief Join-free unrolling while the loop guard provably holds (at most
/// unroll_k steps), then hull joins until a post-fixpoint. Divergence is
/// reported in the status.
RootResult kleene_root(const RootTask& task, int unroll_k = 100, int max_joins = 1000,
                       KleeneJoin join = KleeneJoin::Relational);

} // namespace fixcert

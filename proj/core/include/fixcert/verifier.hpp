// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fixcert/engine.hpp"
#include "fixcert/mondeq.hpp"

namespace fixcert {

enum class G2Policy { FbLineSearch, Pr, FbFixed };

struct G2Config {
    G2Policy policy = G2Policy::FbLineSearch;
    double alpha = 0.5;  // used by FbFixed
    int probe_steps = 30;
    int probes = 12;
};

enum class LambdaOpt { Off, Reduced, Full };

struct VerificationTask {
    MonDeqParams model;
    Vector x;
    double epsilon = 0.0;
    std::optional<Vector> radius;  // per-dimension radius, overrides epsilon
    int target = 0;
    SolverConfig g1;
    G2Config g2;
    EngineConfig engine;
    LambdaOpt lambda_opt = LambdaOpt::Off;
    SolverConfig kleene{SolverMethod::FB, 0.1};  // solver iterated by verify_kleene

    Vector input_radius() const;
};

/// @brief Two-phase certification of the input box around task.x.
Verdict verify_local(const VerificationTask& task);

/// @brief Worst-case margin over all competing classes on the z rows of a state.
MarginFn make_margin_fn(const MonDeqParams& model, int target);

/// @brief Golden-section search for the phase-2 step size on (0, 1].
double search_alpha2(const MonDeqWeights& w,
                     const ChZonotope& x, const IterationState& start, const MarginFn& margin,
                     const G2Config& cfg, bool box_domain = false);

struct SearchResult {
    std::vector<double> theta;
    double value = 0.0;
    int evals = 0;
};

/// @brief Cyclic coordinate search with three-point quadratic fits, maximizing f
/// over [lo, hi]^dims starting from the zero vector.
SearchResult coordinate_search(const std::function<double(const std::vector<double>&)>& f,
                               std::size_t dims, int evals, double lo = -1.0, double hi = 1.0);

struct LambdaResult {
    std::vector<ReluSlopes> slopes;  // one entry per unrolled step
    double margin = 0.0;
    double default_margin = 0.0;
    int evals = 0;
};

/// @brief Tune ReLU slopes of `unroll` forward-backward steps from start.
///
/// Each step has one parameter t in [-1, 1] moving every crossing slope from
/// its default towards 0 (t < 0) or 1 (t > 0). Never worse than the defaults.
LambdaResult optimize_lambda(const FbOperator& op, const ChZonotope& x,
                             const IterationState& start, const MarginFn& margin, int unroll,
                             int evals);

/// @brief Runs phase 1 and the step-size search for task, then tunes slopes.
LambdaResult optimize_lambda(const VerificationTask& task, int unroll, int evals);

enum class KleeneDomain { Zonotope, Box };

/// @brief Kleene iteration from the zero state with interval-hull joins.
Verdict verify_kleene(const VerificationTask& task, KleeneDomain domain, int unroll_k);

/// @brief The two-phase pipeline restricted to interval states.
Verdict verify_box(const VerificationTask& task);

struct RegionLeaf {
    Vector lo;
    Vector hi;
    int depth = 0;
    int label = -1;
    bool certified = false;
    double margin = 0.0;
    Status status = Status::Unknown;
};

struct RegionReport {
    double certified_fraction = 0.0;
    std::vector<RegionLeaf> leaves;

    /// @brief One row per leaf: depth,label,certified,margin,lo_0,hi_0,...
    std::string to_csv() const;
};

/// @brief Bisect the widest input dimension until every leaf certifies or
/// max_depth is reached. base supplies the model and solver settings.
RegionReport verify_global(const VerificationTask& base, const Vector& lo, const Vector& hi,
                           int max_depth, int jobs = 1);

} // namespace fixcert

// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fixcert/chzono.hpp"

namespace fixcert {

enum class ExpansionSchedule { Const, Exp };

/// @brief Abstraction used by the engine. Box states carry no generators.
enum class Domain { ChZonotope, Box };

struct EngineConfig {
    int r = 3;
    int pca_refresh = 30;
    int history_len = 10;
    int n_max = 500;
    double abort_width = 1e9;
    int r_prime = 50;
    int stall_multiple = 3;
    double w_mul = 1e-3;
    double w_add = 1e-2;
    ExpansionSchedule schedule = ExpansionSchedule::Const;
    Domain domain = Domain::ChZonotope;

    int stall_window() const { return stall_multiple * r_prime; }
    /// @throws std::invalid_argument
    void validate() const;
};

/// @brief Abstract solver state over the stacked dimensions [z; u].
///
/// The first shared_cols generator columns of s belong to the input
/// abstraction and keep their identity from step to step.
struct IterationState {
    ChZonotope s;
    Eigen::Index z_dims = 0;
    Eigen::Index u_dims = 0;
    Eigen::Index shared_cols = 0;
    int step = 0;
};

/// @brief One abstract solver step, (input, state) -> state.
struct AbstractTransformer {
    std::string name;
    std::function<ChZonotope(const ChZonotope& x, const ChZonotope& s)> apply;
};

enum class Status { Certified, Unknown, Diverged, Exhausted, Contained };

const char* status_name(Status s);

struct TraceRow {
    int step = 0;
    std::string phase;
    double mean_width = 0.0;
    double margin = 0.0;
    bool has_margin = false;
};

using Trace = std::vector<TraceRow>;

/// @brief CSV with header step,phase,mean_width,margin.
std::string trace_csv(const Trace& trace);

struct Phase1Result {
    Status status = Status::Exhausted;  // Contained, Diverged or Exhausted
    IterationState state;
    int steps = 0;
    int consolidations = 0;
    Trace trace;
};

/// @brief Iterate g1 with periodic consolidation until s-step contraction.
Phase1Result phase1_contract(const AbstractTransformer& g1, const ChZonotope& x,
                             const IterationState& s0, const EngineConfig& cfg);

/// @brief Scalar margin; the property holds when it is positive.
using MarginFn = std::function<double(const IterationState&)>;

struct Verdict {
    Status status = Status::Unknown;
    double margin = -std::numeric_limits<double>::infinity();
    int phase1_steps = 0;
    int phase2_steps = 0;
    double wallclock = 0.0;
    Trace trace;
    std::optional<IterationState> final_state;
    std::optional<IterationState> best_state;
};

/// @brief Iterate g2 from a fixpoint-set abstraction, checking after every step.
Verdict phase2_tighten(const AbstractTransformer& g2, const ChZonotope& x,
                       const IterationState& s_star, const MarginFn& check,
                       const EngineConfig& cfg);

/// @brief Index of the first history element containing current.
std::optional<std::size_t> check_history(const ChZonotope& current,
                                         const std::vector<ChZonotope>& history);

} // namespace fixcert

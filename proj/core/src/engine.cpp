// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#include "fixcert/engine.hpp"

#include <cmath>
#include <cstdio>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace fixcert {

namespace {

struct HistoryEntry {
    ChZonotope outer;  // consolidated non-shared part, proper
    Matrix shared;     // input-shared columns at consolidation time
    Hull hull;         // used by the box domain
};

Matrix shared_part(const ChZonotope& s, Eigen::Index n) {
    Matrix out = Matrix::Zero(s.dim(), n);
    const Eigen::Index have = std::min(n, s.order());
    if (have > 0) out.leftCols(have) = s.generators().leftCols(have);
    return out;
}

Matrix other_part(const ChZonotope& s, Eigen::Index n) {
    const Eigen::Index have = std::min(n, s.order());
    return s.generators().rightCols(s.order() - have);
}

// Containment in the joint (state, input) space. The input rows are identical
// on both sides, which reduces the test to the state rows with the shared
// columns replaced by their difference.
bool entry_contains(const HistoryEntry& h, const IterationState& cur, Domain domain) {
    if (domain == Domain::Box) return hull_within(h.hull, cur.s);
    const Eigen::Index n = cur.shared_cols;
    const Matrix other = other_part(cur.s, n);
    Matrix gens(cur.s.dim(), n + other.cols());
    gens << shared_part(cur.s, n) - h.shared, other;
    const ChZonotope inner(cur.s.center(), std::move(gens), cur.s.box());
    return contains(h.outer, inner);
}

bool diverged(const ChZonotope& s, double abort_width) {
    const double w = max_width(s);
    return !std::isfinite(w) || w > abort_width || !s.center().allFinite();
}

TraceRow row(int step, const char* phase, const ChZonotope& s) {
    TraceRow r;
    r.step = step;
    r.phase = phase;
    r.mean_width = mean_width(s);
    return r;
}

} // namespace

void EngineConfig::validate() const {
    if (r < 1) throw std::invalid_argument("engine: r must be >= 1");
    if (pca_refresh < 1) throw std::invalid_argument("engine: pca_refresh must be >= 1");
    if (history_len < 1) throw std::invalid_argument("engine: history_len must be >= 1");
    if (n_max < 1) throw std::invalid_argument("engine: n_max must be >= 1");
    if (r_prime < 1 || stall_multiple < 1) throw std::invalid_argument("engine: bad stall window");
    if (!(w_mul >= 0.0) || !(w_add >= 0.0)) throw std::invalid_argument("engine: negative expansion");
    if (!(abort_width > 0.0)) throw std::invalid_argument("engine: abort_width must be > 0");
}

const char* status_name(Status s) {
    switch (s) {
    case Status::Certified: return "certified";
    case Status::Unknown: return "unknown";
    case Status::Diverged: return "diverged";
    case Status::Exhausted: return "exhausted";
    case Status::Contained: return "contained";
    }
    return "unknown";
}

std::string trace_csv(const Trace& trace) {
    std::ostringstream os;
    os << "step,phase,mean_width,margin\n";
    char buf[64];
    for (const auto& r : trace) {
        std::snprintf(buf, sizeof buf, "%.10g", r.mean_width);
        os << r.step << ',' << r.phase << ',' << buf << ',';
        if (r.has_margin) {
            std::snprintf(buf, sizeof buf, "%.10g", r.margin);
            os << buf;
        }
        os << '\n';
    }
    return os.str();
}

Phase1Result phase1_contract(const AbstractTransformer& g1, const ChZonotope& x,
                             const IterationState& s0, const EngineConfig& cfg) {
    cfg.validate();
    Phase1Result out;
    IterationState state = s0;
    std::deque<HistoryEntry> history;
    Matrix basis, basis_inv;
    double w_mul = cfg.w_mul;
    double w_add = cfg.w_add;
    const Eigen::Index n = state.shared_cols;

    for (int it = 1; it <= cfg.n_max; ++it) {
        if ((it - 1) % cfg.r == 0) {
            HistoryEntry entry;
            if (cfg.domain == Domain::ChZonotope) {
                const Matrix other = other_part(state.s, n);
                if (out.consolidations % cfg.pca_refresh == 0) {
                    basis = numerics::pca_basis(other);
                    basis_inv = numerics::invert(basis);
                }
                const ChZonotope rest(state.s.center(), other, state.s.box());
                ChZonotope cons = consolidate(rest, basis, basis_inv, w_mul, w_add);
                entry.shared = shared_part(state.s, n);
                Matrix gens(state.s.dim(), n + cons.order());
                gens << entry.shared, cons.generators();
                state.s = ChZonotope(state.s.center(), std::move(gens), state.s.box());
                entry.outer = std::move(cons);
            } else {
                entry.hull = interval_hull(state.s);
            }
            ++out.consolidations;
            history.push_back(std::move(entry));
            if (static_cast<int>(history.size()) > cfg.history_len) history.pop_front();
            out.trace.push_back(row(state.step, "consolidate", state.s));
        }

        state.s = g1.apply(x, state.s);
        ++state.step;
        out.steps = it;
        out.trace.push_back(row(state.step, "contract", state.s));

        if (diverged(state.s, cfg.abort_width)) {
            out.status = Status::Diverged;
            out.state = std::move(state);
            return out;
        }
        for (const auto& h : history) {
            if (entry_contains(h, state, cfg.domain)) {
                out.status = Status::Contained;
                out.state = std::move(state);
                return out;
            }
        }
        if (cfg.schedule == ExpansionSchedule::Exp && it % 2 == 0) {
            w_mul *= 1.1;
            w_add *= 1.2;
        }
    }
    out.status = Status::Exhausted;
    out.state = std::move(state);
    return out;
}

Verdict phase2_tighten(const AbstractTransformer& g2, const ChZonotope& x,
                       const IterationState& s_star, const MarginFn& check,
                       const EngineConfig& cfg) {
    cfg.validate();
    Verdict v;
    v.status = Status::Unknown;
    IterationState state = s_star;
    int last_improvement = 0;
    const int window = cfg.stall_window();

    for (int it = 1; it <= cfg.n_max; ++it) {
        state.s = g2.apply(x, state.s);
        ++state.step;
        v.phase2_steps = it;
        if (diverged(state.s, cfg.abort_width)) {
            v.status = Status::Diverged;
            break;
        }
        const double m = check(state);
        TraceRow r = row(state.step, "tighten", state.s);
        r.margin = m;
        r.has_margin = true;
        v.trace.push_back(r);

        if (m > v.margin + 1e-9 || !std::isfinite(v.margin)) {
            last_improvement = it;
        }
        if (m > v.margin || !v.best_state) {
            v.margin = m;
            v.best_state = state;
        }
        if (m > 0.0) {
            v.status = Status::Certified;
            break;
        }
        if (it - last_improvement >= window) break;
    }
    v.final_state = std::move(state);
    return v;
}

std::optional<std::size_t> check_history(const ChZonotope& current,
                                         const std::vector<ChZonotope>& history) {
    for (std::size_t i = 0; i < history.size(); ++i) {
        if (contains(history[i], current)) return i;
    }
    return std::nullopt;
}

} // namespace fixcert

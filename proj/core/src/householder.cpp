// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#include "fixcert/householder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

#include "fixcert/errors.hpp"

namespace fixcert {

namespace {

constexpr int kInputSymbol = 0;

AffineForm from_state(const ChZonotope& s) {
    std::map<int, double> coeffs;
    for (Eigen::Index j = 0; j < s.order(); ++j) {
        const double a = s.generators()(0, j);
        if (a != 0.0) coeffs[static_cast<int>(j)] = a;
    }
    return AffineForm(s.center()(0), std::move(coeffs), s.box()(0));
}

// The box term becomes a named generator so later steps keep its correlation.
ChZonotope to_state(const AffineForm& f) {
    int cols = 1;
    if (!f.coeffs().empty()) cols = std::max(cols, f.coeffs().rbegin()->first + 1);
    Matrix gens = Matrix::Zero(1, cols + (f.box() > 0.0 ? 1 : 0));
    for (const auto& [id, a] : f.coeffs()) gens(0, id) = a;
    if (f.box() > 0.0) gens(0, cols) = f.box();
    return ChZonotope(Vector::Constant(1, f.center()), std::move(gens), Vector::Zero(1));
}

bool guard_holds(double x_lo, double x_hi, double s_lo, double s_hi, double eps) {
    if (s_hi <= 0.0) return true;
    if (s_lo <= 0.0) return false;
    const double lo = s_lo * s_lo - 1.0 / x_lo;
    const double hi = s_hi * s_hi - 1.0 / x_hi;
    return lo >= eps || hi <= -eps;
}

} // namespace

AffineForm::AffineForm(double center, std::map<int, double> coeffs, double box)
    : center_(center), coeffs_(std::move(coeffs)), box_(box) {
    if (!(box_ >= 0.0)) throw std::invalid_argument("AffineForm: box must be >= 0");
}

double AffineForm::radius() const {
    double r = box_;
    for (const auto& kv : coeffs_) r += std::abs(kv.second);
    return r;
}

std::pair<double, double> AffineForm::hull() const {
    const double r = radius();
    return {center_ - r, center_ + r};
}

AffineForm AffineForm::operator+(const AffineForm& o) const {
    std::map<int, double> c = coeffs_;
    for (const auto& [id, a] : o.coeffs_) c[id] += a;
    return AffineForm(center_ + o.center_, std::move(c), box_ + o.box_);
}

AffineForm AffineForm::operator-(const AffineForm& o) const { return *this + o * -1.0; }

AffineForm AffineForm::operator+(double c) const {
    return AffineForm(center_ + c, coeffs_, box_);
}

AffineForm AffineForm::operator*(double k) const {
    std::map<int, double> c;
    for (const auto& [id, a] : coeffs_) c[id] = a * k;
    return AffineForm(center_ * k, std::move(c), std::abs(k) * box_);
}

AffineForm mul(const AffineForm& a, const AffineForm& b) {
    double center = a.center() * b.center();
    double sa = 0.0;
    double sb = 0.0;
    double diag = 0.0;
    std::map<int, double> c;
    for (const auto& [id, ai] : a.coeffs()) {
        sa += std::abs(ai);
        c[id] += b.center() * ai;
    }
    for (const auto& [id, bi] : b.coeffs()) {
        sb += std::abs(bi);
        c[id] += a.center() * bi;
    }
    for (const auto& [id, ai] : a.coeffs()) {
        auto it = b.coeffs().find(id);
        if (it == b.coeffs().end()) continue;
        const double prod = ai * it->second;
        center += 0.5 * prod;
        diag += std::abs(prod);
    }
    const double box = sa * sb - 0.5 * diag +
                       a.box() * (std::abs(b.center()) + sb + b.box()) +
                       b.box() * (std::abs(a.center()) + sa);
    return AffineForm(center, std::move(c), std::isnan(box) ? std::numeric_limits<double>::infinity() : std::max(box, 0.0));
}

double householder_step(double x, double s) {
    const double h = 1.0 - x * s * s;
    return s + s * (0.5 * h + 0.375 * h * h);
}

AffineForm householder_step_abstract(const AffineForm& x, const AffineForm& s) {
    const AffineForm h = mul(mul(x, s), s) * -1.0 + 1.0;
    const AffineForm t = h * 0.5 + mul(h * 0.375, h);
    return s + mul(s, t);
}

void RootTask::validate() const {
    if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) {
        throw std::invalid_argument("root task: need 0 < lo <= hi");
    }
    if (!(epsilon > 0.0) || !(epsilon < 1.0 / hi)) {
        throw std::invalid_argument("root task: need 0 < epsilon < 1/hi");
    }
    if (!std::isfinite(s0)) throw std::invalid_argument("root task: s0 must be finite");
}

double root_concrete(double x, const RootTask& task) {
    if (!(x > 0.0)) throw std::invalid_argument("root_concrete: x must be > 0");
    double s = task.s0;
    for (int i = 0; i < 10000; ++i) {
        if (s > 0.0 && std::abs(s * s - 1.0 / x) < task.epsilon) return s;
        s = householder_step(x, s);
        if (!std::isfinite(s)) break;
    }
    throw NonConvergence("root_concrete: no convergence");
}

EngineConfig root_engine_config() {
    EngineConfig cfg;
    cfg.r = 1;
    cfg.history_len = 10;
    cfg.w_mul = 0.0;
    cfg.w_add = 0.0;
    cfg.n_max = 1000;
    return cfg;
}

RootResult analyze_root(const RootTask& task, const EngineConfig& cfg) {
    task.validate();
    const double mid = 0.5 * (task.lo + task.hi);
    const double rad = 0.5 * (task.hi - task.lo);
    const AffineForm x =
        rad > 0.0 ? AffineForm(mid, {{kInputSymbol, rad}}) : AffineForm(mid);

    auto hulls = std::make_shared<std::vector<std::pair<double, double>>>();
    const AbstractTransformer g{"householder", [x, hulls](const ChZonotope&, const ChZonotope& s) {
                                    const AffineForm next = householder_step_abstract(x, from_state(s));
                                    hulls->push_back(next.hull());
                                    return to_state(next);
                                }};
    IterationState s0;
    s0.s = point(Vector::Constant(1, task.s0));
    s0.z_dims = 1;
    s0.shared_cols = 1;
    const ChZonotope x_state = rad > 0.0 ? from_box(Vector::Constant(1, mid), Vector::Constant(1, rad))
                                         : point(Vector::Constant(1, mid));

    const Phase1Result res = phase1_contract(g, x_state, s0, cfg);
    if (res.status != Status::Contained) {
        throw NonConvergence(std::string("analyze_root: ") + status_name(res.status));
    }
    RootResult out;
    out.status = Status::Contained;
    out.iterations = res.steps;
    out.hulls = std::move(*hulls);
    auto [l, u] = interval_hull(res.state.s);
    out.s_lo = l(0);
    out.s_hi = u(0);
    if (task.mode == RootMode::Reach) {
        out.s_lo -= std::sqrt(task.epsilon);
        out.s_hi += std::sqrt(task.epsilon);
    }
    if (!(out.s_lo > 0.0)) throw NonConvergence("analyze_root: enclosure reaches s <= 0");
    out.root_lo = 1.0 / out.s_hi;
    out.root_hi = 1.0 / out.s_lo;
    return out;
}

RootResult kleene_root(const RootTask& task, int unroll_k, int max_joins, KleeneJoin join) {
    task.validate();
    if (unroll_k < 0 || max_joins < 1) throw std::invalid_argument("kleene_root: bad budget");
    const double mid = 0.5 * (task.lo + task.hi);
    const double rad = 0.5 * (task.hi - task.lo);
    const AffineForm x =
        rad > 0.0 ? AffineForm(mid, {{kInputSymbol, rad}}) : AffineForm(mid);
    constexpr double kAbort = 1e9;
    constexpr int kWidenAfter = 200;
    constexpr int kJoinSymbol = 1;

    RootResult out;
    auto diverged = [&](double l, double u) {
        return !std::isfinite(l) || !std::isfinite(u) || u - l > kAbort;
    };
    auto input_coeff = [](const AffineForm& f) {
        auto it = f.coeffs().find(kInputSymbol);
        return it == f.coeffs().end() ? 0.0 : it->second;
    };

    AffineForm s(task.s0);
    for (int i = 0; i < unroll_k; ++i) {
        auto [l, u] = s.hull();
        if (!guard_holds(task.lo, task.hi, l, u, task.epsilon)) break;
        s = householder_step_abstract(x, s);
        ++out.iterations;
        auto [nl, nu] = s.hull();
        out.hulls.emplace_back(nl, nu);
        if (diverged(nl, nu)) {
            out.status = Status::Diverged;
            return out;
        }
    }

    // Joined state c + a e_x + r e_j with a fresh symbol e_j.
    double a = join == KleeneJoin::Relational ? input_coeff(s) : 0.0;
    double c = s.center();
    double r = s.radius() - std::abs(a);
    for (int joins = 0; joins < max_joins; ++joins) {
        const double lo = c - std::abs(a) - r;
        const double hi = c + std::abs(a) + r;
        std::map<int, double> coeffs{{kJoinSymbol, r}};
        if (a != 0.0) coeffs[kInputSymbol] = a;
        const AffineForm next = householder_step_abstract(x, AffineForm(c, std::move(coeffs)));
        ++out.iterations;
        auto [nl, nu] = next.hull();
        out.hulls.emplace_back(nl, nu);
        if (diverged(nl, nu)) {
            out.status = Status::Diverged;
            return out;
        }
        if (joins > 0 && nl >= lo && nu <= hi) {
            out.s_lo = lo;
            out.s_hi = hi;
            if (!(lo > 0.0)) {
                out.status = Status::Diverged;
                return out;
            }
            out.status = Status::Contained;
            out.root_lo = 1.0 / hi;
            out.root_hi = 1.0 / lo;
            return out;
        }

        const double na = input_coeff(next);
        double ja = 0.0;
        if (join == KleeneJoin::Relational && a * na > 0.0) {
            ja = std::abs(a) < std::abs(na) ? a : na;
        }
        const double nr = next.radius() - std::abs(na);
        double jl = std::min(c - std::abs(a - ja) - r, next.center() - std::abs(na - ja) - nr);
        double jh = std::max(c + std::abs(a - ja) + r, next.center() + std::abs(na - ja) + nr);
        if (joins >= kWidenAfter) {
            const double old_l = c - std::abs(a - ja) - r;
            const double old_h = c + std::abs(a - ja) + r;
            if (jl < old_l) jl = old_l - 10.0 * (old_l - jl);
            if (jh > old_h) jh = old_h + 10.0 * (jh - old_h);
        }
        a = ja;
        c = 0.5 * (jl + jh);
        r = 0.5 * (jh - jl);
        if (diverged(jl, jh)) {
            out.status = Status::Diverged;
            return out;
        }
    }
    out.status = Status::Exhausted;
    return out;
}

} // namespace fixcert

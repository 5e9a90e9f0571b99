// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#include "fixcert/verifier.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fixcert/errors.hpp"

namespace fixcert {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool finite_state(const ChZonotope& s, double abort_width) {
    const double w = max_width(s);
    return std::isfinite(w) && w <= abort_width && s.center().allFinite();
}

// Box layout for a joined state: zero columns for the input generators, then
// one fresh generator per nonzero radius.
ChZonotope with_shared_prefix(const ChZonotope& box, Eigen::Index shared) {
    const ChZonotope b = to_box(box);
    const Vector& r = b.box();
    std::vector<Eigen::Index> nz;
    for (Eigen::Index i = 0; i < r.size(); ++i) {
        if (r(i) > 0.0) nz.push_back(i);
    }
    Matrix gens = Matrix::Zero(b.dim(), shared + static_cast<Eigen::Index>(nz.size()));
    for (std::size_t j = 0; j < nz.size(); ++j) {
        gens(nz[j], shared + static_cast<Eigen::Index>(j)) = r(nz[j]);
    }
    return ChZonotope(b.center(), std::move(gens), Vector::Zero(b.dim()));
}

struct Setup {
    MonDeqWeights weights;
    ChZonotope x;
    Vector zstar;
    MarginFn margin;
};

Setup prepare(const VerificationTask& task) {
    task.engine.validate();
    MonDeqWeights w = build_weights(task.model);
    if (task.x.size() != w.params.q()) throw ShapeMismatch("verify: input has wrong length");
    if (!(task.epsilon >= 0.0)) throw std::invalid_argument("verify: epsilon must be >= 0");
    if (!(task.g1.alpha > 0.0)) throw std::invalid_argument("verify: g1 alpha must be > 0");
    if (task.g2.policy == G2Policy::Pr && task.g1.method != SolverMethod::PR) {
        throw std::invalid_argument("verify: pr phase 2 requires pr phase 1");
    }
    if (task.g2.policy == G2Policy::FbFixed && !(task.g2.alpha > 0.0 && task.g2.alpha <= 1.0)) {
        throw std::invalid_argument("verify: phase 2 alpha must lie in (0, 1]");
    }
    const Vector radius = task.input_radius();
    if (radius.size() != task.x.size()) throw ShapeMismatch("verify: radius has wrong length");
    ChZonotope x = input_box(task.x, radius);
    MarginFn margin = make_margin_fn(task.model, task.target);
    Vector zstar = solve_fixpoint(w, task.x, task.g1);
    return Setup{std::move(w), std::move(x), std::move(zstar), std::move(margin)};
}

Vector initial_state(const VerificationTask& task, const Vector& zstar) {
    if (task.g1.method == SolverMethod::FB) return zstar;
    Vector s(2 * zstar.size());
    s << zstar, zstar;
    return s;
}

AbstractTransformer make_solver(const SolverConfig& sc, const MonDeqWeights& w, bool box) {
    if (sc.method == SolverMethod::PR) {
        auto op = std::make_shared<PrOperator>(w, sc.alpha);
        if (box) return {"pr-box", [op](const ChZonotope& x, const ChZonotope& s) { return op->box_step(x, s); }};
        return {"pr", [op](const ChZonotope& x, const ChZonotope& s) { return op->abstract(x, s); }};
    }
    auto op = std::make_shared<FbOperator>(w, sc.alpha);
    if (box) return {"fb-box", [op](const ChZonotope& x, const ChZonotope& s) { return op->box_step(x, s); }};
    return {"fb", [op](const ChZonotope& x, const ChZonotope& s) { return op->abstract(x, s); }};
}

AbstractTransformer make_g1(const VerificationTask& task, const MonDeqWeights& w, bool box) {
    return make_solver(task.g1, w, box);
}

AbstractTransformer make_fb(const MonDeqWeights& w, double alpha, bool box) {
    auto op = std::make_shared<FbOperator>(w, alpha);
    if (box) return {"fb-box", [op](const ChZonotope& x, const ChZonotope& s) { return op->box_step(x, s); }};
    return {"fb", [op](const ChZonotope& x, const ChZonotope& s) { return op->abstract(x, s); }};
}

IterationState z_part(const IterationState& st) {
    IterationState out = st;
    out.s = marginal(st.s, 0, st.z_dims);
    out.u_dims = 0;
    return out;
}

// Widest logit interval over the z rows of a state.
double logit_width(const MonDeqParams& m, const ChZonotope& z) {
    return max_width(affine(z, m.V, m.v));
}

// Phase 2 and slope tuning shared by the chzonotope and box pipelines.
Verdict run_pipeline(const VerificationTask& task, const Setup& st, bool box, Clock::time_point t0) {
    Verdict v;
    const Eigen::Index p = st.weights.params.p();
    IterationState s0;
    const Vector init = initial_state(task, st.zstar);
    s0.s = box ? from_box(init, Vector::Zero(init.size())) : point(init);
    s0.z_dims = p;
    s0.u_dims = task.g1.method == SolverMethod::PR ? p : 0;
    s0.shared_cols = box ? 0 : st.x.order();

    EngineConfig cfg = task.engine;
    cfg.domain = box ? Domain::Box : Domain::ChZonotope;
    const AbstractTransformer g1 = make_g1(task, st.weights, box);
    Phase1Result p1 = phase1_contract(g1, st.x, s0, cfg);
    v.phase1_steps = p1.steps;
    v.trace = std::move(p1.trace);
    if (p1.status != Status::Contained) {
        v.status = p1.status;
        v.final_state = std::move(p1.state);
        v.wallclock = seconds_since(t0);
        return v;
    }

    const IterationState& s_star = p1.state;
    const double star_margin = st.margin(s_star);
    EngineConfig cfg2 = cfg;
    cfg2.n_max = task.engine.n_max - p1.steps;
    if (star_margin > 0.0 || cfg2.n_max < 1) {
        v.status = star_margin > 0.0 ? Status::Certified : Status::Exhausted;
        v.margin = star_margin;
        v.final_state = s_star;
        v.best_state = s_star;
        v.wallclock = seconds_since(t0);
        return v;
    }

    AbstractTransformer g2;
    IterationState start;
    std::optional<double> fb_alpha;
    switch (task.g2.policy) {
    case G2Policy::Pr:
        g2 = g1;
        start = s_star;
        break;
    case G2Policy::FbFixed:
        fb_alpha = task.g2.alpha;
        start = z_part(s_star);
        break;
    case G2Policy::FbLineSearch:
        start = z_part(s_star);
        fb_alpha = search_alpha2(st.weights, st.x, start, st.margin, task.g2, box);
        break;
    }
    if (fb_alpha) g2 = make_fb(st.weights, *fb_alpha, box);

    Verdict p2 = phase2_tighten(g2, st.x, start, st.margin, cfg2);
    v.status = p2.status;
    v.margin = std::max(star_margin, p2.margin);
    v.phase2_steps = p2.phase2_steps;
    v.trace.insert(v.trace.end(), p2.trace.begin(), p2.trace.end());
    v.final_state = std::move(p2.final_state);
    v.best_state = std::move(p2.best_state);
    if (v.status == Status::Diverged) v.status = Status::Unknown;

    if (v.status != Status::Certified && task.lambda_opt != LambdaOpt::Off && fb_alpha && !box &&
        v.final_state) {
        const double width = logit_width(task.model, marginal(v.final_state->s, 0, p));
        if (std::isfinite(v.margin) && v.margin > -0.1 * width) {
            const bool full = task.lambda_opt == LambdaOpt::Full;
            const FbOperator op(st.weights, *fb_alpha);
            const LambdaResult lr = optimize_lambda(op, st.x, *v.final_state, st.margin,
                                                    full ? 40 : 20, full ? 200 : 60);
            if (lr.margin > v.margin) v.margin = lr.margin;
        }
    }
    if (v.margin > 0.0) v.status = Status::Certified;
    v.wallclock = seconds_since(t0);
    return v;
}

} // namespace

Vector VerificationTask::input_radius() const {
    if (radius) return *radius;
    return Vector::Constant(x.size(), epsilon);
}

MarginFn make_margin_fn(const MonDeqParams& model, int target) {
    auto terms = std::make_shared<std::vector<MarginTerm>>(margin_terms(model, target));
    const Eigen::Index p = model.p();
    return [terms, p](const IterationState& st) {
        const ChZonotope z = marginal(st.s, 0, p);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& t : *terms) {
            best = std::min(best, linear_bounds(z, t.d).first + t.offset);
        }
        return std::isnan(best) ? kNegInf : best;
    };
}

double search_alpha2(const MonDeqWeights& w, const ChZonotope& x, const IterationState& start,
                     const MarginFn& margin, const G2Config& cfg, bool box_domain) {
    if (cfg.probes < 2 || cfg.probe_steps < 1) throw std::invalid_argument("search_alpha2: bad budget");
    double best_alpha = 1.0;
    double best_value = kNegInf;
    auto probe = [&](double alpha) {
        const FbOperator op(w, alpha);
        IterationState st = start;
        for (int i = 0; i < cfg.probe_steps; ++i) {
            st.s = box_domain ? op.box_step(x, st.s) : op.abstract(x, st.s);
            if (!finite_state(st.s, 1e9)) return kNegInf;
        }
        const double m = margin(st);
        if (m > best_value) {
            best_value = m;
            best_alpha = alpha;
        }
        return m;
    };

    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = 1e-3;
    double b = 1.0;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = probe(c);
    double fd = probe(d);
    for (int used = 2; used < cfg.probes; ++used) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = probe(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = probe(d);
        }
    }
    return best_alpha;
}

SearchResult coordinate_search(const std::function<double(const std::vector<double>&)>& f,
                               std::size_t dims, int evals, double lo, double hi) {
    SearchResult res;
    res.theta.assign(dims, 0.0);
    res.value = f(res.theta);
    res.evals = 1;
    if (dims == 0) return res;
    double h = 0.5 * (hi - lo) / 2.0;
    while (res.evals < evals && h > 1e-4) {
        bool improved = false;
        for (std::size_t j = 0; j < dims && res.evals < evals; ++j) {
            const double t0 = res.theta[j];
            std::vector<double> th = res.theta;
            const double xm = std::max(lo, t0 - h);
            const double xp = std::min(hi, t0 + h);
            th[j] = xm;
            const double fm = f(th);
            double fp = kNegInf;
            if (res.evals + 1 < evals) {
                th[j] = xp;
                fp = f(th);
                res.evals += 2;
            } else {
                res.evals += 1;
            }
            double cand_x = t0;
            double cand_f = res.value;
            if (fm > cand_f) { cand_x = xm; cand_f = fm; }
            if (fp > cand_f) { cand_x = xp; cand_f = fp; }

            // Vertex of the parabola through the three samples.
            if (std::isfinite(fm) && std::isfinite(fp) && std::isfinite(res.value) &&
                res.evals < evals && xp > t0 && xm < t0) {
                const double d1 = (res.value - fm) / (t0 - xm);
                const double d2 = (fp - res.value) / (xp - t0);
                const double curv = (d2 - d1) / (xp - xm);
                if (curv < 0.0) {
                    const double vx = std::clamp(0.5 * (t0 + xm) - d1 / (2.0 * curv), lo, hi);
                    if (std::abs(vx - t0) > 1e-12 && std::abs(vx - xm) > 1e-12 &&
                        std::abs(vx - xp) > 1e-12) {
                        th[j] = vx;
                        const double fv = f(th);
                        ++res.evals;
                        if (fv > cand_f) { cand_x = vx; cand_f = fv; }
                    }
                }
            }
            if (cand_f > res.value) {
                res.theta[j] = cand_x;
                res.value = cand_f;
                improved = true;
            }
        }
        if (!improved) h *= 0.5;
    }
    return res;
}

LambdaResult optimize_lambda(const FbOperator& op, const ChZonotope& x,
                             const IterationState& start, const MarginFn& margin, int unroll,
                             int evals) {
    if (unroll < 1 || evals < 0) throw std::invalid_argument("optimize_lambda: bad budget");
    auto run = [&](const std::vector<double>& theta, std::vector<ReluSlopes>* used) {
        IterationState st = start;
        for (int j = 0; j < unroll; ++j) {
            const ChZonotope pre = op.preactivation(x, st.s);
            auto [l, u] = interval_hull(pre);
            Vector lam = Vector::Ones(pre.dim());
            const double t = theta[static_cast<std::size_t>(j)];
            for (Eigen::Index i = 0; i < lam.size(); ++i) {
                if (l(i) < 0.0 && u(i) > 0.0) {
                    const double d = u(i) / (u(i) - l(i));
                    lam(i) = t <= 0.0 ? (1.0 + t) * d : d + t * (1.0 - d);
                }
            }
            ReluSlopes applied;
            st.s = relu(pre, ReluSlopes{lam}, &applied);
            ++st.step;
            if (used) used->push_back(std::move(applied));
            if (!finite_state(st.s, 1e9)) return kNegInf;
        }
        return margin(st);
    };

    const std::size_t dims = static_cast<std::size_t>(unroll);
    SearchResult sr;
    if (evals > 0) {
        sr = coordinate_search([&](const std::vector<double>& th) { return run(th, nullptr); },
                               dims, evals);
    }

    LambdaResult out;
    out.default_margin = run(std::vector<double>(dims, 0.0), nullptr);
    out.evals = sr.evals + 1;
    std::vector<double> theta = sr.theta;
    if (evals == 0 || !(sr.value > out.default_margin)) theta.assign(dims, 0.0);
    out.margin = run(theta, &out.slopes);
    return out;
}

LambdaResult optimize_lambda(const VerificationTask& task, int unroll, int evals) {
    const Setup st = prepare(task);
    const Eigen::Index p = st.weights.params.p();
    IterationState s0;
    s0.s = point(initial_state(task, st.zstar));
    s0.z_dims = p;
    s0.u_dims = task.g1.method == SolverMethod::PR ? p : 0;
    s0.shared_cols = st.x.order();
    EngineConfig cfg = task.engine;
    cfg.domain = Domain::ChZonotope;
    const Phase1Result p1 = phase1_contract(make_g1(task, st.weights, false), st.x, s0, cfg);
    if (p1.status != Status::Contained) {
        throw NonConvergence("optimize_lambda: phase 1 did not contract");
    }
    const IterationState start = z_part(p1.state);
    const double alpha = task.g2.policy == G2Policy::FbFixed
                             ? task.g2.alpha
                             : search_alpha2(st.weights, st.x, start, st.margin, task.g2);
    return optimize_lambda(FbOperator(st.weights, alpha), st.x, start, st.margin, unroll, evals);
}

Verdict verify_local(const VerificationTask& task) {
    const auto t0 = Clock::now();
    const Setup st = prepare(task);
    return run_pipeline(task, st, false, t0);
}

Verdict verify_box(const VerificationTask& task) {
    const auto t0 = Clock::now();
    const Setup st = prepare(task);
    return run_pipeline(task, st, true, t0);
}

Verdict verify_kleene(const VerificationTask& task, KleeneDomain domain, int unroll_k) {
    if (unroll_k < 0) throw std::invalid_argument("verify_kleene: unroll_k must be >= 0");
    const auto t0 = Clock::now();
    const Setup st = prepare(task);
    const bool box = domain == KleeneDomain::Box;
    const Eigen::Index p = st.weights.params.p();
    if (!(task.kleene.alpha > 0.0)) throw std::invalid_argument("verify_kleene: alpha must be > 0");
    const AbstractTransformer g = make_solver(task.kleene, st.weights, box);
    const Eigen::Index shared = box ? 0 : st.x.order();
    const double abort_width = task.engine.abort_width;

    IterationState state;
    const Eigen::Index n = task.kleene.method == SolverMethod::PR ? 2 * p : p;
    state.s = box ? from_box(Vector::Zero(n), Vector::Zero(n)) : point(Vector::Zero(n));
    state.z_dims = p;
    state.u_dims = n - p;
    state.shared_cols = shared;

    Verdict v;
    auto finish = [&](Status s) {
        v.status = s;
        if (s == Status::Contained) {
            v.margin = st.margin(state);
            v.status = v.margin > 0.0 ? Status::Certified : Status::Unknown;
        }
        v.final_state = state;
        v.wallclock = seconds_since(t0);
        return v;
    };
    auto log = [&](const char* phase) {
        TraceRow r;
        r.step = state.step;
        r.phase = phase;
        r.mean_width = mean_width(state.s);
        v.trace.push_back(r);
    };

    for (int i = 0; i < unroll_k; ++i) {
        state.s = g.apply(st.x, state.s);
        ++state.step;
        log("unroll");
        if (!finite_state(state.s, abort_width)) return finish(Status::Diverged);
    }

    constexpr int kWidenAfter = 200;
    int joins = 0;
    ChZonotope next = g.apply(st.x, state.s);
    while (true) {
        if (!finite_state(next, abort_width)) return finish(Status::Diverged);
        Hull cur = interval_hull(state.s);
        if (joins > 0 && hull_within(cur, next)) {
            v.phase1_steps = state.step;
            return finish(Status::Contained);
        }
        if (joins >= task.engine.n_max) return finish(Status::Exhausted);
        auto [nl, nu] = interval_hull(next);
        Vector lo = cur.first.cwiseMin(nl);
        Vector hi = cur.second.cwiseMax(nu);
        if (joins >= kWidenAfter) {
            const double grow = 10.0;
            for (Eigen::Index i = 0; i < lo.size(); ++i) {
                if (nl(i) < cur.first(i)) lo(i) = cur.first(i) - grow * (cur.first(i) - nl(i));
                if (nu(i) > cur.second(i)) hi(i) = cur.second(i) + grow * (nu(i) - cur.second(i));
            }
        }
        const ChZonotope joined = from_box(0.5 * (lo + hi), (0.5 * (hi - lo)).cwiseMax(0.0));
        state.s = box ? to_box(joined) : with_shared_prefix(joined, shared);
        ++joins;
        ++state.step;
        log("join");
        if (!finite_state(state.s, abort_width)) return finish(Status::Diverged);
        next = g.apply(st.x, state.s);
    }
}

std::string RegionReport::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    const Eigen::Index q = leaves.empty() ? 0 : leaves.front().lo.size();
    os << "depth,label,certified,margin";
    for (Eigen::Index i = 0; i < q; ++i) os << ",lo_" << i << ",hi_" << i;
    os << '\n';
    for (const auto& leaf : leaves) {
        os << leaf.depth << ',' << leaf.label << ',' << (leaf.certified ? 1 : 0) << ','
           << leaf.margin;
        for (Eigen::Index i = 0; i < q; ++i) os << ',' << leaf.lo(i) << ',' << leaf.hi(i);
        os << '\n';
    }
    return os.str();
}

RegionReport verify_global(const VerificationTask& base, const Vector& lo, const Vector& hi,
                           int max_depth, int jobs) {
    if (lo.size() != hi.size() || lo.size() != base.model.q()) {
        throw ShapeMismatch("verify_global: bounds have wrong length");
    }
    if ((hi.array() < lo.array()).any()) throw std::invalid_argument("verify_global: lo > hi");
    if (max_depth < 0) throw std::invalid_argument("verify_global: max_depth must be >= 0");
    jobs = std::max(1, jobs);
    const MonDeqWeights w = build_weights(base.model);

    auto volume = [](const Vector& l, const Vector& h) {
        double v = 1.0;
        for (Eigen::Index i = 0; i < l.size(); ++i) {
            const double d = h(i) - l(i);
            if (d > 0.0) v *= d;
        }
        return v;
    };

    auto check = [&](RegionLeaf& leaf) {
        const Vector c = 0.5 * (leaf.lo + leaf.hi);
        VerificationTask t = base;
        t.x = c;
        t.radius = 0.5 * (leaf.hi - leaf.lo);
        leaf.label = classify(base.model, solve_fixpoint(w, c, base.g1));
        t.target = leaf.label;
        const Verdict v = verify_local(t);
        leaf.status = v.status;
        leaf.certified = v.status == Status::Certified;
        leaf.margin = v.margin;
    };

    RegionReport report;
    std::vector<RegionLeaf> level;
    level.push_back(RegionLeaf{lo, hi, 0});
    const double total = volume(lo, hi);
    double certified_volume = 0.0;

    while (!level.empty()) {
        std::atomic<std::size_t> next{0};
        std::mutex err_mu;
        std::exception_ptr err;
        auto worker = [&] {
            for (std::size_t i = next++; i < level.size(); i = next++) {
                try {
                    check(level[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        };
        const int n_threads = std::min<int>(jobs, static_cast<int>(level.size()));
        std::vector<std::thread> pool;
        for (int i = 1; i < n_threads; ++i) pool.emplace_back(worker);
        worker();
        for (auto& th : pool) th.join();
        if (err) std::rethrow_exception(err);

        std::vector<RegionLeaf> children;
        for (auto& leaf : level) {
            if (leaf.certified || leaf.depth >= max_depth) {
                if (leaf.certified) certified_volume += volume(leaf.lo, leaf.hi);
                report.leaves.push_back(std::move(leaf));
                continue;
            }
            Eigen::Index dim = 0;
            (leaf.hi - leaf.lo).maxCoeff(&dim);
            const double mid = 0.5 * (leaf.lo(dim) + leaf.hi(dim));
            RegionLeaf a{leaf.lo, leaf.hi, leaf.depth + 1};
            RegionLeaf b{leaf.lo, leaf.hi, leaf.depth + 1};
            a.hi(dim) = mid;
            b.lo(dim) = mid;
            children.push_back(std::move(a));
            children.push_back(std::move(b));
        }
        level = std::move(children);
    }
    report.certified_fraction = total > 0.0 ? certified_volume / total : 0.0;
    return report;
}

} // namespace fixcert

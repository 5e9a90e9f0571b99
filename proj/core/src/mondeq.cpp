// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#include "fixcert/mondeq.hpp"

#include <cmath>
#include <random>
#include <string>

namespace fixcert {

namespace {

void require_shape(const Matrix& m, Eigen::Index r, Eigen::Index c, const char* name) {
    if (m.rows() != r || m.cols() != c) {
        throw ShapeMismatch(std::string(name) + " is " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()) + ", expected " + std::to_string(r) +
                            "x" + std::to_string(c));
    }
}

void require_len(const Vector& v, Eigen::Index n, const char* name) {
    if (v.size() != n) {
        throw ShapeMismatch(std::string(name) + " has length " + std::to_string(v.size()) +
                            ", expected " + std::to_string(n));
    }
}

// Image of the joint (s, x) abstraction under s' = L s + K x + c. Generator
// columns of x keep their position at the front of the result.
ChZonotope joint_affine(const ChZonotope& x, const ChZonotope& s, const Matrix& L,
                        const Matrix& K, const Vector& c) {
    const Eigen::Index n_in = x.order();
    const Matrix& S = s.generators();
    const Eigen::Index shared = std::min(n_in, S.cols());
    const Eigen::Index other = S.cols() - shared;
    const Vector& sb = s.box();
    const Vector& xb = x.box();

    Eigen::Index nb = 0;
    for (Eigen::Index i = 0; i < sb.size(); ++i) nb += sb(i) > 0.0 ? 1 : 0;
    for (Eigen::Index i = 0; i < xb.size(); ++i) nb += xb(i) > 0.0 ? 1 : 0;

    Matrix out(L.rows(), n_in + other + nb);
    if (n_in > 0) {
        out.leftCols(n_in).noalias() = K * x.generators();
        if (shared > 0) out.leftCols(shared).noalias() += L * S.leftCols(shared);
    }
    if (other > 0) out.middleCols(n_in, other).noalias() = L * S.rightCols(other);
    Eigen::Index j = n_in + other;
    for (Eigen::Index i = 0; i < sb.size(); ++i) {
        if (sb(i) > 0.0) out.col(j++) = L.col(i) * sb(i);
    }
    for (Eigen::Index i = 0; i < xb.size(); ++i) {
        if (xb(i) > 0.0) out.col(j++) = K.col(i) * xb(i);
    }
    Vector center = L * s.center() + K * x.center() + c;
    return ChZonotope(std::move(center), std::move(out), Vector::Zero(L.rows()));
}

// Interval pre-activation center and radius of L s + K x + c.
std::pair<Vector, Vector> interval_affine(const ChZonotope& x, const ChZonotope& s,
                                          const Matrix& L, const Matrix& K, const Vector& c) {
    auto [sl, su] = interval_hull(s);
    auto [xl, xu] = interval_hull(x);
    Vector mid = L * (0.5 * (sl + su)) + K * (0.5 * (xl + xu)) + c;
    Vector rad = L.cwiseAbs() * (0.5 * (su - sl)) + K.cwiseAbs() * (0.5 * (xu - xl));
    return {std::move(mid), std::move(rad)};
}

void interval_relu(Vector& lo, Vector& hi) {
    lo = lo.cwiseMax(0.0);
    hi = hi.cwiseMax(0.0);
}

ChZonotope box_from_bounds(const Vector& lo, const Vector& hi) {
    return ChZonotope(0.5 * (lo + hi), Matrix(lo.size(), 0), (0.5 * (hi - lo)).cwiseMax(0.0));
}

} // namespace

MonDeqWeights build_weights(const MonDeqParams& params) {
    const Eigen::Index p = params.P.rows();
    const Eigen::Index q = params.U.cols();
    const Eigen::Index r = params.V.rows();
    if (p == 0) throw ShapeMismatch("model has zero latent dimension");
    require_shape(params.P, p, p, "P");
    require_shape(params.Q, p, p, "Q");
    require_shape(params.U, p, q, "U");
    require_len(params.bias, p, "bias");
    require_shape(params.V, r, p, "V");
    require_len(params.v, r, "v");
    if (!(params.m > 0.0)) throw std::invalid_argument("monotonicity parameter m must be > 0");

    MonDeqWeights w;
    w.params = params;
    const Matrix I = Matrix::Identity(p, p);
    w.W = (1.0 - params.m) * I - params.P.transpose() * params.P + params.Q -
          params.Q.transpose();
    w.I_minus_W = I - w.W;
    const double lo = numerics::min_sym_eig(w.I_minus_W);
    if (lo < params.m - 1e-6 * std::max(1.0, params.m)) {
        throw std::runtime_error("monotonicity check failed: min eigenvalue " +
                                 std::to_string(lo));
    }
    return w;
}

double fb_alpha_max(const MonDeqWeights& w, double m) {
    const double n = w.I_minus_W.norm();
    return 2.0 * m / (n * n);
}

double fb_alpha_max_spectral(const MonDeqWeights& w, double m) {
    const double n = numerics::spectral_norm(w.I_minus_W);
    return 2.0 * m / (n * n);
}

Vector fb_step(const MonDeqWeights& w, const Vector& x, const Vector& s, double alpha) {
    const auto& pr = w.params;
    Vector pre = (1.0 - alpha) * s + alpha * (w.W * s + pr.U * x + pr.bias);
    return pre.cwiseMax(0.0);
}

FbOperator::FbOperator(const MonDeqWeights& w, double alpha) : alpha_(alpha) {
    const Eigen::Index p = w.W.rows();
    L_ = (1.0 - alpha) * Matrix::Identity(p, p) + alpha * w.W;
    K_ = alpha * w.params.U;
    c_ = alpha * w.params.bias;
}

Vector FbOperator::step(const Vector& x, const Vector& s) const {
    return (L_ * s + K_ * x + c_).cwiseMax(0.0);
}

ChZonotope FbOperator::preactivation(const ChZonotope& x, const ChZonotope& s) const {
    return joint_affine(x, s, L_, K_, c_);
}

ChZonotope FbOperator::abstract(const ChZonotope& x, const ChZonotope& s,
                                const std::optional<ReluSlopes>& slopes,
                                ReluSlopes* applied) const {
    return relu(preactivation(x, s), slopes, applied);
}

ChZonotope FbOperator::box_step(const ChZonotope& x, const ChZonotope& s) const {
    auto [mid, rad] = interval_affine(x, s, L_, K_, c_);
    Vector lo = mid - rad;
    Vector hi = mid + rad;
    interval_relu(lo, hi);
    return box_from_bounds(lo, hi);
}

PrOperator::PrOperator(const MonDeqWeights& w, double alpha)
    : alpha_(alpha), p_(w.W.rows()), U_(w.params.U), bias_(w.params.bias) {
    const Matrix I = Matrix::Identity(p_, p_);
    M_ = numerics::invert(I + alpha * w.I_minus_W);
    const Matrix T = 2.0 * M_ - I;
    const Eigen::Index q = w.params.U.cols();

    // u' = T (2 z - u) + 2 alpha M (U x + b); z' = ReLU(u')
    Matrix Lu(p_, 2 * p_);
    Lu << 2.0 * T, -T;
    const Matrix Ku = 2.0 * alpha * M_ * w.params.U;
    const Vector cu = 2.0 * alpha * M_ * w.params.bias;

    L_.resize(2 * p_, 2 * p_);
    L_ << Lu, Lu;
    K_.resize(2 * p_, q);
    K_ << Ku, Ku;
    c_.resize(2 * p_);
    c_ << cu, cu;
}

Vector PrOperator::step(const Vector& x, const Vector& s) const {
    if (s.size() != 2 * p_) throw ShapeMismatch("PrOperator: state must have length 2p");
    const Vector u_half = 2.0 * s.head(p_) - s.tail(p_);
    const Vector z_half = M_ * (u_half + alpha_ * (U_ * x + bias_));
    const Vector u_next = 2.0 * z_half - u_half;
    Vector out(2 * p_);
    out << u_next.cwiseMax(0.0), u_next;
    return out;
}

ChZonotope PrOperator::abstract(const ChZonotope& x, const ChZonotope& s) const {
    return relu_rows(joint_affine(x, s, L_, K_, c_), 0, p_);
}

ChZonotope PrOperator::box_step(const ChZonotope& x, const ChZonotope& s) const {
    auto [mid, rad] = interval_affine(x, s, L_, K_, c_);
    Vector lo = mid - rad;
    Vector hi = mid + rad;
    lo.head(p_) = lo.head(p_).cwiseMax(0.0);
    hi.head(p_) = hi.head(p_).cwiseMax(0.0);
    return box_from_bounds(lo, hi);
}

Vector pr_step(const MonDeqWeights& w, const Matrix& M, const Vector& x, const Vector& s,
               double alpha) {
    const Eigen::Index p = w.W.rows();
    if (s.size() != 2 * p) throw ShapeMismatch("pr_step: state must have length 2p");
    const Vector z = s.head(p);
    const Vector u = s.tail(p);
    const Vector u_half = 2.0 * z - u;
    const Vector z_half = M * (u_half + alpha * (w.params.U * x + w.params.bias));
    const Vector u_next = 2.0 * z_half - u_half;
    Vector out(2 * p);
    out << u_next.cwiseMax(0.0), u_next;
    return out;
}

Vector solve_fixpoint(const MonDeqWeights& w, const Vector& x, const SolverConfig& cfg) {
    const Eigen::Index p = w.W.rows();
    if (x.size() != w.params.U.cols()) throw ShapeMismatch("solve_fixpoint: input length");
    auto run = [&](auto&& step, Vector s) {
        for (long it = 0; it < cfg.max_steps; ++it) {
            Vector next = step(s);
            const double res = (next - s).norm();
            s = std::move(next);
            if (res <= cfg.tol) return s;
            if (!std::isfinite(res) || res > 1e150) break;
        }
        throw NonConvergence("solve_fixpoint: residual above tolerance after " +
                             std::to_string(cfg.max_steps) + " steps");
    };
    if (cfg.method == SolverMethod::FB) {
        FbOperator op(w, cfg.alpha);
        return run([&](const Vector& s) { return op.step(x, s); }, Vector::Zero(p));
    }
    PrOperator op(w, cfg.alpha);
    Vector s = run([&](const Vector& s) { return op.step(x, s); }, Vector::Zero(2 * p));
    return s.head(p);
}

ChZonotope fb_abstract(const MonDeqWeights& w, const ChZonotope& x, const ChZonotope& s,
                       double alpha) {
    return FbOperator(w, alpha).abstract(x, s);
}

ChZonotope pr_abstract(const MonDeqWeights& w, const ChZonotope& x, const ChZonotope& s,
                       double alpha) {
    return PrOperator(w, alpha).abstract(x, s);
}

Vector logits(const MonDeqParams& params, const Vector& z) {
    return params.V * z + params.v;
}

int classify(const MonDeqParams& params, const Vector& z) {
    const Vector y = logits(params, z);
    if (y.size() == 1) return y(0) > 0.0 ? 1 : 0;
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < y.size(); ++i) {
        if (y(i) > y(best)) best = i;
    }
    return static_cast<int>(best);
}

std::vector<MarginTerm> margin_terms(const MonDeqParams& params, int target) {
    const Eigen::Index r = params.V.rows();
    std::vector<MarginTerm> out;
    if (r == 1) {
        if (target != 0 && target != 1) {
            throw std::invalid_argument("target must be 0 or 1 for a single-output model");
        }
        const double sign = target == 1 ? 1.0 : -1.0;
        out.push_back({sign * params.V.row(0).transpose(), sign * params.v(0)});
        return out;
    }
    if (target < 0 || target >= r) throw std::invalid_argument("target class out of range");
    for (Eigen::Index i = 0; i < r; ++i) {
        if (i == target) continue;
        out.push_back({(params.V.row(target) - params.V.row(i)).transpose(),
                       params.v(target) - params.v(i)});
    }
    return out;
}

MonDeqParams random_monotone_model(int p, int q, int r, double m, std::uint64_t seed) {
    if (p < 1 || q < 1 || r < 1) throw std::invalid_argument("model sizes must be >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> half(-0.5, 0.5);
    const double scale = 1.0 / std::sqrt(static_cast<double>(p));
    auto fill = [&](Eigen::Index rows, Eigen::Index cols, auto& dist, double k) {
        Matrix out(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = k * dist(rng);
        }
        return out;
    };
    MonDeqParams mp;
    mp.m = m;
    mp.P = fill(p, p, unit, scale);
    mp.Q = fill(p, p, unit, scale);
    mp.U = fill(p, q, unit, scale);
    mp.bias = fill(p, 1, half, 1.0);
    mp.V = fill(r, p, unit, scale);
    mp.v = fill(r, 1, half, 1.0);
    return mp;
}

MonDeqParams example_model() {
    MonDeqParams mp;
    mp.m = 4.0;
    mp.P = Matrix::Identity(2, 2);
    mp.Q.resize(2, 2);
    mp.Q << 1, 0, 1, 0;
    mp.U.resize(2, 2);
    mp.U << 1, 1, -1, 1;
    mp.bias = Vector::Zero(2);
    mp.V.resize(1, 2);
    mp.V << 1, -1;
    mp.v = Vector::Zero(1);
    return mp;
}

ChZonotope input_box(const Vector& center, const Vector& radius) {
    if (center.size() != radius.size()) throw ShapeMismatch("input_box: size mismatch");
    Eigen::Index n = 0;
    for (Eigen::Index i = 0; i < radius.size(); ++i) {
        if (radius(i) < 0.0) throw std::invalid_argument("input_box: negative radius");
        n += radius(i) > 0.0 ? 1 : 0;
    }
    Matrix E = Matrix::Zero(center.size(), n);
    Eigen::Index j = 0;
    for (Eigen::Index i = 0; i < radius.size(); ++i) {
        if (radius(i) > 0.0) E(i, j++) = radius(i);
    }
    return ChZonotope(center, std::move(E), Vector::Zero(center.size()));
}

} // namespace fixcert

// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#include "fixcert/chzono.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fixcert {

namespace {

constexpr double kCoeffFloor = 1e-12;

std::string dims(Eigen::Index r, Eigen::Index c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

} // namespace

ChZonotope::ChZonotope(Vector center, Matrix generators, Vector box, bool proper,
                       std::shared_ptr<const Matrix> inverse)
    : a_(std::move(center)), A_(std::move(generators)), b_(std::move(box)), proper_(proper),
      inv_(std::move(inverse)) {
    if (A_.rows() != a_.size()) {
        if (A_.size() == 0) {
            A_.resize(a_.size(), 0);
        } else {
            throw ShapeMismatch("ChZonotope: generators " + dims(A_.rows(), A_.cols()) +
                                " for center of length " + std::to_string(a_.size()));
        }
    }
    if (b_.size() != a_.size()) {
        throw ShapeMismatch("ChZonotope: box of length " + std::to_string(b_.size()) +
                            " for center of length " + std::to_string(a_.size()));
    }
    if (b_.size() > 0 && b_.minCoeff() < 0.0) {
        throw std::invalid_argument("ChZonotope: negative box radius");
    }
    if (proper_ && A_.cols() != A_.rows()) proper_ = false;
    if (!proper_) inv_.reset();
}

ChZonotope point(const Vector& a) {
    return ChZonotope(a, Matrix(a.size(), 0), Vector::Zero(a.size()));
}

ChZonotope from_box(const Vector& center, const Vector& radius) {
    if (center.size() != radius.size()) throw ShapeMismatch("from_box: size mismatch");
    if (radius.size() > 0 && radius.minCoeff() < 0.0) {
        throw std::invalid_argument("from_box: negative radius");
    }
    const bool proper = radius.size() > 0 && radius.minCoeff() > 0.0;
    std::shared_ptr<const Matrix> inv;
    if (proper) inv = std::make_shared<const Matrix>(radius.cwiseInverse().asDiagonal());
    return ChZonotope(center, Matrix(radius.asDiagonal()), Vector::Zero(center.size()), proper,
                      std::move(inv));
}

Hull interval_hull(const ChZonotope& z) {
    Vector r = z.box();
    if (z.order() > 0) r += z.generators().cwiseAbs().rowwise().sum();
    return {z.center() - r, z.center() + r};
}

double mean_width(const ChZonotope& z) {
    if (z.dim() == 0) return 0.0;
    auto [lo, hi] = interval_hull(z);
    return (hi - lo).mean();
}

double max_width(const ChZonotope& z) {
    if (z.dim() == 0) return 0.0;
    auto [lo, hi] = interval_hull(z);
    return (hi - lo).maxCoeff();
}

ChZonotope affine(const ChZonotope& z, const Matrix& w, const Vector& c) {
    if (w.cols() != z.dim()) {
        throw ShapeMismatch("affine: map " + dims(w.rows(), w.cols()) + " on dimension " +
                            std::to_string(z.dim()));
    }
    if (c.size() != w.rows()) throw ShapeMismatch("affine: offset length mismatch");

    const Vector& b = z.box();
    const Eigen::Index k = z.order();
    Eigen::Index nb = 0;
    for (Eigen::Index i = 0; i < b.size(); ++i) nb += b(i) > 0.0 ? 1 : 0;

    Matrix out(w.rows(), k + nb);
    if (k > 0) out.leftCols(k).noalias() = w * z.generators();
    Eigen::Index j = k;
    for (Eigen::Index i = 0; i < b.size(); ++i) {
        if (b(i) > 0.0) out.col(j++) = w.col(i) * b(i);
    }
    Vector center = w * z.center() + c;
    return ChZonotope(std::move(center), std::move(out), Vector::Zero(w.rows()));
}

ChZonotope relu_rows(const ChZonotope& z, Eigen::Index begin, Eigen::Index count,
                     const std::optional<ReluSlopes>& slopes, ReluSlopes* applied) {
    if (begin < 0 || count < 0 || begin + count > z.dim()) {
        throw ShapeMismatch("relu: row range out of bounds");
    }
    if (slopes && slopes->lambda.size() != count) {
        throw ShapeMismatch("relu: slope vector has length " +
                            std::to_string(slopes->lambda.size()) + ", expected " +
                            std::to_string(count));
    }
    Vector a = z.center();
    Matrix A = z.generators();
    Vector b = z.box();
    bool proper = z.proper();
    bool changed = false;
    if (applied) applied->lambda = Vector::Ones(count);

    Vector gen_abs = A.cols() > 0 ? Vector(A.cwiseAbs().rowwise().sum()) : Vector::Zero(a.size());
    for (Eigen::Index r = 0; r < count; ++r) {
        const Eigen::Index i = begin + r;
        if (slopes) {
            const double lam = slopes->lambda(r);
            if (!(lam >= 0.0 && lam <= 1.0)) {
                throw InvalidSlope("relu: slope " + std::to_string(lam) + " outside [0, 1]");
            }
        }
        const double rad = gen_abs(i) + b(i);
        const double l = a(i) - rad;
        const double u = a(i) + rad;
        if (l >= 0.0) continue;
        changed = true;
        if (u <= 0.0) {
            A.row(i).setZero();
            a(i) = 0.0;
            b(i) = 0.0;
            proper = false;
            if (applied) applied->lambda(r) = 0.0;
            continue;
        }
        const double thr = u / (u - l);
        const double lam = slopes ? slopes->lambda(r) : thr;
        const double mu = lam <= thr ? 0.5 * (1.0 - lam) * u : -0.5 * lam * l;
        A.row(i) *= lam;
        a(i) = lam * a(i) + mu;
        b(i) = lam * b(i) + mu;
        if (lam == 0.0) proper = false;
        if (applied) applied->lambda(r) = lam;
    }
    if (!changed) return z;
    return ChZonotope(std::move(a), std::move(A), std::move(b), proper);
}

ChZonotope relu(const ChZonotope& z, const std::optional<ReluSlopes>& slopes,
                ReluSlopes* applied) {
    return relu_rows(z, 0, z.dim(), slopes, applied);
}

ChZonotope consolidate(const ChZonotope& z, const Matrix& basis, double w_mul, double w_add) {
    return consolidate(z, basis, numerics::invert(basis), w_mul, w_add);
}

ChZonotope consolidate(const ChZonotope& z, const Matrix& basis, const Matrix& basis_inv,
                       double w_mul, double w_add) {
    const Eigen::Index p = z.dim();
    if (basis.rows() != p || basis.cols() != p || basis_inv.rows() != p ||
        basis_inv.cols() != p) {
        throw ShapeMismatch("consolidate: basis must be " + dims(p, p));
    }
    if (!(w_mul >= 0.0) || !(w_add >= 0.0)) {
        throw std::invalid_argument("consolidate: negative expansion");
    }
    Vector c = Vector::Zero(p);
    if (z.order() > 0) c = (basis_inv * z.generators()).cwiseAbs().rowwise().sum();
    c = (1.0 + w_mul) * c + Vector::Constant(p, w_add);
    c = c.cwiseMax(kCoeffFloor);

    Matrix gens = basis * c.asDiagonal();
    auto inv = std::make_shared<const Matrix>(c.cwiseInverse().asDiagonal() * basis_inv);
    return ChZonotope(z.center(), std::move(gens), z.box(), true, std::move(inv));
}

bool contains(const ChZonotope& outer, const ChZonotope& inner) {
    if (outer.dim() != inner.dim()) throw ShapeMismatch("contains: dimension mismatch");
    if (!outer.proper()) return false;

    if (outer.order() == inner.order() && outer.center() == inner.center() &&
        outer.box() == inner.box() && outer.generators() == inner.generators()) {
        return true;
    }

    Matrix computed;
    const Matrix* inv = outer.cached_inverse();
    if (!inv) {
        try {
            computed = numerics::invert(outer.generators());
        } catch (const SingularMatrix&) {
            return false;
        }
        inv = &computed;
    }

    const Vector d = ((inner.center() - outer.center()).cwiseAbs() + inner.box() - outer.box())
                         .cwiseMax(0.0);
    Vector lhs = inv->cwiseAbs() * d;
    if (inner.order() > 0) lhs += ((*inv) * inner.generators()).cwiseAbs().rowwise().sum();
    return (lhs.array() <= 1.0).all();
}

std::pair<double, double> linear_bounds(const ChZonotope& z, const Vector& d) {
    if (d.size() != z.dim()) throw ShapeMismatch("linear_bounds: direction length mismatch");
    const double mid = d.dot(z.center());
    double rad = d.cwiseAbs().dot(z.box());
    if (z.order() > 0) rad += (d.transpose() * z.generators()).cwiseAbs().sum();
    return {mid - rad, mid + rad};
}

ChZonotope marginal(const ChZonotope& z, Eigen::Index begin, Eigen::Index count) {
    if (begin < 0 || count < 0 || begin + count > z.dim()) {
        throw ShapeMismatch("marginal: row range out of bounds");
    }
    return ChZonotope(z.center().segment(begin, count),
                      z.generators().middleRows(begin, count), z.box().segment(begin, count));
}

ChZonotope to_box(const ChZonotope& z) {
    Vector r = z.box();
    if (z.order() > 0) r += z.generators().cwiseAbs().rowwise().sum();
    return ChZonotope(z.center(), Matrix(z.dim(), 0), std::move(r));
}

ChZonotope hull_join(const ChZonotope& a, const ChZonotope& b) {
    if (a.dim() != b.dim()) throw ShapeMismatch("hull_join: dimension mismatch");
    auto [la, ua] = interval_hull(a);
    auto [lb, ub] = interval_hull(b);
    const Vector lo = la.cwiseMin(lb);
    const Vector hi = ua.cwiseMax(ub);
    return from_box(0.5 * (lo + hi), (0.5 * (hi - lo)).cwiseMax(0.0));
}

bool hull_within(const Hull& outer, const ChZonotope& inner) {
    auto [lo, hi] = interval_hull(inner);
    return (lo.array() >= outer.first.array()).all() && (hi.array() <= outer.second.array()).all();
}

} // namespace fixcert

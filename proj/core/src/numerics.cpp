// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#include "fixcert/numerics.hpp"

#include <cmath>
#include <string>

namespace fixcert::numerics {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kRankTol = 1e-10;
constexpr double kSignTol = 1e-12;

Vector power_start(Eigen::Index n) {
    // fixed, irregular start so no structured input is orthogonal to it
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        v(i) = 1.0 + 0.5 * std::sin(1.7 * static_cast<double>(i) + 0.3);
    }
    return v.normalized();
}

} // namespace

double max_abs(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

Matrix invert(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw ShapeMismatch("invert: matrix is " + std::to_string(m.rows()) + "x" +
                            std::to_string(m.cols()));
    }
    const Eigen::Index n = m.rows();
    if (n == 0) return Matrix(0, 0);
    if (!m.allFinite()) throw SingularMatrix("invert: non-finite entries");

    Eigen::PartialPivLU<Matrix> lu(m);
    const double rc = lu.rcond();
    if (!(rc >= 1.0 / kMaxCondition)) {
        throw SingularMatrix("invert: condition estimate exceeds 1e12");
    }
    Matrix inv = lu.inverse();
    if (!inv.allFinite()) throw SingularMatrix("invert: non-finite inverse");

    const double resid = max_abs(m * inv - Matrix::Identity(n, n));
    if (resid > 1e-8 * static_cast<double>(n)) {
        throw SingularMatrix("invert: residual too large");
    }
    return inv;
}

Matrix pca_basis(const Matrix& a) {
    const Eigen::Index p = a.rows();
    Matrix basis = Matrix::Zero(p, p);
    Eigen::Index filled = 0;

    if (a.cols() > 0 && max_abs(a) > 0.0) {
        Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU);
        const Vector& sv = svd.singularValues();
        const double tol = kRankTol * sv(0);
        for (Eigen::Index i = 0; i < sv.size() && sv(i) > tol; ++i) {
            basis.col(filled++) = svd.matrixU().col(i);
        }
    }

    // complete with standard basis vectors in index order
    for (Eigen::Index i = 0; i < p && filled < p; ++i) {
        Vector v = Vector::Unit(p, i);
        for (int pass = 0; pass < 2; ++pass) {
            for (Eigen::Index j = 0; j < filled; ++j) {
                v -= basis.col(j).dot(v) * basis.col(j);
            }
        }
        const double nv = v.norm();
        if (nv > 1e-6) basis.col(filled++) = v / nv;
    }

    for (Eigen::Index j = 0; j < p; ++j) {
        for (Eigen::Index i = 0; i < p; ++i) {
            if (std::abs(basis(i, j)) > kSignTol) {
                if (basis(i, j) < 0.0) basis.col(j) *= -1.0;
                break;
            }
        }
    }
    return basis;
}

double spectral_norm(const Matrix& m) {
    if (!m.allFinite()) throw NonConvergence("spectral_norm: non-finite input");
    if (m.size() == 0 || max_abs(m) == 0.0) return 0.0;

    Vector v = power_start(m.cols());
    double lambda = 0.0;
    for (int it = 0; it < 10000; ++it) {
        Vector w = m.transpose() * (m * v);
        const double next = v.dot(w);
        const double nw = w.norm();
        if (nw == 0.0) {
            // start vector fell into the null space; perturb deterministically
            v = (v + power_start(m.cols()).reverse()).normalized();
            continue;
        }
        v = w / nw;
        if (it > 0 && std::abs(next - lambda) <= 1e-10 * std::abs(next)) {
            return (m * v).norm();
        }
        lambda = next;
    }
    throw NonConvergence("spectral_norm: no convergence in 10000 iterations");
}

double min_sym_eig(const Matrix& m) {
    if (m.rows() != m.cols()) throw ShapeMismatch("min_sym_eig: matrix not square");
    if (m.rows() == 0) throw ShapeMismatch("min_sym_eig: empty matrix");
    const Matrix s = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(s, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NonConvergence("min_sym_eig: eigensolver failed");
    return es.eigenvalues()(0);
}

} // namespace fixcert::numerics

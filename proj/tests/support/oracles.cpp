// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace fixcert::testing {

bool lp_feasible(const Matrix& G, const Vector& h, double tol) {
    const Eigen::Index m = G.rows();
    const Eigen::Index n = G.cols();
    if (h.size() != m) throw std::invalid_argument("lp_feasible: shape mismatch");

    // Columns: n structural, m slacks, then one artificial per negative row, then rhs.
    std::vector<Eigen::Index> neg;
    for (Eigen::Index i = 0; i < m; ++i) {
        if (h(i) < 0.0) neg.push_back(i);
    }
    const Eigen::Index na = static_cast<Eigen::Index>(neg.size());
    if (na == 0) return true;
    const Eigen::Index cols = n + m + na;
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, cols + 1);
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
    Eigen::Index a = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const double sign = h(i) < 0.0 ? -1.0 : 1.0;
        T.row(i).head(n) = sign * G.row(i);
        T(i, n + i) = sign;
        T(i, cols) = sign * h(i);
        if (h(i) < 0.0) {
            T(i, n + m + a) = 1.0;
            basis[static_cast<std::size_t>(i)] = n + m + a;
            ++a;
        } else {
            basis[static_cast<std::size_t>(i)] = n + i;
        }
    }
    // Objective row holds the reduced costs of minimizing the artificial sum.
    for (Eigen::Index i : neg) T.row(m) -= T.row(i);
    for (Eigen::Index j = n + m; j < cols; ++j) T(m, j) = 0.0;

    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    for (int iter = 0; iter < 100000; ++iter) {
        Eigen::Index enter = -1;
        for (Eigen::Index j = 0; j < cols; ++j) {
            if (T(m, j) < -1e-12) {
                enter = j;
                break;
            }
        }
        if (enter < 0) break;
        Eigen::Index leave = -1;
        double best = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (T(i, enter) > 1e-12) {
                const double ratio = T(i, cols) / T(i, enter);
                if (leave < 0 || ratio < best - 1e-15 ||
                    (std::abs(ratio - best) <= 1e-15 &&
                     basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
                    leave = i;
                    best = ratio;
                }
            }
        }
        if (leave < 0) break;
        T.row(leave) /= T(leave, enter);
        for (Eigen::Index i = 0; i <= m; ++i) {
            if (i != leave && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave);
        }
        basis[static_cast<std::size_t>(leave)] = enter;
    }
    return -T(m, cols) <= tol * scale;
}

bool lp_member(const ChZonotope& z, const Vector& y, double tol) {
    const Eigen::Index p = z.dim();
    const Eigen::Index k = z.order();
    if (y.size() != p) throw std::invalid_argument("lp_member: dimension mismatch");
    const Vector d = y - z.center();
    if (k == 0) return ((d.cwiseAbs() - z.box()).array() <= tol).all();
    // e = u - 1 with u in [0, 2]; |d - A e| <= b.
    const Matrix& A = z.generators();
    const Vector A1 = A.rowwise().sum();
    Matrix G(2 * p + k, k);
    Vector h(2 * p + k);
    G.topRows(p) = A;
    h.head(p) = d + A1 + z.box();
    G.middleRows(p, p) = -A;
    h.segment(p, p) = -(d + A1) + z.box();
    G.bottomRows(k) = Matrix::Identity(k, k);
    h.tail(k) = Vector::Constant(k, 2.0);
    return lp_feasible(G, h + Vector::Constant(h.size(), tol), tol);
}

Vector jacobi_eigenvalues(const Matrix& m, double tol, int max_sweeps) {
    if (m.rows() != m.cols()) throw std::invalid_argument("jacobi: matrix must be square");
    Matrix a = 0.5 * (m + m.transpose());
    const Eigen::Index n = a.rows();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        }
        if (std::sqrt(off) <= tol * std::max(1.0, a.norm())) break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    Vector ev = a.diagonal();
    std::sort(ev.data(), ev.data() + ev.size());
    return ev;
}

Vector evaluate(const ChZonotope& z, const Vector& e, const Vector& beta) {
    Vector y = z.center() + z.box().cwiseProduct(beta);
    if (z.order() > 0) y += z.generators() * e;
    return y;
}

Vector sample(const ChZonotope& z, std::mt19937_64& rng, double vertex_prob) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::bernoulli_distribution vertex(vertex_prob);
    const bool at_vertex = vertex(rng);
    auto draw = [&] {
        const double v = u(rng);
        return at_vertex ? (v < 0.0 ? -1.0 : 1.0) : v;
    };
    Vector e(z.order());
    for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = draw();
    Vector beta(z.dim());
    for (Eigen::Index i = 0; i < beta.size(); ++i) beta(i) = draw();
    return evaluate(z, e, beta);
}

Vector sample_box(const Vector& center, const Vector& radius, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector y = center;
    for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += radius(i) * u(rng);
    return y;
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double lo,
                     double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
    }
    return m;
}

} // namespace fixcert::testing

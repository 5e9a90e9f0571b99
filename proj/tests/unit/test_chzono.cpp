// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "fixcert/chzono.hpp"
#include "fixcert/errors.hpp"
#include "fixcert/mondeq.hpp"
#include "oracles.hpp"

namespace fixcert {
namespace {

using testing::lp_member;
using testing::random_matrix;
using testing::sample;

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

ChZonotope random_z(Eigen::Index p, Eigen::Index k, std::mt19937_64& rng, double box = 0.2) {
    return ChZonotope(random_matrix(p, 1, rng).col(0), random_matrix(p, k, rng),
                      random_matrix(p, 1, rng, 0.0, box).col(0));
}

ChZonotope random_proper(Eigen::Index p, std::mt19937_64& rng) {
    const Matrix A = random_matrix(p, p, rng) + 1.5 * Matrix::Identity(p, p);
    return ChZonotope(random_matrix(p, 1, rng).col(0), A, random_matrix(p, 1, rng, 0.0, 0.2).col(0),
                      true);
}

TEST(ChZonotope, RejectsNegativeBox) {
    EXPECT_THROW(ChZonotope(Vector::Zero(1), Matrix::Zero(1, 0), Vector::Constant(1, -1.0)),
                 std::invalid_argument);
}

TEST(ChZonotope, RejectsShapeMismatch) {
    EXPECT_THROW(ChZonotope(Vector::Zero(2), Matrix::Zero(3, 1), Vector::Zero(2)), ShapeMismatch);
}

TEST(Point, HullIsThePoint) {
    const Vector a = vec({0.1231, 0.0846});
    const auto [l, u] = interval_hull(point(a));
    EXPECT_EQ(l, a);
    EXPECT_EQ(u, a);
    EXPECT_FALSE(point(a).proper());
    EXPECT_TRUE(lp_member(point(a), a));
    EXPECT_FALSE(lp_member(point(a), a + Vector::Constant(2, 1e-3)));
}

TEST(FromBox, MatchesInputBall) {
    const ChZonotope z = from_box(vec({0.2, 0.5}), vec({0.05, 0.05}));
    const auto [l, u] = interval_hull(z);
    EXPECT_NEAR(l(0), 0.15, 1e-15);
    EXPECT_NEAR(u(0), 0.25, 1e-15);
    EXPECT_NEAR(l(1), 0.45, 1e-15);
    EXPECT_NEAR(u(1), 0.55, 1e-15);
    EXPECT_TRUE(z.proper());
    EXPECT_TRUE(lp_member(z, vec({0.25, 0.45})));
    EXPECT_TRUE(lp_member(z, vec({0.15, 0.55})));
    EXPECT_FALSE(lp_member(z, vec({0.25 + 1e-6, 0.45})));
}

TEST(FromBox, ZeroRadiusIsPoint) {
    const ChZonotope z = from_box(vec({1.0, 2.0}), Vector::Zero(2));
    const auto [l, u] = interval_hull(z);
    EXPECT_EQ(l, u);
}

TEST(IntervalHull, ClosedFormExample) {
    Matrix A(1, 2);
    A << 1.0, 2.0;
    const auto [l, u] = interval_hull(ChZonotope(vec({1.0}), A, vec({0.5})));
    EXPECT_DOUBLE_EQ(l(0), -2.5);
    EXPECT_DOUBLE_EQ(u(0), 4.5);
}

TEST(IntervalHull, UpperCornerPlusEpsilonIsOutside) {
    std::mt19937_64 rng(12);
    const ChZonotope z = random_z(3, 5, rng);
    const auto [l, u] = interval_hull(z);
    Vector y = u;
    y(1) += 1e-6;
    EXPECT_FALSE(lp_member(z, y));
}

TEST(Affine, IdentityKeepsHull) {
    std::mt19937_64 rng(13);
    const ChZonotope z = random_z(3, 4, rng);
    const ChZonotope out = affine(z, Matrix::Identity(3, 3), Vector::Zero(3));
    EXPECT_TRUE(interval_hull(out).first.isApprox(interval_hull(z).first));
    EXPECT_TRUE(interval_hull(out).second.isApprox(interval_hull(z).second));
    EXPECT_EQ(out.box(), Vector::Zero(3));
    EXPECT_FALSE(out.proper());
}

TEST(Affine, OutputLayerOnFixpoint) {
    Matrix V(1, 2);
    V << 1.0, -1.0;
    const ChZonotope y = affine(point(vec({0.123076923, 0.084615385})), V, Vector::Zero(1));
    EXPECT_NEAR(y.center()(0), 0.0385, 1e-4);
}

TEST(Affine, FirstSolverStepCenter) {
    const MonDeqParams m = example_model();
    const ChZonotope out = affine(point(vec({0.2, 0.5})), m.U / 10.0, Vector::Zero(2));
    EXPECT_NEAR(out.center()(0), 0.07, 1e-15);
    EXPECT_NEAR(out.center()(1), 0.03, 1e-15);
}

TEST(Affine, SamplingSoundness) {
    std::mt19937_64 rng(14);
    for (int t = 0; t < 50; ++t) {
        const ChZonotope z = random_z(3, 4, rng);
        const Matrix w = random_matrix(2, 3, rng);
        const Vector c = random_matrix(2, 1, rng).col(0);
        const ChZonotope out = affine(z, w, c);
        for (int i = 0; i < 20; ++i) ASSERT_TRUE(lp_member(out, w * sample(z, rng) + c));
    }
}

TEST(Relu, StablePositiveUnchanged) {
    Matrix A(2, 1);
    A << 0.1, 0.2;
    const ChZonotope z(vec({1.0, 2.0}), A, vec({0.1, 0.1}));
    const ChZonotope out = relu(z);
    EXPECT_EQ(out.center(), z.center());
    EXPECT_EQ(out.generators(), z.generators());
    EXPECT_EQ(out.box(), z.box());
}

TEST(Relu, StableNegativeCollapsesToZero) {
    Matrix A(2, 1);
    A << 0.1, 0.2;
    const ChZonotope out = relu(ChZonotope(vec({-1.0, -2.0}), A, vec({0.1, 0.1})));
    const auto [l, u] = interval_hull(out);
    EXPECT_EQ(l, Vector::Zero(2));
    EXPECT_EQ(u, Vector::Zero(2));
}

TEST(Relu, CrossingDimensionDefaultSlope) {
    Matrix A(1, 1);
    A << 1.0;
    ReluSlopes applied;
    const ChZonotope out = relu(ChZonotope(vec({0.0}), A, vec({0.0})), std::nullopt, &applied);
    EXPECT_DOUBLE_EQ(applied.lambda(0), 0.5);
    EXPECT_DOUBLE_EQ(out.center()(0), 0.25);
    EXPECT_DOUBLE_EQ(out.box()(0), 0.25);
    EXPECT_DOUBLE_EQ(out.generators()(0, 0), 0.5);
}

TEST(Relu, CrossingDimensionWithBoxInput) {
    // (l, u) = (-1, 1) from a = 0, A = 0.5, b = 0.5; default slope 0.5 gives b' = 0.5 b + 0.25.
    Matrix A(1, 1);
    A << 0.5;
    const ChZonotope out = relu(ChZonotope(vec({0.0}), A, vec({0.5})));
    EXPECT_DOUBLE_EQ(out.center()(0), 0.25);
    EXPECT_DOUBLE_EQ(out.box()(0), 0.5 * 0.5 + 0.25);
}

TEST(Relu, RejectsSlopesOutsideUnitInterval) {
    Matrix A(1, 1);
    A << 1.0;
    const ChZonotope z(vec({0.0}), A, vec({0.0}));
    EXPECT_THROW(relu(z, ReluSlopes{vec({1.5})}), InvalidSlope);
    EXPECT_THROW(relu(z, ReluSlopes{vec({-0.1})}), InvalidSlope);
    EXPECT_THROW(relu(z, ReluSlopes{vec({std::nan("")})}), InvalidSlope);
}

TEST(Relu, SamplingSoundnessAllSlopes) {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    for (int t = 0; t < 60; ++t) {
        const ChZonotope z = random_z(3, 3, rng, 0.3);
        std::optional<ReluSlopes> slopes;
        if (t % 3 != 0) {
            Vector lam(3);
            for (int i = 0; i < 3; ++i) lam(i) = t % 3 == 1 ? u01(rng) : (u01(rng) < 0.5 ? 0.0 : 1.0);
            slopes = ReluSlopes{lam};
        }
        const ChZonotope out = relu(z, slopes);
        for (int i = 0; i < 20; ++i) {
            ASSERT_TRUE(lp_member(out, sample(z, rng).cwiseMax(0.0))) << "trial " << t;
        }
    }
}

TEST(Relu, DefaultSlopeHullBracket) {
    std::mt19937_64 rng(16);
    for (int t = 0; t < 100; ++t) {
        const ChZonotope z = random_z(4, 3, rng, 0.3);
        const auto [l, u] = interval_hull(z);
        const auto [ol, ou] = interval_hull(relu(z));
        for (int i = 0; i < 4; ++i) {
            const double floor = (l(i) < 0.0 && u(i) > 0.0) ? u(i) * l(i) / (u(i) - l(i)) : 0.0;
            EXPECT_GE(ol(i), floor - 1e-12);
            EXPECT_LE(ou(i), std::max(0.0, u(i)) + 1e-12);
            EXPECT_LE(ol(i), std::max(0.0, l(i)) + 1e-12);
            EXPECT_GE(ou(i), std::max(0.0, u(i)) - 1e-12);
        }
    }
}

TEST(ReluRows, OnlyTouchesSelectedRows) {
    Matrix A(2, 1);
    A << 1.0, 1.0;
    const ChZonotope z(vec({-3.0, -3.0}), A, Vector::Zero(2));
    const ChZonotope out = relu_rows(z, 0, 1);
    EXPECT_EQ(out.center()(0), 0.0);
    EXPECT_EQ(out.center()(1), -3.0);
}

TEST(Consolidate, RowSumsWithIdentityBasis) {
    Matrix A(2, 3);
    A << 1.0, 0.0, 1.0, 0.0, 1.0, 1.0;
    const ChZonotope z(Vector::Zero(2), A, Vector::Zero(2));
    const ChZonotope out = consolidate(z, Matrix::Identity(2, 2));
    EXPECT_TRUE(out.proper());
    EXPECT_TRUE(out.generators().isApprox(2.0 * Matrix::Identity(2, 2)));
    const ChZonotope exp = consolidate(z, Matrix::Identity(2, 2), 1e-3, 1e-2);
    EXPECT_NEAR(exp.generators()(0, 0), 2.012, 1e-12);
    EXPECT_NEAR(exp.generators()(1, 1), 2.012, 1e-12);
}

TEST(Consolidate, FixedPointOfAlignedGenerators) {
    std::mt19937_64 rng(17);
    const Matrix basis = numerics::pca_basis(random_matrix(3, 3, rng));
    const Vector d = vec({0.5, 1.0, 2.0});
    const ChZonotope z(Vector::Zero(3), basis * d.asDiagonal(), Vector::Zero(3));
    const ChZonotope out = consolidate(z, basis);
    EXPECT_LE((out.generators() - z.generators()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Consolidate, KeepsBoxAndCenter) {
    std::mt19937_64 rng(18);
    const ChZonotope z = random_z(3, 6, rng);
    const ChZonotope out = consolidate(z, numerics::pca_basis(z.generators()));
    EXPECT_EQ(out.center(), z.center());
    EXPECT_EQ(out.box(), z.box());
}

TEST(Consolidate, CoefficientWitnessAndHullGrowth) {
    std::mt19937_64 rng(19);
    for (int t = 0; t < 50; ++t) {
        const ChZonotope z = random_z(4, 9, rng);
        const Matrix basis = numerics::pca_basis(z.generators());
        const ChZonotope out = consolidate(z, basis);
        const Vector c = out.generators().colwise().norm();
        const Matrix binv = basis.transpose();
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (int i = 0; i < 50; ++i) {
            Vector nu(9);
            for (int j = 0; j < 9; ++j) nu(j) = u(rng);
            const Vector coords = (binv * z.generators() * nu).cwiseAbs();
            for (int j = 0; j < 4; ++j) EXPECT_LE(coords(j), c(j) + 1e-12);
        }
        const auto [l, h] = interval_hull(z);
        const auto [ol, oh] = interval_hull(out);
        EXPECT_TRUE((ol.array() <= l.array() + 1e-12).all());
        EXPECT_TRUE((oh.array() >= h.array() - 1e-12).all());
    }
}

TEST(Consolidate, SamplingSoundness) {
    std::mt19937_64 rng(20);
    for (int t = 0; t < 40; ++t) {
        const ChZonotope z = random_z(3, 7, rng);
        const ChZonotope out = consolidate(z, numerics::pca_basis(z.generators()), 1e-3, 1e-2);
        for (int i = 0; i < 20; ++i) ASSERT_TRUE(lp_member(out, sample(z, rng)));
    }
}

TEST(Contains, SelfContainment) {
    std::mt19937_64 rng(21);
    for (int t = 0; t < 50; ++t) {
        const ChZonotope z = random_proper(4, rng);
        EXPECT_TRUE(contains(z, z));
    }
}

TEST(Contains, HalfScaledInner) {
    std::mt19937_64 rng(22);
    const ChZonotope z = random_proper(3, rng);
    const ChZonotope inner(z.center(), 0.5 * z.generators(), 0.5 * z.box());
    EXPECT_TRUE(contains(z, inner));
}

TEST(Contains, FarTranslateIsNotContained) {
    std::mt19937_64 rng(23);
    const ChZonotope z = random_proper(3, rng);
    const auto [l, u] = interval_hull(z);
    const ChZonotope moved(z.center() + 3.0 * (u - l), z.generators(), z.box());
    EXPECT_FALSE(contains(z, moved));
}

TEST(Contains, ImproperOuterIsFalse) {
    std::mt19937_64 rng(24);
    const ChZonotope z = random_z(3, 5, rng);
    EXPECT_FALSE(contains(z, point(z.center())));
}

TEST(Contains, SoundAgainstLpOracle) {
    std::mt19937_64 rng(25);
    std::uniform_real_distribution<double> scale(0.2, 1.1);
    int positives = 0;
    for (int t = 0; t < 200; ++t) {
        const ChZonotope outer = random_proper(3, rng);
        const Matrix T = random_matrix(3, 3, rng, -0.3, 0.3) + scale(rng) * Matrix::Identity(3, 3);
        const ChZonotope inner = affine(outer, T, (Matrix::Identity(3, 3) - T) * outer.center() +
                                                      random_matrix(3, 1, rng, -0.1, 0.1).col(0));
        if (!contains(outer, inner)) continue;
        ++positives;
        for (int i = 0; i < 30; ++i) ASSERT_TRUE(lp_member(outer, sample(inner, rng)));
    }
    EXPECT_GT(positives, 10);
}

TEST(LinearBounds, AxisDirectionMatchesHull) {
    std::mt19937_64 rng(26);
    const ChZonotope z = random_z(3, 4, rng);
    const auto [l, u] = interval_hull(z);
    for (int i = 0; i < 3; ++i) {
        const auto [lo, hi] = linear_bounds(z, Vector::Unit(3, i));
        EXPECT_NEAR(lo, l(i), 1e-14);
        EXPECT_NEAR(hi, u(i), 1e-14);
    }
}

TEST(LinearBounds, OutputMarginOnFixpoint) {
    const auto [lo, hi] = linear_bounds(point(vec({0.123076923, 0.084615385})), vec({1.0, -1.0}));
    EXPECT_NEAR(lo, 0.0385, 1e-4);
    EXPECT_NEAR(hi, 0.0385, 1e-4);
}

TEST(LinearBounds, TightAgainstSampling) {
    std::mt19937_64 rng(27);
    const ChZonotope z = random_z(3, 4, rng);
    const Vector d = random_matrix(3, 1, rng).col(0);
    const auto [lo, hi] = linear_bounds(z, d);
    double best = -1e300;
    for (int i = 0; i < 100000; ++i) {
        const double v = d.dot(sample(z, rng, 0.5));
        EXPECT_LE(v, hi + 1e-12);
        EXPECT_GE(v, lo - 1e-12);
        best = std::max(best, v);
    }
    EXPECT_LE(hi - best, 1e-2 * std::max(1.0, std::abs(hi)));
}

TEST(Marginal, SelectsRows) {
    std::mt19937_64 rng(28);
    const ChZonotope z = random_z(4, 3, rng);
    const ChZonotope m = marginal(z, 1, 2);
    EXPECT_EQ(m.dim(), 2);
    EXPECT_EQ(m.center(), z.center().segment(1, 2));
    EXPECT_THROW(marginal(z, 3, 2), ShapeMismatch);
}

TEST(HullJoin, CoversBothOperands) {
    const ChZonotope a = from_box(vec({0.0}), vec({1.0}));
    const ChZonotope b = from_box(vec({3.0}), vec({0.5}));
    const auto [l, u] = interval_hull(hull_join(a, b));
    EXPECT_DOUBLE_EQ(l(0), -1.0);
    EXPECT_DOUBLE_EQ(u(0), 3.5);
    EXPECT_TRUE(hull_within(interval_hull(hull_join(a, b)), a));
    EXPECT_FALSE(hull_within(interval_hull(a), b));
}

TEST(ToBox, DropsGeneratorsKeepsHull) {
    std::mt19937_64 rng(29);
    const ChZonotope z = random_z(3, 4, rng);
    const ChZonotope b = to_box(z);
    EXPECT_EQ(b.order(), 0);
    EXPECT_TRUE(interval_hull(b).second.isApprox(interval_hull(z).second));
}

} // namespace
} // namespace fixcert

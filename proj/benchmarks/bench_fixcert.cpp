// Copyright (c) fixcert contributors.
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "fixcert/chzono.hpp"
#include "fixcert/householder.hpp"
#include "fixcert/numerics.hpp"
#include "fixcert/verifier.hpp"

namespace {

using namespace fixcert;

Matrix uniform(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
    }
    return m;
}

void BM_Contains(benchmark::State& state) {
    const Eigen::Index p = state.range(0);
    std::mt19937_64 rng(1);
    const Matrix A = uniform(p, p, rng) + 1.5 * Matrix::Identity(p, p);
    Matrix M = uniform(p, 2 * p, rng);
    for (Eigen::Index i = 0; i < p; ++i) M.row(i) *= 0.9 / M.row(i).cwiseAbs().sum();
    const Vector c = uniform(p, 1, rng).col(0);
    const Vector b = Vector::Constant(p, 0.1);
    const ChZonotope inner(c, A * M, 0.5 * b);
    for (auto _ : state) {
        const ChZonotope outer(c, A, b, true);
        benchmark::DoNotOptimize(contains(outer, inner));
    }
}
BENCHMARK(BM_Contains)->Arg(10)->Arg(40)->Arg(87)->Unit(benchmark::kMicrosecond);

void BM_Consolidate(benchmark::State& state) {
    const Eigen::Index p = state.range(0);
    std::mt19937_64 rng(2);
    const ChZonotope z(uniform(p, 1, rng).col(0), uniform(p, 2 * p, rng), Vector::Constant(p, 0.1));
    for (auto _ : state) {
        const Matrix basis = numerics::pca_basis(z.generators());
        benchmark::DoNotOptimize(consolidate(z, basis, 1e-3, 1e-2));
    }
}
BENCHMARK(BM_Consolidate)->Arg(10)->Arg(40)->Arg(87)->Unit(benchmark::kMicrosecond);

void BM_VerifyLocalExample(benchmark::State& state) {
    VerificationTask t;
    t.model = example_model();
    t.x = Vector(2);
    t.x << 0.2, 0.5;
    t.epsilon = 0.05;
    t.target = 1;
    for (auto _ : state) benchmark::DoNotOptimize(verify_local(t));
}
BENCHMARK(BM_VerifyLocalExample)->Unit(benchmark::kMicrosecond);

void BM_HouseholderRoot(benchmark::State& state) {
    const RootTask t;
    for (auto _ : state) benchmark::DoNotOptimize(analyze_root(t));
}
BENCHMARK(BM_HouseholderRoot)->Unit(benchmark::kMicrosecond);

} // namespace

BENCHMARK_MAIN();

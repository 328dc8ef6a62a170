#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "diraclab/greens.hpp"

using namespace diraclab;

namespace {

Eigen::VectorXcd dense_green(const LatticeOperator& op, cplx z) {
    const Eigen::MatrixXcd A = op.dense().cast<cplx>() - z * Eigen::MatrixXcd::Identity(op.dim(), op.dim());
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(op.dim());
    b[0] = 1.0;
    return A.partialPivLu().solve(b);
}

}  // namespace

TEST(Tridiagonal, MatchesDenseSolve) {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> g;
    for (std::size_t n : {1, 2, 3, 17, 64}) {
        std::vector<cplx> dl(n ? n - 1 : 0), d(n), du(n ? n - 1 : 0), b(n);
        Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            d[i] = cplx(g(gen), g(gen));
            b[i] = cplx(g(gen), g(gen));
            A(i, i) = d[i];
            if (i + 1 < n) {
                dl[i] = cplx(g(gen), g(gen));
                du[i] = cplx(g(gen), g(gen));
                A(i + 1, i) = dl[i];
                A(i, i + 1) = du[i];
            }
        }
        const auto x = solve_tridiagonal(dl, d, du, b);
        const Eigen::VectorXcd ref = A.partialPivLu().solve(Eigen::Map<Eigen::VectorXcd>(b.data(), n));
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(std::abs(x[i] - ref[i]), 0.0, 1e-10 * (1 + std::abs(ref[i])));
    }
}

TEST(Tridiagonal, PivotsPastZeroDiagonal) {
    // [[0, 1], [1, 0]] x = (2, 3)
    const auto x = solve_tridiagonal({1.0}, {0.0, 0.0}, {1.0}, {2.0, 3.0});
    EXPECT_EQ(x[0], cplx(3.0));
    EXPECT_EQ(x[1], cplx(2.0));
    EXPECT_THROW(solve_tridiagonal({0.0}, {0.0, 1.0}, {1.0}, {1.0, 1.0}), NumericalGuardError);
}

TEST(GreenPair, SingleSiteClosedForm) {
    const auto op = build_operator(DiracParams(0, 1), constant_potential(0, 1), 1);
    const cplx z(0, 1);
    const auto g = green_pair(op, z);
    EXPECT_NEAR(std::abs(g.plus(1) - (-z / (z * z - 1.0))), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(g.minus(1) - 1.0 / (z * z - 1.0)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(g.plus(1) - cplx(0, 0.5)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(g.minus(1) - cplx(-0.5, 0)), 0.0, 1e-15);
    EXPECT_EQ(g.minus(0), cplx(0.0));
    EXPECT_EQ(g.plus(2), cplx(0.0));
}

TEST(GreenPair, MatchesDenseSolveAndResidual) {
    const auto op = build_operator(DiracParams(0.5, 1.2), bernoulli_potential(-1, 1, 0.5, 2, 120), 120);
    for (cplx z : {cplx(0.3, 0.01), cplx(-2.0, 1e-3), cplx(5.0, 0.2)}) {
        const auto g = green_pair(op, z);
        const auto ref = dense_green(op, z);
        EXPECT_LE(g.residual, 1e-12);
        for (std::size_t n = 1; n <= 120; ++n) {
            ASSERT_NEAR(std::abs(g.plus(n) - ref[2 * (n - 1)]), 0.0, 1e-9 * ref.norm());
            ASSERT_NEAR(std::abs(g.minus(n) - ref[2 * (n - 1) + 1]), 0.0, 1e-9 * ref.norm());
        }
    }
}

TEST(GreenPair, RejectsRealAxis) {
    const auto op = build_operator(DiracParams(0, 1), constant_potential(0, 5), 5);
    EXPECT_THROW(green_pair(op, cplx(0.5, 0.0)), std::invalid_argument);
    EXPECT_THROW(green_pair(op, cplx(0.5, -0.1)), std::invalid_argument);
    EXPECT_TRUE(green_pair(op, cplx(0.5, 1e-13)).near_singular);
}

TEST(MatrGreen, Examples) {
    const auto bern = build_operator(DiracParams(0, 1), bernoulli_potential(0, 1, 0.5, 42, 80), 80);
    EXPECT_EQ(matr_green_check(bern, cplx(0.5, 1.0 / 50), 1).residual, 0.0);
    EXPECT_LE(matr_green_check(bern, cplx(0.5, 1.0 / 50), 40).residual, 1e-8);
    const auto free_op = build_operator(DiracParams(0, 1), constant_potential(0, 60), 60);
    EXPECT_LE(matr_green_check(free_op, cplx(0.2, 0.1), 25).residual, 1e-8);
}

TEST(MatrGreen, HoldsUpToLastSite) {
    const auto op = build_operator(DiracParams(0.4, 1), bernoulli_potential(0, 1, 0.5, 43, 30), 30);
    const auto g = green_pair(op, cplx(0.7, 0.05));
    for (std::size_t n = 1; n <= 30; ++n) EXPECT_LE(matr_green_check(op, g, n).residual, 1e-10) << n;
    EXPECT_THROW(matr_green_check(op, g, 31), std::out_of_range);
}

TEST(MatrGreen, ConditioningGuard) {
    const auto op = build_operator(DiracParams(1, 1), constant_potential(0, 80), 80);
    EXPECT_THROW(matr_green_check(op, cplx(0.0, 0.01), 60), NumericalGuardError);
}

TEST(Borel, MatchesGreenFirstEntry) {
    const auto op = build_operator(DiracParams(0.2, 1), bernoulli_potential(0, 1, 0.5, 44, 100), 100);
    for (cplx z : {cplx(0.1, 0.05), cplx(-1.5, 0.5), cplx(2.2, 1e-3)})
        EXPECT_NEAR(std::abs(borel_transform(op, z) - green_pair(op, z).plus(1)), 0.0, 1e-10);
}

TEST(Borel, ImaginaryPartPositive) {
    const auto op = build_operator(DiracParams(0.2, 1), bernoulli_potential(0, 1, 0.5, 45, 50), 50);
    for (double E = -4; E <= 4; E += 0.05) ASSERT_GT(borel_transform(op, cplx(E, 0.01)).imag(), 0.0);
}

TEST(MeasureEstimate, FullWindowNormalization) {
    const auto op = build_operator(DiracParams(0, 1), bernoulli_potential(0, 1, 0.5, 46, 200), 200);
    for (double eps : {1e-1, 1e-2, 1e-3}) {
        const auto [a, b] = full_spectral_window(op, eps);
        EXPECT_NEAR(measure_estimate(op, a, b, eps), 1.0, 0.01) << eps;
    }
}

TEST(MeasureEstimate, HalvesAddUp) {
    const auto op = build_operator(DiracParams(0.5, 1), bernoulli_potential(0, 1, 0.5, 47, 100), 100);
    const double eps = 1e-2;
    const auto [a, b] = full_spectral_window(op, eps);
    const double mid = 0.1234;
    const double whole = measure_estimate(op, a, b, eps);
    EXPECT_NEAR(measure_estimate(op, a, mid, eps) + measure_estimate(op, mid, b, eps), whole, 1e-6);
}

TEST(Borel, ReflectionSymmetry) {
    const auto op = build_operator(DiracParams(0.5, 1), bernoulli_potential(0, 1, 0.5, 48, 60), 60);
    const cplx z(0.4, 0.03);
    const auto ref = dense_green(op, std::conj(z));
    EXPECT_NEAR(std::abs(ref[0] - std::conj(borel_transform(op, z))), 0.0, 1e-10);
}

TEST(GreenMoment, ContinuousInT) {
    const auto op = build_operator(DiracParams(0, 1), bernoulli_potential(0, 1, 0.5, 12345, 200), 200);
    const double a = abel_moment_green(op, 20, 2).value;
    EXPECT_LE(std::abs(a - abel_moment_green(op, 20 * 1.001, 2).value) / a, 1e-2);
}

TEST(MeasureEstimate, MassGapCarriesLittleMass) {
    const auto op = build_operator(DiracParams(1, 1), constant_potential(0, 200), 200);
    const auto es = eigensystem(op);
    for (Eigen::Index j = 0; j < es.values.size(); ++j) ASSERT_GT(std::abs(es.values[j]), 0.5);
    EXPECT_LE(measure_estimate(op, -0.5, 0.5, 1e-3), 1e-2);
}

TEST(GreenMoment, NormalizationAndParseval) {
    for (double m : {0.0, 1.0}) {
        const auto op = build_operator(DiracParams(m, 1), bernoulli_potential(0, 1, 0.5, 12345, 200), 200);
        SpectralMoments sm(op, SpinorLattice::delta_plus(200));
        EXPECT_NEAR(abel_moment_green(op, 20, 0).value, 1.0, 1e-3);
        const double d = sm.moment(20, 2).value;
        EXPECT_NEAR(abel_moment_green(op, 20, 2).value, d, 0.02 * d);
    }
}

TEST(GreenMoment, ThreadCountDoesNotChangeResult) {
    const auto op = build_operator(DiracParams(0, 1), bernoulli_potential(0, 1, 0.5, 1, 80), 80);
    GreenMomentOptions one, four;
    one.threads = 1;
    four.threads = 4;
    EXPECT_EQ(abel_moment_green(op, 10, 1, one).value, abel_moment_green(op, 10, 1, four).value);
}

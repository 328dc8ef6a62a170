#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "diraclab/analysis.hpp"

using namespace diraclab;

namespace {

constexpr double pi = std::numbers::pi;

MomentCurve synthetic(const std::vector<double>& T, double (*f)(double)) {
    MomentCurve c;
    c.q = 2;
    c.T = T;
    for (double t : T) c.A.push_back(f(t));
    return c;
}

std::vector<double> powers_of_two(int k_max) {
    std::vector<double> T;
    for (int k = 0; k <= k_max; ++k) T.push_back(std::ldexp(1.0, k));
    return T;
}

// Plain normal-equation slope over every window of four consecutive points.
double min_window_slope(const MomentCurve& c) {
    double best = INFINITY;
    for (std::size_t s = 0; s + 4 <= c.size(); ++s) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = s; i < s + 4; ++i) {
            const double x = std::log(c.T[i]), y = std::log(c.A[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        best = std::min(best, (4 * sxy - sx * sy) / (4 * sxx - sx * sx));
    }
    return best;
}

}  // namespace

TEST(BetaEstimate, PurePowerLaw) {
    const auto c = synthetic(geometric_grid(1, 2, 10), [](double t) { return 5 * std::pow(t, 1.3); });
    const auto b = beta_estimate(c);
    EXPECT_NEAR(b.beta_hat, 1.3, 1e-10);
    EXPECT_LE(b.residual, 1e-10);
    EXPECT_EQ(b.slopes.size(), 7u);
}

TEST(BetaEstimate, OscillatingLinearGrowth) {
    const auto c = synthetic(powers_of_two(15), [](double t) { return t * (2 + std::sin(std::log(t))); });
    const auto b = beta_estimate(c);
    EXPECT_NEAR(b.beta_hat, min_window_slope(c), 1e-12);
    EXPECT_GT(b.beta_hat, 0.5);
    EXPECT_LT(b.beta_hat, 1.0);
    EXPECT_EQ(beta_estimate(c).beta_hat, b.beta_hat);
}

TEST(BetaEstimate, ConstantIsZero) {
    const auto c = synthetic(geometric_grid(2, 1.5, 8), [](double) { return 3.0; });
    EXPECT_NEAR(beta_estimate(c).beta_hat, 0.0, 1e-12);
}

TEST(BetaEstimateProperty, ScaleInvariant) {
    const auto c = synthetic(powers_of_two(12), [](double t) { return t * (2 + std::sin(std::log(t))); });
    for (double g : {1e-6, 0.5, 7.0, 1e8}) {
        auto s = c;
        for (double& a : s.A) a *= g;
        EXPECT_NEAR(beta_estimate(s).beta_hat, beta_estimate(c).beta_hat, 1e-10) << g;
    }
}

TEST(BetaEstimate, Errors) {
    const auto good = synthetic(geometric_grid(1, 2, 8), [](double t) { return t; });
    EXPECT_THROW(beta_estimate(synthetic(geometric_grid(1, 2, 5), [](double t) { return t; })), std::invalid_argument);
    auto neg = good;
    neg.A[3] = 0.0;
    EXPECT_THROW(beta_estimate(neg), std::invalid_argument);
    auto arith = good;
    for (std::size_t i = 0; i < arith.size(); ++i) arith.T[i] = 1.0 + double(i);
    EXPECT_THROW(beta_estimate(arith), std::invalid_argument);
    auto unsorted = good;
    std::swap(unsorted.T[1], unsorted.T[2]);
    EXPECT_THROW(beta_estimate(unsorted), std::invalid_argument);
}

TEST(Grids, LinearAndGeometric) {
    const auto g = linear_grid(-1, 1, 0.5);
    ASSERT_EQ(g.size(), 5u);
    EXPECT_EQ(g.front(), -1.0);
    EXPECT_EQ(g.back(), 1.0);
    const auto t = geometric_grid(10, 2, 4);
    EXPECT_EQ(t, (std::vector<double>{10, 20, 40, 80}));
}

TEST(CriticalScan, MasslessUnitCoupling) {
    const auto grid = linear_grid(2.5, 4.5, 1e-3);
    const auto r = critical_scan(DiracParams(0, 1), 1.0, grid);
    const CriticalEnergyRecord* at_pi = nullptr;
    const CriticalEnergyRecord* at_pi1 = nullptr;
    for (const auto& rec : r.records) {
        if (std::abs(rec.E0 - pi) < 1e-6) at_pi = &rec;
        if (std::abs(rec.E0 - (1 + pi)) < 1e-6) at_pi1 = &rec;
    }
    ASSERT_NE(at_pi, nullptr);
    ASSERT_NE(at_pi1, nullptr);
    EXPECT_NEAR(at_pi->eta0, pi, 1e-6);
    EXPECT_NEAR(at_pi->eta1, pi - 1, 1e-6);
    EXPECT_TRUE(at_pi->eta_gap_ok);
    EXPECT_TRUE(at_pi1->eta_gap_ok);
    EXPECT_LE(at_pi->commutator_norm, 1e-8);
    // Massless cells always commute.
    EXPECT_EQ(r.commuting_fraction, 1.0);
}

TEST(CriticalScan, MassiveUnitCoupling) {
    const auto grid = linear_grid(3.0, 3.5, 1e-3);
    const auto r = critical_scan(DiracParams(1, 1), 1.0, grid);
    const double target = std::sqrt(1 + pi * pi);
    bool found = false;
    for (const auto& rec : r.records) found |= std::abs(rec.E0 - target) < 1e-6;
    EXPECT_TRUE(found);
    EXPECT_NEAR(target, 3.296908, 1e-6);
    EXPECT_LT(r.commuting_fraction, 1.0);
}

TEST(CriticalScan, DegenerateCouplingFailsEtaGap) {
    const auto grid = linear_grid(3.0, 3.3, 1e-3);
    const auto r = critical_scan(DiracParams(0, 1), pi, grid);
    bool found = false;
    for (const auto& rec : r.records)
        if (std::abs(rec.E0 - pi) < 1e-6) {
            found = true;
            EXPECT_FALSE(rec.eta_gap_ok);
            EXPECT_EQ(rec.class1, MatClass::plus_identity);
        }
    EXPECT_TRUE(found);
}

TEST(CriticalScanProperty, RecordsAreCriticalAndFamilyContained) {
    for (double m : {0.0, 0.5, 1.0})
        for (double lam : {1.0, 2.0}) {
            const DiracParams p(m, 1);
            const auto grid = linear_grid(-8, 8, 1e-3);
            const auto r = critical_scan(p, lam, grid);
            for (const auto& rec : r.records) {
                EXPECT_LE(rec.commutator_norm, 1e-8);
                for (MatClass k : {rec.class0, rec.class1})
                    EXPECT_TRUE(k == MatClass::elliptic || k == MatClass::plus_identity ||
                                k == MatClass::minus_identity);
            }
            for (double e : critical_family(p, lam, 3, -8 + 1e-3, 8 - 1e-3)) {
                bool hit = false;
                for (const auto& rec : r.records) hit |= std::abs(rec.E0 - e) < 1e-6;
                EXPECT_TRUE(hit) << "m=" << m << " lambda=" << lam << " E=" << e;
            }
        }
}

TEST(CriticalFamily, ClosedForm) {
    const auto f = critical_family(DiracParams(0, 1), 1.0, 1, -10, 10);
    const std::vector<double> expect{-pi, 1 - pi, pi, 1 + pi};
    ASSERT_EQ(f.size(), expect.size());
    for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR(f[i], expect[i], 1e-15);
}

TEST(LambdaWindow, Examples) {
    const auto w0 = lambda_window(DiracParams(0, 1), 1);
    EXPECT_EQ(w0.lower.lo, 0.0);
    EXPECT_NEAR(w0.lower.hi, pi, 1e-12);
    EXPECT_NEAR(w0.upper.lo, pi, 1e-12);
    EXPECT_TRUE(std::isinf(w0.upper.hi));
    EXPECT_TRUE(w0.contains(1.0));
    EXPECT_FALSE(w0.contains(pi));

    const auto w1 = lambda_window(DiracParams(1, 1), 1);
    EXPECT_NEAR(w1.lower.hi, std::sqrt(1 + pi * pi) - 1, 1e-12);
    EXPECT_NEAR(w1.upper.lo, std::sqrt(1 + pi * pi) + 1, 1e-12);
    EXPECT_NEAR(w1.lower.hi, 2.296908, 1e-6);
    EXPECT_FALSE(w1.contains(3.0));

    const auto w2 = lambda_window(DiracParams(1, 2), 1);
    EXPECT_NEAR(w2.lower.hi, std::sqrt(16 + 4 * pi * pi) - 4, 1e-12);
    EXPECT_NEAR(w2.upper.lo, std::sqrt(16 + 4 * pi * pi) + 4, 1e-12);
    EXPECT_THROW(lambda_window(DiracParams(0, 1), 0), std::invalid_argument);
}

TEST(EnergyScan, TwoValuedModels) {
    const DiracParams p(0, 1);
    const auto sizes = geometric_sizes(64, 1024);
    const std::vector<double> E{0.0};
    const auto ell = bounded_energy_scan(p, bernoulli_potential(0, 1, 0.5, 3, 1024), E, sizes);
    EXPECT_EQ(ell.rows[0].fit.kind, GrowthKind::bounded);
    const auto par = bounded_energy_scan(p, constant_potential(2, 1024), E, sizes);
    EXPECT_EQ(par.rows[0].fit.kind, GrowthKind::power_law);
    EXPECT_NEAR(par.rows[0].fit.alpha, 1.0, 0.05);
}

TEST(EnergyScan, ThueMorseBoundedSetAndStability) {
    const DiracParams p(0, 1);
    const auto V = thue_morse(0, 1, 512);
    const auto grid = linear_grid(-3, 3, 1e-3);
    const std::vector<std::size_t> N{32, 64, 128, 256};
    const auto scan = bounded_energy_scan(p, V, grid, N, 0);
    const auto bounded = scan.candidates();
    EXPECT_FALSE(bounded.empty());
    bool has_zero = false;
    for (double e : bounded) has_zero |= std::abs(e) < 1e-12;
    EXPECT_TRUE(has_zero);

    const std::vector<std::size_t> N2{32, 64, 128, 256, 512};
    const auto coarse = linear_grid(-3, 3, 1e-2);
    const auto a = bounded_energy_scan(p, V, coarse, N, 0);
    const auto b = bounded_energy_scan(p, V, coarse, N2, 0);
    for (std::size_t i = 0; i < coarse.size(); ++i)
        if (a.rows[i].fit.kind == GrowthKind::bounded)
            EXPECT_NE(b.rows[i].fit.kind, GrowthKind::exponential) << coarse[i];
}

TEST(Wilson, KnownValues) {
    // 10 of 100 at 95%: (0.05523, 0.17437).
    const auto ci = wilson_interval(10, 100);
    EXPECT_NEAR(ci.low, 0.05523, 5e-5);
    EXPECT_NEAR(ci.high, 0.17437, 5e-5);
    const auto zero = wilson_interval(0, 500);
    EXPECT_EQ(zero.low, 0.0);
    EXPECT_NEAR(zero.high, 0.00762, 5e-5);
    const auto all = wilson_interval(500, 500);
    EXPECT_EQ(all.high, 1.0);
    EXPECT_THROW(wilson_interval(3, 2), std::invalid_argument);
}

TEST(Bernoulli, DegenerateWordsNeverFail) {
    // p close to 1: nearly every cell is level 0, whose matrix is -I at E0.
    const DiracParams p(1, 1);
    const double E0 = std::sqrt(1 + pi * pi);
    BernoulliOptions opt;
    opt.p = 0.999;
    opt.energy_points = 1;
    const auto r = bernoulli_bound_experiment(p, 1.0, E0, 0.25, {32, 64, 128, 256}, 100, 7, 2.0, opt);
    EXPECT_FALSE(r.calibrated);
    for (const auto& row : r.rows) EXPECT_EQ(row.failures, 0u) << row.N;
    EXPECT_TRUE(r.trend_ok);
}

TEST(Bernoulli, DeterministicAndThreadIndependent) {
    const DiracParams p(1, 1);
    const double E0 = std::sqrt(1 + pi * pi);
    BernoulliOptions one, four;
    one.threads = 1;
    four.threads = 4;
    const auto a = bernoulli_bound_experiment(p, 1.0, E0, 0.25, {16, 32, 64}, 60, 11, std::nullopt, one);
    const auto b = bernoulli_bound_experiment(p, 1.0, E0, 0.25, {16, 32, 64}, 60, 11, std::nullopt, four);
    EXPECT_TRUE(a.calibrated);
    EXPECT_EQ(a.C_test, b.C_test);
    for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].failures, b.rows[i].failures);
    const auto c = bernoulli_bound_experiment(p, 1.0, E0, 0.25, {16, 32, 64}, 60, 12, std::nullopt, one);
    EXPECT_NE(a.C_test, c.C_test);
}

TEST(Bernoulli, OffCriticalControlFails) {
    const DiracParams p(1, 1);
    const double E0 = std::sqrt(1 + pi * pi) + 0.5;
    const auto r = bernoulli_bound_experiment(p, 1.0, E0, 0.25, {32, 256}, 50, 13, 3.0);
    EXPECT_LE(r.rows[0].failure_fraction, 0.1);
    EXPECT_GE(r.rows[1].failure_fraction, 0.9);
    EXPECT_FALSE(r.trend_ok);
}

TEST(Bernoulli, ArgumentChecks) {
    const DiracParams p(0, 1);
    EXPECT_THROW(bernoulli_bound_experiment(p, 1.0, pi, 0.0, {32}, 10, 1), std::invalid_argument);
    EXPECT_THROW(bernoulli_bound_experiment(p, 1.0, pi, 0.25, {}, 10, 1), std::invalid_argument);
    EXPECT_THROW(bernoulli_bound_experiment(p, 1.0, pi, 0.25, {32}, 10, 1, -1.0), std::invalid_argument);
}

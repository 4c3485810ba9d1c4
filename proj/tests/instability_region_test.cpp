#include <gtest/gtest.h>

#include <random>

#include "jpo/dynamics.hpp"
#include "jpo/instability_region.hpp"
#include "test_support.hpp"

namespace jpo {
namespace {

using testing::rel_err;

constexpr double G = 1.0;

double self_consistency_residual(double beta, double delta, double eps) {
    // eps^2 = G^2 + (delta + beta eps^2 / G)^2
    const double shifted = delta + beta * eps * eps / G;
    return std::abs(eps * eps - (G * G + shifted * shifted)) / (eps * eps);
}

TEST(ThresholdSymmetric, Values) {
    EXPECT_EQ(threshold_symmetric(G, 0.0), G);
    EXPECT_DOUBLE_EQ(threshold_symmetric(G, G), std::sqrt(2.0) * G);
    EXPECT_EQ(threshold_symmetric(G, -0.7), threshold_symmetric(G, 0.7));
    const auto p = testing::sample_one();
    EXPECT_DOUBLE_EQ(threshold_symmetric(p, 0.0), p.gamma_total());
}

TEST(ThresholdSkewed, BetaPoint22AtZeroDetuning) {
    const auto b = threshold_skewed(G, 0.22, 0.0);
    ASSERT_TRUE(b.exists);
    // (1/(sqrt2 beta)) sqrt(1 -+ sqrt(1 - 4 beta^2))
    EXPECT_NEAR(b.eps_lower, 1.0265193696, 1e-9);
    EXPECT_NEAR(*b.eps_upper, 4.4280260849, 1e-9);
}

TEST(ThresholdSkewed, ClosesBeyondDiscriminantRoot) {
    const double closure = region_closure(0.22);
    EXPECT_NEAR(closure, 1.0 / 0.88 - 0.22, 1e-15);
    EXPECT_NEAR(closure, 0.916364, 1e-6);
    EXPECT_TRUE(threshold_skewed(G, 0.22, closure - 1e-9).exists);
    EXPECT_FALSE(threshold_skewed(G, 0.22, closure + 1e-9).exists);
    EXPECT_FALSE(threshold_skewed(G, 0.22, 2.0).exists);
}

TEST(ThresholdSkewed, SmallBetaRecoversSymmetricThreshold) {
    for (int i = -50; i <= 50; ++i) {
        const double d = 0.1 * i;
        EXPECT_LT(rel_err(threshold_skewed(G, 1e-4, d).eps_lower, threshold_symmetric(G, d)), 1e-3);
    }
}

TEST(ThresholdSkewed, SmallBetaDeviationIsFirstOrderInBetaDelta) {
    // eps_l^2 (1 - 2 beta delta) ~ 1 + delta^2, so eps_l / eps_th - 1 ~ beta delta.
    const double beta = 1e-4;
    for (int i = -100; i <= 100; ++i) {
        const double d = 0.1 * i;
        const double dev = threshold_skewed(G, beta, d).eps_lower / threshold_symmetric(G, d) - 1.0;
        EXPECT_NEAR(dev, beta * d, 3.0 * beta * beta * (1.0 + d * d)) << d;
    }
}

TEST(ThresholdSkewed, ConvergenceAsBetaShrinks) {
    double prev = 1e300;
    for (double beta : {1e-2, 1e-3, 1e-4}) {
        const double closure = std::min(5.0, region_closure(beta));
        double worst = 0.0;
        for (int i = 0; i <= 400; ++i) {
            const double d = -5.0 + (closure + 5.0) * i / 400.0;
            worst = std::max(worst, rel_err(threshold_skewed(G, beta, d).eps_lower, threshold_symmetric(G, d)));
        }
        EXPECT_LT(worst, prev);
        prev = worst;
    }
}

TEST(ThresholdSkewed, BoundariesSatisfyShiftedThreshold) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> ub(1e-4, 0.45);
    for (int i = 0; i < 2000; ++i) {
        const double beta = ub(rng);
        std::uniform_real_distribution<double> ud(-10.0, region_closure(beta));
        const double d = ud(rng);
        const auto b = threshold_skewed(G, beta, d);
        ASSERT_TRUE(b.exists);
        EXPECT_LE(b.eps_lower, *b.eps_upper);
        EXPECT_GE(b.eps_lower, G * (1.0 - 1e-12));
        EXPECT_LT(self_consistency_residual(beta, d, b.eps_lower), 1e-9);
        EXPECT_LT(self_consistency_residual(beta, d, *b.eps_upper), 1e-9);
    }
}

TEST(ThresholdSkewed, WidthShrinksWithBeta) {
    for (double d : {-2.0, -0.5, 0.0, 0.3}) {
        double prev = 1e300;
        for (double beta : {0.05, 0.1, 0.15, 0.2, 0.25}) {
            const auto b = threshold_skewed(G, beta, d);
            ASSERT_TRUE(b.exists);
            const double width = *b.eps_upper - b.eps_lower;
            EXPECT_LT(width, prev);
            prev = width;
        }
    }
}

TEST(ThresholdSkewed, RejectsNonPositiveBeta) { EXPECT_THROW(threshold_skewed(G, 0.0, 0.0), ValidationError); }

TEST(RegionContains, Examples) {
    EXPECT_TRUE(region_contains(G, 0.0, 0.0, 1.01 * G));
    EXPECT_FALSE(region_contains(G, 0.0, 0.0, 0.99 * G));
    EXPECT_TRUE(region_contains(G, 0.22, 0.0, 2.0 * G));
    EXPECT_FALSE(region_contains(G, 0.22, 0.0, 5.0 * G));
    for (double e : {0.0, 1.0, 2.0, 5.0, 50.0}) EXPECT_FALSE(region_contains(G, 0.22, 2.0 * G, e));
    EXPECT_THROW(region_contains(G, 0.0, 0.0, -1.0), ValidationError);
}

TEST(RegionContains, AgreesWithLinearGrowthRate) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> ud(-4.0, 4.0), ue(0.0, 5.0);
    for (int i = 0; i < 5000; ++i) {
        const double d = ud(rng), e = ue(rng);
        const double lambda = -G + std::sqrt(std::max(0.0, e * e - d * d));
        if (std::abs(lambda) < 1e-9) continue;
        EXPECT_EQ(region_contains(G, 0.0, d, e), lambda > 0.0) << d << " " << e;
        EXPECT_EQ(region_contains(G, 0.0, d, e), growth_rate(G, d, e) > 0.0);
    }
}

TEST(PumpInducedShift, QuadraticLaw) {
    EXPECT_EQ(pump_induced_shift(G, 0.22, 0.0), 0.0);
    EXPECT_DOUBLE_EQ(pump_induced_shift(G, 0.22, 2.0), 4.0 * pump_induced_shift(G, 0.22, 1.0));
    EXPECT_DOUBLE_EQ(pump_induced_shift(G, 0.22, G), -0.22 * G);
    const auto p = testing::sample_one();
    EXPECT_DOUBLE_EQ(pump_induced_shift(p, 0.1, p.gamma_total()), -0.1 * p.gamma_total());
}

TEST(SampleRegion, GridSnapsToClosure) {
    const auto rows = sample_region(0.22, 5.0, 201);
    ASSERT_EQ(rows.size(), 201u);
    EXPECT_EQ(rows.front().delta, -5.0);
    EXPECT_EQ(rows.back().delta, 5.0);
    bool snapped = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i) {
            EXPECT_LT(rows[i - 1].delta, rows[i].delta);
        }
        if (rows[i].delta == region_closure(0.22)) {
            snapped = true;
            EXPECT_TRUE(rows[i].exists);
            EXPECT_DOUBLE_EQ(rows[i].eps_lower, *rows[i].eps_upper);
        }
        EXPECT_EQ(rows[i].exists, rows[i].delta <= region_closure(0.22));
        if (rows[i].exists) {
            EXPECT_LT(self_consistency_residual(0.22, rows[i].delta, rows[i].eps_lower), 1e-9);
        }
    }
    EXPECT_TRUE(snapped);
}

TEST(SampleRegion, ZeroBetaIsSymmetricAndUnbounded) {
    const auto rows = sample_region(0.0, 3.0, 61);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_TRUE(rows[i].exists);
        EXPECT_FALSE(rows[i].eps_upper.has_value());
        EXPECT_DOUBLE_EQ(rows[i].eps_lower, rows[rows.size() - 1 - i].eps_lower);
    }
}

} // namespace
} // namespace jpo

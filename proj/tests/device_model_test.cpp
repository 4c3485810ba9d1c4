#include <gtest/gtest.h>

#include <random>

#include "jpo/device_model.hpp"
#include "test_support.hpp"

namespace jpo {
namespace {

using testing::rel_err;
using testing::sample_one;
using testing::sample_two;

double omega_of(const DeviceParams& p, double f) { return resonance_frequency(p, FluxBias(f)); }

TEST(SquidInductance, ReferenceValues) {
    // Phi0 / (2 pi Ic) with CODATA Phi0.
    EXPECT_LT(rel_err(squid_inductance(2.18e-6, FluxBias(0.0)), 1.509660451e-10), 1e-9);
    EXPECT_LT(rel_err(squid_inductance(3.48e-6, FluxBias(0.0)), 9.457068344e-11), 1e-9);
    EXPECT_NEAR(squid_inductance(2.18e-6, FluxBias(pi / 3)) / squid_inductance(2.18e-6, FluxBias(0.0)), 2.0, 1e-12);
}

TEST(SquidInductance, DivergesAtHalfFluxQuantum) {
    EXPECT_THROW(squid_inductance(2.18e-6, FluxBias(pi / 2)), DomainError);
    EXPECT_THROW(squid_inductance(0.0, FluxBias(0.0)), DomainError);
}

TEST(ResonanceFrequency, ZeroFluxSamples) {
    EXPECT_LT(rel_err(rad_to_hz(omega_of(sample_one(), 0.0)), 5.645e9 / 1.0898), 1e-14);
    EXPECT_NEAR(rad_to_hz(omega_of(sample_one(), 0.0)) / 1e9, 5.180, 5e-4);
    EXPECT_NEAR(rad_to_hz(omega_of(sample_two(), 0.0)) / 1e9, 5.326, 5e-4);
}

TEST(ResonanceFrequency, BareResonatorIsFlat) {
    auto p = sample_one();
    p.gamma0 = 0.0;
    for (double f : {-1.2, -0.3, 0.0, 0.7, 1.4}) EXPECT_EQ(omega_of(p, f), p.omega_bare);
    EXPECT_EQ(freq_d2(p, FluxBias(0.4)), 0.0);
}

TEST(ResonanceFrequency, BranchPointIsDomainError) {
    const auto p = sample_one();
    EXPECT_THROW(omega_of(p, pi / 2), DomainError);
    EXPECT_THROW(omega_of(p, -pi / 2), DomainError);
    EXPECT_THROW(omega_of(p, 3 * pi / 2), DomainError);
}

TEST(ResonanceFrequency, EvenPeriodicAndDecreasing) {
    const auto p = sample_one();
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.49 * pi, 0.49 * pi);
    for (int i = 0; i < 200; ++i) {
        const double f = u(rng);
        EXPECT_NEAR(omega_of(p, f), omega_of(p, -f), 1e-6);
        EXPECT_NEAR(omega_of(p, f), omega_of(p, f + pi), 1e-3);
        EXPECT_NEAR(omega_of(p, f), omega_of(p, f - 3 * pi), 1e-3);
    }
    double prev = omega_of(p, 0.0);
    for (int i = 1; i < 100; ++i) {
        const double w = omega_of(p, 0.49 * pi * i / 99.0);
        EXPECT_LT(w, prev);
        prev = w;
    }
}

TEST(FreqDerivatives, ZeroFluxExtremum) {
    const auto p = sample_one();
    EXPECT_EQ(freq_d1(p, FluxBias(0.0)), 0.0);
    EXPECT_LT(freq_d2(p, FluxBias(0.0)), 0.0);
}

TEST(FreqDerivatives, MatchFiniteDifferences) {
    const auto p = sample_one();
    auto w = [&](double f) { return omega_of(p, f); };
    const double f = 0.25 * pi;
    EXPECT_LT(rel_err(freq_d1(p, FluxBias(f)), testing::central_d1(w, f, 1e-5)), 1e-6);
    for (double g : {0.1 * pi, 0.2 * pi, 0.3 * pi, 0.4 * pi, 0.45 * pi})
        EXPECT_LT(rel_err(freq_d2(p, FluxBias(g)), testing::central_d2(w, g, 1e-4)), 1e-4) << g;
}

TEST(FreqDerivatives, SignAndSymmetry) {
    const auto p = sample_two();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(1e-3, 0.49 * pi);
    for (int i = 0; i < 200; ++i) {
        const double f = u(rng);
        EXPECT_LT(freq_d1(p, FluxBias(f)), 0.0);
        EXPECT_GT(freq_d1(p, FluxBias(-f)), 0.0);
        EXPECT_DOUBLE_EQ(freq_d1(p, FluxBias(-f)), -freq_d1(p, FluxBias(f)));
        EXPECT_DOUBLE_EQ(freq_d2(p, FluxBias(-f)), freq_d2(p, FluxBias(f)));
    }
}

TEST(DuffingAlpha, MeasuredRatios) {
    const auto p = sample_one();
    const double measured[] = {0.996e-3, 1.99e-3, 7.53e-3};
    const double flux[] = {-0.15 * pi, -0.25 * pi, -0.35 * pi};
    const double model[] = {1.02373e-3, 2.04821e-3, 7.73907e-3};
    for (int i = 0; i < 3; ++i) {
        const double r = alpha_over_alpha0(p, FluxBias(flux[i]));
        EXPECT_LT(rel_err(r, model[i]), 1e-5);
        EXPECT_LT(rel_err(r, measured[i]), 0.05);
    }
}

TEST(DuffingAlpha, MinimumAtZeroFlux) {
    const auto p = sample_one();
    EXPECT_DOUBLE_EQ(duffing_alpha(p, FluxBias(0.0)), alpha0(p) * std::pow(p.gamma0, 3));
    // pi^2 * 5.645 GHz * 50 / R_K
    EXPECT_LT(rel_err(rad_to_hz(alpha0(p)), 107.91913650e6), 1e-9);
    double prev = duffing_alpha(p, FluxBias(0.0));
    for (int i = 1; i < 50; ++i) {
        const double f = 0.49 * pi * i / 49.0;
        const double a = duffing_alpha(p, FluxBias(f));
        EXPECT_GT(a, prev);
        EXPECT_DOUBLE_EQ(a, duffing_alpha(p, FluxBias(-f)));
        prev = a;
    }
    EXPECT_THROW(duffing_alpha(p, FluxBias(pi / 2)), DomainError);
}

TEST(PumpEpsilon, SampleTwoValue) {
    const double eps = pump_epsilon(sample_two(), FluxBias(0.25 * pi), 0.01 * pi);
    EXPECT_NEAR(rad_to_hz(eps) / 1e6, 7.036278, 1e-5);
}

TEST(PumpEpsilon, OddAndZeroAtSweetSpot) {
    const auto p = sample_one();
    EXPECT_EQ(pump_epsilon(p, FluxBias(0.0), 0.05), 0.0);
    for (double f : {0.1, 0.5, 1.0, 1.5})
        EXPECT_DOUBLE_EQ(pump_epsilon(p, FluxBias(-f), 0.02), -pump_epsilon(p, FluxBias(f), 0.02));
    PumpDrive d{0.0, 0.02, hz_to_rad(1e6)};
    EXPECT_EQ(effective_epsilon(p, FluxBias(0.3), d), hz_to_rad(1e6));
}

TEST(PumpDrive, WarnsForLargeFluxAmplitude) {
    EXPECT_TRUE(pump_drive_warnings({0.0, 0.1, std::nullopt}).empty());
    EXPECT_EQ(pump_drive_warnings({0.0, 0.4, std::nullopt}).size(), 1u);
    EXPECT_THROW(pump_drive_warnings({0.0, -0.1, std::nullopt}), ValidationError);
}

TEST(BetaCoefficient, FluxRatioIsDeviceIndependent) {
    // cos^3(0.15 pi) sin^2(0.25 pi) / (cos^3(0.25 pi) sin^2(0.15 pi))
    const double c1 = std::cos(0.15 * pi), s1 = std::sin(0.15 * pi);
    const double c2 = std::cos(0.25 * pi), s2 = std::sin(0.25 * pi);
    const double oracle = (c1 * c1 * c1 * s2 * s2) / (c2 * c2 * c2 * s1 * s1);
    EXPECT_NEAR(oracle, 4.8536, 1e-4);
    for (const auto& p : {sample_one(), sample_two()})
        EXPECT_LT(rel_err(beta_coefficient(p, FluxBias(0.15 * pi)) / beta_coefficient(p, FluxBias(0.25 * pi)), oracle),
                  1e-12);
}

TEST(BetaCoefficient, EvenDecreasingVanishingAtEdge) {
    const auto p = sample_one();
    EXPECT_THROW(beta_coefficient(p, FluxBias(0.0)), DomainError);
    double prev = beta_coefficient(p, FluxBias(0.01));
    for (int i = 1; i < 60; ++i) {
        const double f = 0.01 + (0.499 * pi - 0.01) * i / 59.0;
        const double b = beta_coefficient(p, FluxBias(f));
        EXPECT_LT(b, prev);
        EXPECT_DOUBLE_EQ(b, beta_coefficient(p, FluxBias(-f)));
        prev = b;
    }
    EXPECT_LT(beta_coefficient(p, FluxBias(0.4999 * pi)), 1e-12);
}

TEST(Coefficients, AlphaBetaTradeOffScalesAsGammaSquared) {
    auto p = sample_one();
    const FluxBias f(0.3 * pi);
    auto product = [&](double g0) {
        p.gamma0 = g0;
        return duffing_alpha(p, f) * beta_coefficient(p, f);
    };
    const double base = product(0.05);
    for (double g0 : {0.02, 0.08, 0.14})
        EXPECT_LT(rel_err(product(g0) / base, (g0 / 0.05) * (g0 / 0.05)), 1e-12);
}

TEST(DeviceParams, Validation) {
    auto p = sample_one();
    EXPECT_NO_THROW(p.validate());
    EXPECT_NEAR(external_quality_factor(p, hz_to_rad(5.1558e9)), 5.1558e9 / 429e3, 1e-6);
    p.gamma0 = 1.0;
    EXPECT_THROW(p.validate(), ValidationError);
    p = sample_one();
    p.gamma_ext = p.gamma_int = 0.0;
    EXPECT_THROW(p.validate(), ValidationError);
    p = sample_one();
    p.omega_bare = -1.0;
    EXPECT_THROW(p.validate(), ValidationError);
}

} // namespace
} // namespace jpo

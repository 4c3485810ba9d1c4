#pragma once

// Synthetic calibration traces with optional seeded multiplicative noise.

#include <cstdint>
#include <random>

#include "jpo/calibration.hpp"
#include "jpo/steady_state.hpp"

namespace jpo::testing {

inline void add_relative_noise(DataSeries& d, double level, std::uint64_t seed) {
    if (level == 0.0) return;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, level);
    for (double& y : d.y) y *= 1.0 + g(rng);
}

inline DataSeries tuning_trace(const DeviceParams& p, double f_lo, double f_hi, std::size_t n) {
    DataSeries d;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = f_lo + (f_hi - f_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        d.x.push_back(f);
        d.y.push_back(resonance_frequency(p, FluxBias(f)));
    }
    return d;
}

/// Linear-regime reflection power around omega_r over +-span_gammas total linewidths.
inline DataSeries reflection_trace(double omega_r, double g_ext, double g_int, double span_gammas, std::size_t n) {
    DataSeries d;
    const double g = g_ext + g_int;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = omega_r + span_gammas * g * (2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0);
        d.x.push_back(x);
        d.y.push_back(reflection_power(x - omega_r, g_ext, g_int));
    }
    return d;
}

inline DataSeries duffing_trace(double alpha, double g_ext, double g_tot, double p_max, std::size_t n) {
    DataSeries d;
    for (std::size_t i = 1; i <= n; ++i) {
        const double p = p_max * static_cast<double>(i) / static_cast<double>(n);
        d.x.push_back(p);
        d.y.push_back(duffing_shift(alpha, g_ext, g_tot, p));
    }
    return d;
}

} // namespace jpo::testing

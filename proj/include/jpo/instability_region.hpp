#pragma once

// Parametric-oscillation region in the (detuning, pump strength) plane.
// Pump strengths are magnitudes throughout.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "jpo/device_model.hpp"

namespace jpo {

struct RegionBoundary {
    double delta = 0.0;
    double eps_lower = 0.0;
    std::optional<double> eps_upper;  ///< absent when the region is unbounded above (beta = 0)
    bool exists = false;
};

/// Zero-field instability threshold without pump-induced shift: sqrt(G^2 + delta^2).
inline double threshold_symmetric(double gamma_total, double delta) { return std::hypot(gamma_total, delta); }

inline double threshold_symmetric(const DeviceParams& p, double delta) {
    return threshold_symmetric(p.gamma_total(), delta);
}

/// Detuning (in units of Gamma) beyond which the skewed region closes.
inline double region_closure(double beta) { return 1.0 / (4.0 * beta) - beta; }

/// Lower and upper boundaries of the region when the resonance is red-shifted
/// by beta eps^2 / Gamma. Both satisfy eps^2 = G^2 + (delta + beta eps^2 / G)^2.
inline RegionBoundary threshold_skewed(double gamma_total, double beta, double delta) {
    if (!(beta > 0.0)) throw ValidationError("threshold_skewed: beta must be > 0");
    const double g = gamma_total;
    const double d = delta / g;
    const double disc = 1.0 - 4.0 * beta * (beta + d);
    RegionBoundary out{delta, 0.0, std::nullopt, false};
    if (disc < 0.0) return out;
    const double lead = 1.0 - 2.0 * beta * d + std::sqrt(disc);
    // Lower root via the product of roots (1 + d^2) / beta^2; avoids cancellation at small beta.
    const double y_lower = 2.0 * (1.0 + d * d) / lead;
    const double y_upper = lead / (2.0 * beta * beta);
    out.eps_lower = g * std::sqrt(y_lower);
    out.eps_upper = g * std::sqrt(y_upper);
    out.exists = true;
    return out;
}

inline RegionBoundary threshold_skewed(const DeviceParams& p, double beta, double delta) {
    return threshold_skewed(p.gamma_total(), beta, delta);
}

inline bool region_contains(double gamma_total, double beta, double delta, double eps) {
    if (!(eps >= 0.0)) throw ValidationError("region_contains: eps must be a magnitude");
    if (beta == 0.0) return eps >= threshold_symmetric(gamma_total, delta);
    const auto b = threshold_skewed(gamma_total, beta, delta);
    return b.exists && eps >= b.eps_lower && eps <= *b.eps_upper;
}

inline bool region_contains(const DeviceParams& p, double beta, double delta, double eps) {
    return region_contains(p.gamma_total(), beta, delta, eps);
}

/// Resonance shift omega_r(eps) - omega_r(0) = -beta eps^2 / Gamma.
inline double pump_induced_shift(double gamma_total, double beta, double eps) {
    return -beta * eps * eps / gamma_total;
}

inline double pump_induced_shift(const DeviceParams& p, double beta, double eps) {
    return pump_induced_shift(p.gamma_total(), beta, eps);
}

/// Region boundary on a uniform detuning grid over [-span, span] (units of Gamma, Gamma = 1).
/// The grid point nearest the closure detuning is snapped onto it so the tip is resolved.
inline std::vector<RegionBoundary> sample_region(double beta, double span, std::size_t points) {
    if (!(beta >= 0.0)) throw ValidationError("region: beta must be >= 0");
    if (!(span > 0.0)) throw ValidationError("region: delta span must be > 0");
    if (points < 2) throw ValidationError("region: need at least 2 points");

    std::vector<double> grid(points);
    const double step = 2.0 * span / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) grid[i] = -span + step * static_cast<double>(i);
    grid.back() = span;

    std::optional<std::size_t> snapped;
    if (beta > 0.0) {
        const double closure = region_closure(beta);
        if (closure > -span && closure < span) {
            // Nearest grid point; it lies within half a step, so ordering is preserved.
            const auto i = std::min(points - 1, static_cast<std::size_t>(std::lround((closure + span) / step)));
            grid[i] = closure;
            snapped = i;
        }
    }

    std::vector<RegionBoundary> out;
    out.reserve(points);
    for (std::size_t i = 0; i < points; ++i) {
        if (beta == 0.0) {
            out.push_back({grid[i], threshold_symmetric(1.0, grid[i]), std::nullopt, true});
        } else if (snapped && *snapped == i) {
            // Discriminant is zero up to rounding: both branches meet.
            const double eps = std::sqrt(0.5) / beta * std::sqrt(1.0 - 2.0 * beta * grid[i]);
            out.push_back({grid[i], eps, eps, true});
        } else {
            out.push_back(threshold_skewed(1.0, beta, grid[i]));
        }
    }
    return out;
}

} // namespace jpo

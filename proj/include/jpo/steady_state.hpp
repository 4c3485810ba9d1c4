#pragma once

// Probe-driven steady state of the unpumped Duffing resonator: photon-number
// branches, their stability, reflection coefficient and the power-dependent
// shift of the reflection minimum.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "jpo/cubic.hpp"
#include "jpo/device_model.hpp"

namespace jpo {

/// Probe detuning delta_omega = omega_B - omega_r (rad/s) and incoming photon flux |B|^2 (photons/s).
struct ProbeDrive {
    double delta_omega = 0.0;
    double b_power = 0.0;
};

struct SteadyStateBranch {
    double n = 0.0;       ///< intracavity photon number |A|^2
    bool stable = true;
    double zeta = 0.0;    ///< effective detuning delta_omega + alpha n
    bool fold = false;    ///< merged near-double root at a bifurcation point
};

/// Residual of the intracavity self-consistency n[(dw + alpha n)^2 + G^2] - 2 G0 |B|^2.
inline double photon_number_residual(double n, double alpha, double gamma_ext, double gamma_total,
                                     const ProbeDrive& d) {
    const double z = d.delta_omega + alpha * n;
    return n * (z * z + gamma_total * gamma_total) - 2.0 * gamma_ext * d.b_power;
}

/// Determinant of the slow-flow Jacobian in (Re A, Im A) at a fixed point. The trace is
/// -2 Gamma, so the point is stable iff this is positive.
inline double slow_flow_jacobian_det(double n, double zeta, double alpha, double gamma_total) {
    return gamma_total * gamma_total + zeta * zeta + 2.0 * alpha * n * zeta;
}

/// All steady states for explicit coefficients, sorted by photon number.
inline std::vector<SteadyStateBranch> photon_number_roots(double alpha, double gamma_ext,
                                                          double gamma_total, const ProbeDrive& d) {
    if (!(d.b_power >= 0.0)) throw ValidationError("probe: b_power must be >= 0");
    if (!(gamma_total > 0.0)) throw ValidationError("probe: total damping must be > 0");
    const double drive = 2.0 * gamma_ext * d.b_power;
    if (drive == 0.0) return {SteadyStateBranch{0.0, true, d.delta_omega, false}};

    // Solve for z = zeta / Gamma, where (z - dw/G)(z^2 + 1) = 2 alpha G0 |B|^2 / G^3.
    // Then n = 2 G0 |B|^2 / (zeta^2 + G^2) is free of cancellation as alpha -> 0.
    const double g = gamma_total;
    const double dw = d.delta_omega / g;
    const double k = alpha * drive / (g * g * g);
    const double n_max = drive / (g * g);
    const std::vector<double> zs = solve_monic_cubic(-dw, 1.0, -(dw + k));

    std::vector<SteadyStateBranch> out;
    for (double z : zs) {
        double n = n_max / (z * z + 1.0);
        for (int it = 0; it < 3; ++it) {
            const double r = photon_number_residual(n, alpha, gamma_ext, g, d);
            const double zeta = d.delta_omega + alpha * n;
            const double dr = zeta * zeta + g * g + 2.0 * alpha * n * zeta;
            if (r == 0.0 || dr == 0.0) break;
            const double nn = n - r / dr;
            if (nn >= 0.0 && std::abs(photon_number_residual(nn, alpha, gamma_ext, g, d)) < std::abs(r)) n = nn;
            else break;
        }
        out.push_back({n, true, d.delta_omega + alpha * n, false});
    }
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.n < y.n; });

    std::vector<SteadyStateBranch> merged;
    for (const auto& b : out) {
        if (!merged.empty() && std::abs(b.n - merged.back().n) < 1e-6 * n_max) {
            merged.back().fold = true;
            continue;
        }
        merged.push_back(b);
    }
    for (auto& b : merged)
        b.stable = !b.fold && slow_flow_jacobian_det(b.n, b.zeta, alpha, g) > 0.0;
    return merged;
}

inline std::vector<SteadyStateBranch> photon_number_roots(const DeviceParams& p, FluxBias f,
                                                          const ProbeDrive& d) {
    return photon_number_roots(duffing_alpha(p, f), p.gamma_ext, p.gamma_total(), d);
}

/// |C|^2 / |B|^2 at effective detuning zeta.
inline double reflection_power(double zeta, double gamma_ext, double gamma_int) {
    const double g = gamma_ext + gamma_int;
    return 1.0 - 4.0 * gamma_ext * gamma_int / (zeta * zeta + g * g);
}

/// Complex C / B = 1 - i 2 G0 / (zeta + i G).
inline std::complex<double> reflection_amplitude(double zeta, double gamma_ext, double gamma_int) {
    using namespace std::complex_literals;
    const double g = gamma_ext + gamma_int;
    return 1.0 - 2i * gamma_ext / (zeta + 1i * g);
}

inline double reflection_coefficient(const DeviceParams& p, const SteadyStateBranch& branch) {
    return reflection_power(branch.zeta, p.gamma_ext, p.gamma_int);
}

inline std::complex<double> reflection_coefficient_complex(const DeviceParams& p,
                                                           const SteadyStateBranch& branch) {
    return reflection_amplitude(branch.zeta, p.gamma_ext, p.gamma_int);
}

/// Power-induced displacement of the reflection minimum, -2 alpha G0 |B|^2 / G^2.
inline double duffing_shift(double alpha, double gamma_ext, double gamma_total, double b_power) {
    return -2.0 * alpha * gamma_ext * b_power / (gamma_total * gamma_total);
}

inline double duffing_shift(const DeviceParams& p, FluxBias f, double b_power) {
    if (!(b_power >= 0.0)) throw ValidationError("probe: b_power must be >= 0");
    return duffing_shift(duffing_alpha(p, f), p.gamma_ext, p.gamma_total(), b_power);
}

struct ProbeSweepRow {
    double delta_omega = 0.0;
    std::size_t branch_index = 0;
    double n_photons = 0.0;
    bool stable = true;
    double refl_power = 1.0;
    double refl_phase = 0.0;
};

/// One row per steady-state branch per detuning.
inline std::vector<ProbeSweepRow> probe_sweep(const DeviceParams& p, FluxBias f, double b_power,
                                              std::span<const double> detunings) {
    const double alpha = duffing_alpha(p, f);
    std::vector<ProbeSweepRow> rows;
    for (double dw : detunings) {
        const auto branches = photon_number_roots(alpha, p.gamma_ext, p.gamma_total(), {dw, b_power});
        for (std::size_t i = 0; i < branches.size(); ++i) {
            const auto& b = branches[i];
            rows.push_back({dw, i, b.n, b.stable, reflection_coefficient(p, b),
                            std::arg(reflection_coefficient_complex(p, b))});
        }
    }
    return rows;
}

} // namespace jpo

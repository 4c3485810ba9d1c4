#pragma once

// Closed-form model of a quarter-wave resonator terminated by a flux-tunable
// SQUID: inductance, tuning curve and its flux derivatives, and the
// flux-dependent pump, Duffing and pump-induced-shift coefficients.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "jpo/constants.hpp"
#include "jpo/errors.hpp"

namespace jpo {

/// Static description of one resonator-SQUID device. All frequencies and
/// rates are angular (rad/s).
struct DeviceParams {
    double omega_bare = 0.0;  ///< bare quarter-wave resonance
    double gamma0 = 0.0;      ///< inductive participation ratio of the SQUID
    double z0 = 50.0;         ///< characteristic impedance, ohm
    std::optional<double> i_c;  ///< SQUID critical current, A
    double gamma_ext = 0.0;   ///< external (coupling) damping rate
    double gamma_int = 0.0;   ///< internal damping rate

    double gamma_total() const noexcept { return gamma_ext + gamma_int; }

    /// Throws ValidationError when the invariants are violated.
    void validate() const {
        auto fail = [](const std::string& msg) { throw ValidationError("device: " + msg); };
        if (!(std::isfinite(omega_bare) && omega_bare > 0.0)) fail("omega_bare must be > 0");
        if (!(gamma0 >= 0.0 && gamma0 < 1.0)) fail("gamma0 must lie in [0, 1)");
        if (!(std::isfinite(z0) && z0 > 0.0)) fail("z0 must be > 0");
        if (i_c && !(std::isfinite(*i_c) && *i_c > 0.0)) fail("i_c must be > 0");
        if (!(std::isfinite(gamma_ext) && gamma_ext >= 0.0)) fail("gamma_ext must be >= 0");
        if (!(std::isfinite(gamma_int) && gamma_int >= 0.0)) fail("gamma_int must be >= 0");
        if (!(gamma_total() > 0.0)) fail("total damping must be > 0");
    }
};

inline double external_quality_factor(const DeviceParams& p, double omega_r) {
    return omega_r / p.gamma_ext;
}

inline double internal_quality_factor(const DeviceParams& p, double omega_r) {
    return omega_r / p.gamma_int;
}

/// Normalized dc flux F = pi * Phi_dc / Phi_0, in radians.
class FluxBias {
public:
    constexpr FluxBias() = default;
    constexpr explicit FluxBias(double radians) : f_(radians) {}

    constexpr double radians() const noexcept { return f_; }

    /// Representative of F in [-pi/2, pi/2) under the period-pi symmetry of |cos F|.
    double reduced() const noexcept { return f_ - pi * std::floor((f_ + pi / 2.0) / pi); }

private:
    double f_ = 0.0;
};

/// Parametric pump: detuning delta = omega_p/2 - omega_r and ac flux amplitude df1 (rad).
struct PumpDrive {
    double delta = 0.0;
    double df1 = 0.0;
    std::optional<double> epsilon_override;
};

inline std::vector<std::string> pump_drive_warnings(const PumpDrive& d) {
    if (!(d.df1 >= 0.0)) throw ValidationError("pump: df1 must be >= 0");
    std::vector<std::string> out;
    if (d.df1 > 0.3) out.emplace_back("pump: df1 > 0.3 rad, flux expansion may be inaccurate");
    return out;
}

namespace detail {

inline constexpr double cos_floor = 1e-9;

/// Reduced flux with a domain check against the |cos F| = 0 branch points.
inline double checked_flux(FluxBias f, const char* op) {
    const double r = f.reduced();
    if (!(std::abs(std::cos(r)) > cos_floor))
        throw DomainError(std::string(op) + ": flux at a cos F = 0 branch point");
    return r;
}

} // namespace detail

/// Josephson inductance of the SQUID, in henry.
inline double squid_inductance(double i_c, FluxBias f) {
    if (!(i_c > 0.0)) throw DomainError("squid_inductance: i_c must be > 0");
    const double c = std::abs(std::cos(f.radians()));
    if (!(c > detail::cos_floor)) throw DomainError("squid_inductance: diverging inductance at cos F = 0");
    return flux_quantum / (two_pi * i_c * c);
}

inline double resonance_frequency(const DeviceParams& p, FluxBias f) {
    const double c = std::cos(detail::checked_flux(f, "resonance_frequency"));
    return p.omega_bare * c / (c + p.gamma0);
}

/// First flux derivative of resonance_frequency.
inline double freq_d1(const DeviceParams& p, FluxBias f) {
    const double r = detail::checked_flux(f, "freq_d1");
    const double c = std::cos(r);
    const double g = c + p.gamma0;
    return -p.omega_bare * p.gamma0 * std::sin(r) / (g * g);
}

/// Second flux derivative of resonance_frequency.
inline double freq_d2(const DeviceParams& p, FluxBias f) {
    const double r = detail::checked_flux(f, "freq_d2");
    const double c = std::cos(r);
    const double s = std::sin(r);
    const double g = c + p.gamma0;
    return -p.omega_bare * p.gamma0 * (c * g + 2.0 * s * s) / (g * g * g);
}

/// Duffing scale alpha_0 = pi^2 omega_bare Z0 / R_K.
inline double alpha0(const DeviceParams& p) noexcept {
    return pi * pi * p.omega_bare * p.z0 / klitzing_resistance;
}

inline double alpha_over_alpha0(const DeviceParams& p, FluxBias f) {
    const double c = std::cos(detail::checked_flux(f, "duffing_alpha"));
    const double x = p.gamma0 / c;
    return x * x * x;
}

/// Duffing frequency shift per photon (rad/s per photon).
inline double duffing_alpha(const DeviceParams& p, FluxBias f) {
    return alpha0(p) * alpha_over_alpha0(p, f);
}

/// Effective parametric pump strength for ac flux amplitude df1. Signed (odd in F).
inline double pump_epsilon(const DeviceParams& p, FluxBias f, double df1) {
    const double r = detail::checked_flux(f, "pump_epsilon");
    const double c = std::cos(r);
    return 0.5 * df1 * p.omega_bare * p.gamma0 * std::sin(r) / (c * c);
}

inline double effective_epsilon(const DeviceParams& p, FluxBias f, const PumpDrive& d) {
    if (d.epsilon_override) return *d.epsilon_override;
    return pump_epsilon(p, f, d.df1);
}

/// beta_0 = Gamma / omega_bare.
inline double beta0(const DeviceParams& p) noexcept { return p.gamma_total() / p.omega_bare; }

/// Dimensionless pump-induced shift coefficient. Diverges at F = 0.
inline double beta_coefficient(const DeviceParams& p, FluxBias f) {
    const double r = detail::checked_flux(f, "beta_coefficient");
    const double s = std::sin(r);
    if (std::abs(s) < 1e-12) throw DomainError("beta_coefficient: diverges at zero flux bias");
    if (!(p.gamma0 > 0.0)) throw DomainError("beta_coefficient: requires gamma0 > 0");
    const double c = std::cos(r);
    return beta0(p) / p.gamma0 * c * c * c / (s * s);
}

} // namespace jpo

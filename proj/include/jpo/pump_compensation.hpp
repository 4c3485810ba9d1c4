#pragma once

// Two-tone pump with dc correction that cancels the second-order distortion of
// the resonance frequency under sinusoidal flux pumping:
//   F(t) = F_dc + F_rec + df1 cos(wp t) + df2 cos(2 wp t),  df2 = F_rec = -(df1^2/4) w''/w'
// with the derivatives evaluated at F'_dc = F_dc + F_rec.

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "jpo/device_model.hpp"

namespace jpo {

struct CompensatedPump {
    double f_dc = 0.0;     ///< requested static bias
    double f_rec = 0.0;    ///< dc correction
    double df1 = 0.0;      ///< fundamental flux amplitude
    double df2 = 0.0;      ///< second-harmonic flux amplitude
    double omega_p = 0.0;  ///< pump angular frequency

    double flux_at_phase(double phase) const noexcept {
        return f_dc + f_rec + df1 * std::cos(phase) + df2 * std::cos(2.0 * phase);
    }
    double flux(double t) const noexcept { return flux_at_phase(omega_p * t); }
    double period() const noexcept { return two_pi / omega_p; }
};

/// Plain single-tone pump at the same bias, for comparison.
inline CompensatedPump single_tone_pump(double f_dc, double df1, double omega_p) {
    return {f_dc, 0.0, df1, 0.0, omega_p};
}

/// w''/w' from the analytic derivatives of the tuning curve.
inline double derivative_ratio_exact(const DeviceParams& p, double f) {
    const double r = FluxBias(f).reduced();
    if (std::abs(std::sin(r)) < 1e-12 || p.gamma0 == 0.0)
        throw DomainError("derivative ratio: first flux derivative vanishes");
    return freq_d2(p, FluxBias(f)) / freq_d1(p, FluxBias(f));
}

/// Small-gamma0 closed form of w''/w' with the numerator in its commonly quoted form,
/// (3 + 2 g cos F + cos 2F) / (2 sin F (g + cos F)). Direct differentiation gives
/// -cos 2F instead; both agree at F = pi/4. Kept for comparison only.
inline double derivative_ratio_small_gamma(const DeviceParams& p, double f) {
    const double r = FluxBias(f).reduced();
    const double s = std::sin(r);
    if (std::abs(s) < 1e-12) throw DomainError("derivative ratio: undefined at zero flux");
    const double c = std::cos(r);
    return (3.0 + 2.0 * p.gamma0 * c + std::cos(2.0 * r)) / (2.0 * s * (p.gamma0 + c));
}

inline double second_tone_amplitude(const DeviceParams& p, double f_dc_prime, double df1) {
    if (df1 == 0.0) return 0.0;
    return -0.25 * df1 * df1 * derivative_ratio_exact(p, f_dc_prime);
}

/// Same right-hand side as second_tone_amplitude.
inline double rectification_offset(const DeviceParams& p, double f_dc_prime, double df1) {
    return second_tone_amplitude(p, f_dc_prime, df1);
}

inline std::vector<std::string> compensation_warnings(double df1) {
    std::vector<std::string> out;
    if (std::abs(df1) > 0.1) out.emplace_back("compensate: df1 > 0.1 rad, third-order residual may be significant");
    return out;
}

/// Resolves F'_dc = F_dc + F_rec(F'_dc) by fixed-point iteration from F'_dc = F_dc.
inline CompensatedPump build_compensated_pump(const DeviceParams& p, double f_dc, double df1, double omega_p) {
    if (!(df1 >= 0.0)) throw ValidationError("compensate: df1 must be >= 0");
    if (!(omega_p > 0.0)) throw ValidationError("compensate: pump frequency must be > 0");
    (void)detail::checked_flux(FluxBias(f_dc), "compensate");
    CompensatedPump pump = single_tone_pump(f_dc, df1, omega_p);
    if (df1 == 0.0) return pump;

    constexpr int max_iterations = 50;
    constexpr double tol = 1e-12;
    double rec = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
        const double next = rectification_offset(p, f_dc + rec, df1);
        const bool done = std::abs(next - rec) <= tol;
        rec = next;
        if (done) {
            pump.f_rec = rec;
            pump.df2 = rec;
            return pump;
        }
    }
    throw ConvergenceError("compensate: self-consistent dc bias did not converge in 50 iterations");
}

struct HarmonicContent {
    double dc_offset = 0.0;  ///< |mean omega - omega(F_dc)|
    double h1 = 0.0;         ///< cosine amplitudes of the first three pump harmonics
    double h2 = 0.0;
    double h3 = 0.0;
};

struct SpectralReport {
    HarmonicContent compensated;
    HarmonicContent uncompensated;
    double h2_suppression_db = 0.0;
    double dc_suppression_db = 0.0;
};

/// Harmonic content of omega(F(t)) over exactly one pump period.
inline HarmonicContent harmonic_content(const DeviceParams& p, const CompensatedPump& pump, std::size_t n_samples) {
    std::complex<double> bins[4];
    for (std::size_t j = 0; j < n_samples; ++j) {
        const double phase = two_pi * static_cast<double>(j) / static_cast<double>(n_samples);
        const double w = resonance_frequency(p, FluxBias(pump.flux_at_phase(phase)));
        for (int k = 0; k < 4; ++k) bins[k] += w * std::polar(1.0, -k * phase);
    }
    const double n = static_cast<double>(n_samples);
    const double reference = resonance_frequency(p, FluxBias(pump.f_dc));
    return {std::abs(bins[0].real() / n - reference), 2.0 * std::abs(bins[1]) / n,
            2.0 * std::abs(bins[2]) / n, 2.0 * std::abs(bins[3]) / n};
}

inline double suppression_db(double reference, double residual) {
    if (reference == 0.0) return 0.0;
    if (residual == 0.0) return std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(reference / residual);
}

inline SpectralReport verify_cancelation(const DeviceParams& p, const CompensatedPump& pump, std::size_t n_samples) {
    if (n_samples < 256 || (n_samples & (n_samples - 1)) != 0)
        throw ValidationError("compensate: n_samples must be a power of two >= 256");
    SpectralReport r;
    r.compensated = harmonic_content(p, pump, n_samples);
    r.uncompensated = harmonic_content(p, single_tone_pump(pump.f_dc, pump.df1, pump.omega_p), n_samples);
    r.h2_suppression_db = suppression_db(r.uncompensated.h2, r.compensated.h2);
    r.dc_suppression_db = suppression_db(r.uncompensated.dc_offset, r.compensated.dc_offset);
    return r;
}

struct WaveformSample {
    double t = 0.0;
    double flux = 0.0;
    double omega = 0.0;
};

inline std::vector<WaveformSample> sample_waveform(const DeviceParams& p, const CompensatedPump& pump,
                                                   std::size_t n_samples) {
    std::vector<WaveformSample> out;
    out.reserve(n_samples);
    const double period = pump.period();
    for (std::size_t j = 0; j < n_samples; ++j) {
        const double frac = static_cast<double>(j) / static_cast<double>(n_samples);
        const double f = pump.flux_at_phase(two_pi * frac);
        out.push_back({frac * period, f, resonance_frequency(p, FluxBias(f))});
    }
    return out;
}

} // namespace jpo

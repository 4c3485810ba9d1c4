#pragma once

// Time-domain integration of the slow-amplitude equation
//   dA/dt = i(delta A + eps A* + alpha |A|^2 A) - Gamma A - i sqrt(2 Gamma_0) B(t)
// and helpers to read growth rates and settled states off a trajectory.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "jpo/device_model.hpp"

namespace jpo {

using ComplexAmplitude = std::complex<double>;

/// Classical probe amplitude B(t), sqrt(photons/s).
struct ProbeWaveform {
    enum class Kind { zero, constant, pulse };
    Kind kind = Kind::zero;
    ComplexAmplitude amplitude{0.0, 0.0};
    double t_on = 0.0;   ///< pulse start, s
    double t_off = 0.0;  ///< pulse end, s

    ComplexAmplitude operator()(double t) const noexcept {
        switch (kind) {
        case Kind::constant: return amplitude;
        case Kind::pulse: return (t >= t_on && t < t_off) ? amplitude : ComplexAmplitude{};
        case Kind::zero: break;
        }
        return {};
    }
};

struct SimConfig {
    double dt = 0.0;
    double t_max = 0.0;
    ComplexAmplitude a0{1e-6, 0.0};
    ProbeWaveform drive;
    double noise_amplitude = 0.0;
    std::uint64_t seed = 0;
    std::size_t record_stride = 1;  ///< keep every n-th step in the trajectory
};

/// Oscillation seed of magnitude 1e-6 with a phase drawn from the seed.
inline ComplexAmplitude seeded_initial_amplitude(std::uint64_t seed, double magnitude = 1e-6) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, two_pi);
    return std::polar(magnitude, phase(rng));
}

struct Trajectory {
    std::vector<double> times;
    std::vector<ComplexAmplitude> amplitudes;
    std::vector<double> photon_numbers;

    std::size_t size() const noexcept { return times.size(); }

    void push(double t, ComplexAmplitude a) {
        times.push_back(t);
        amplitudes.push_back(a);
        photon_numbers.push_back(std::norm(a));
    }
};

inline void validate(const SimConfig& cfg, double gamma_total) {
    if (!(cfg.dt > 0.0)) throw ValidationError("sim: dt must be > 0");
    if (!(cfg.dt * gamma_total <= 0.01 * (1.0 + 1e-12)))
        throw ValidationError("sim: step-size guard dt * Gamma <= 0.01 violated");
    if (!(cfg.t_max >= cfg.dt)) throw ValidationError("sim: t_max must be >= dt");
    if (!(cfg.noise_amplitude >= 0.0)) throw ValidationError("sim: noise_amplitude must be >= 0");
    if (cfg.record_stride == 0) throw ValidationError("sim: record_stride must be >= 1");
    if (!std::isfinite(cfg.a0.real()) || !std::isfinite(cfg.a0.imag()))
        throw ValidationError("sim: initial amplitude must be finite");
}

/// Right-hand side of the slow-amplitude equation.
struct SlowFlow {
    double delta;
    double eps;
    double alpha;
    double gamma_total;
    double drive_coupling;  ///< sqrt(2 Gamma_0)

    ComplexAmplitude operator()(ComplexAmplitude a, ComplexAmplitude b) const noexcept {
        using namespace std::complex_literals;
        return 1i * (delta * a + eps * std::conj(a) + alpha * std::norm(a) * a) - gamma_total * a
               - 1i * drive_coupling * b;
    }
};

/// Fixed-step RK4 (or Euler-Maruyama when noise is enabled).
inline Trajectory integrate(const DeviceParams& p, double delta, double eps, double alpha, const SimConfig& cfg) {
    validate(cfg, p.gamma_total());
    const SlowFlow f{delta, eps, alpha, p.gamma_total(), std::sqrt(2.0 * p.gamma_ext)};
    const auto steps = static_cast<std::size_t>(std::llround(cfg.t_max / cfg.dt));
    const double h = cfg.dt;

    Trajectory traj;
    traj.times.reserve(steps / cfg.record_stride + 2);
    traj.amplitudes.reserve(steps / cfg.record_stride + 2);
    traj.photon_numbers.reserve(steps / cfg.record_stride + 2);
    traj.push(0.0, cfg.a0);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const bool noisy = cfg.noise_amplitude > 0.0;
    const double noise_scale = cfg.noise_amplitude * std::sqrt(h);

    ComplexAmplitude a = cfg.a0;
    for (std::size_t i = 1; i <= steps; ++i) {
        const double t = static_cast<double>(i - 1) * h;
        if (noisy) {
            const double xr = gauss(rng);
            const double xi = gauss(rng);
            a += h * f(a, cfg.drive(t)) + noise_scale * ComplexAmplitude{xr, xi};
        } else {
            const ComplexAmplitude b_mid = cfg.drive(t + 0.5 * h);
            const ComplexAmplitude k1 = f(a, cfg.drive(t));
            const ComplexAmplitude k2 = f(a + 0.5 * h * k1, b_mid);
            const ComplexAmplitude k3 = f(a + 0.5 * h * k2, b_mid);
            const ComplexAmplitude k4 = f(a + h * k3, cfg.drive(t + h));
            a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
            throw DivergenceError("sim: non-finite amplitude at step " + std::to_string(i), i);
        if (i % cfg.record_stride == 0 || i == steps) traj.push(static_cast<double>(i) * h, a);
    }
    return traj;
}

/// Real part of the dominant eigenvalue of the linearization about A = 0 (B = 0).
inline double growth_rate(double gamma_total, double delta, double eps) {
    const double e = std::abs(eps);
    if (e >= std::abs(delta)) return -gamma_total + std::sqrt(e * e - delta * delta);
    return -gamma_total;
}

inline double growth_rate(const DeviceParams& p, double delta, double eps) {
    return growth_rate(p.gamma_total(), delta, eps);
}

struct SettledState {
    double n = 0.0;
    std::optional<double> phase;  ///< undefined for an empty resonator
};

/// Final photon number and phase if |A|^2 varies by less than `tol` (relative) over the
/// trailing `window` seconds. Photon numbers below `empty_floor` count as an empty resonator.
inline std::optional<SettledState> steady_state_detect(const Trajectory& traj, double window, double tol,
                                                       double empty_floor = 1e-12) {
    if (traj.size() < 2) return std::nullopt;
    const double t_end = traj.times.back();
    if (!(window > 0.0) || window >= t_end - traj.times.front()) return std::nullopt;

    double lo = traj.photon_numbers.back();
    double hi = lo;
    for (std::size_t i = traj.size(); i-- > 0 && traj.times[i] >= t_end - window;) {
        lo = std::min(lo, traj.photon_numbers[i]);
        hi = std::max(hi, traj.photon_numbers[i]);
    }
    if (hi < empty_floor) return SettledState{0.0, std::nullopt};
    if ((hi - lo) > tol * hi) return std::nullopt;
    return SettledState{traj.photon_numbers.back(), std::arg(traj.amplitudes.back())};
}

} // namespace jpo

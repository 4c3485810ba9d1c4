#pragma once

#include <numbers>

namespace jpo {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Magnetic flux quantum h/2e in Wb (CODATA).
inline constexpr double flux_quantum = 2.067833848e-15;

/// von Klitzing constant h/e^2 in ohm (CODATA).
inline constexpr double klitzing_resistance = 25812.807;

inline constexpr double hz_to_rad(double hz) noexcept { return two_pi * hz; }
inline constexpr double rad_to_hz(double rad_per_s) noexcept { return rad_per_s / two_pi; }

} // namespace jpo

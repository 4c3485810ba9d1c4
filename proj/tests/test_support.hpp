#pragma once

#include <cmath>
#include <functional>

#include "jpo/constants.hpp"
#include "jpo/device_model.hpp"

namespace jpo::testing {

/// Sample I with the damping rates measured at F = -0.15 pi.
inline DeviceParams sample_one() {
    DeviceParams p;
    p.omega_bare = hz_to_rad(5.645e9);
    p.gamma0 = 0.0898;
    p.z0 = 50.0;
    p.i_c = 2.18e-6;
    p.gamma_ext = hz_to_rad(429e3);
    p.gamma_int = hz_to_rad(354e3);
    return p;
}

inline DeviceParams sample_two() {
    DeviceParams p;
    p.omega_bare = hz_to_rad(5.626e9);
    p.gamma0 = 0.0563;
    p.z0 = 50.0;
    p.i_c = 3.48e-6;
    p.gamma_ext = hz_to_rad(400e3);
    p.gamma_int = hz_to_rad(300e3);
    return p;
}

inline double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

inline double central_d1(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

inline double central_d2(const std::function<double(double)>& f, double x, double h) {
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

} // namespace jpo::testing

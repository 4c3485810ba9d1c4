#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace jpo {

/// Real roots of x^3 + a x^2 + b x + c, sorted ascending. A near-double root
/// (discriminant within rounding of zero) is returned twice.
inline std::vector<double> solve_monic_cubic(double a, double b, double c) {
    const double shift = a / 3.0;
    const double p = b - a * a / 3.0;
    const double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    const double hq = q / 2.0;
    const double tp = p / 3.0;
    const double disc = hq * hq + tp * tp * tp;
    const double disc_scale = hq * hq + std::abs(tp * tp * tp);

    std::vector<double> roots;
    if (disc_scale == 0.0) {
        roots = {-shift, -shift, -shift};
    } else if (disc > 1e-12 * disc_scale) {
        const double s = std::sqrt(disc);
        // Pick the larger-magnitude cube to avoid cancellation.
        const double u = std::cbrt(-hq + (hq <= 0.0 ? s : -s));
        const double t = u - tp / u;
        roots = {t - shift};
    } else if (disc > -1e-12 * disc_scale) {
        const double u = std::cbrt(-hq);
        roots = {2.0 * u - shift, -u - shift, -u - shift};
    } else {
        const double m = 2.0 * std::sqrt(-tp);
        const double arg = std::clamp(3.0 * q / (2.0 * p) * std::sqrt(-1.0 / tp), -1.0, 1.0);
        const double theta = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k)
            roots.push_back(m * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0) - shift);
    }

    for (double& x : roots) {
        // One or two Newton steps; keep only those that reduce the residual.
        for (int it = 0; it < 2; ++it) {
            const double f = ((x + a) * x + b) * x + c;
            const double df = (3.0 * x + 2.0 * a) * x + b;
            if (df == 0.0) break;
            const double xn = x - f / df;
            const double fn = ((xn + a) * xn + b) * xn + c;
            if (std::abs(fn) < std::abs(f)) x = xn;
            else break;
        }
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

} // namespace jpo

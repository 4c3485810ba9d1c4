#pragma once

// Parameter recovery from measurement-style data: tuning curve, low-power
// reflection trace and Duffing shift versus probe power.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "jpo/device_model.hpp"
#include "jpo/steady_state.hpp"

namespace jpo {

struct DataSeries {
    std::vector<double> x;
    std::vector<double> y;
    std::optional<std::vector<double>> sigma;

    std::size_t size() const noexcept { return x.size(); }

    double weight(std::size_t i) const { return sigma ? 1.0 / ((*sigma)[i] * (*sigma)[i]) : 1.0; }

    void validate(std::size_t n_params) const {
        if (x.size() != y.size()) throw ValidationError("data: x and y lengths differ");
        if (sigma && sigma->size() != x.size()) throw ValidationError("data: sigma length differs");
        if (x.size() < n_params + 1) throw ValidationError("data: too few points for the number of parameters");
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw ValidationError("data: non-finite value");
            if (sigma && !((*sigma)[i] > 0.0 && std::isfinite((*sigma)[i])))
                throw ValidationError("data: sigma must be positive and finite");
        }
    }
};

struct NamedValue {
    std::string name;
    double value = 0.0;
};

struct FitResult {
    std::vector<NamedValue> params;
    double residual_norm = 0.0;   ///< sqrt of the weighted sum of squared residuals
    std::size_t iterations = 0;
    bool converged = false;
    std::optional<std::vector<double>> covariance_diag;
    double gradient_norm = 0.0;   ///< max cosine between residual and Jacobian columns
    bool degenerate = false;
    std::vector<double> residual_history;  ///< residual_norm after each accepted step
    std::vector<std::string> warnings;

    double value(const std::string& name) const {
        for (const auto& p : params)
            if (p.name == name) return p.value;
        throw std::out_of_range("fit result has no parameter " + name);
    }
};

// ---------------------------------------------------------------------------
// Levenberg-Marquardt with box constraints by projection.

struct LeastSquaresProblem {
    /// Fills weighted residuals (model - y) / sigma and their Jacobian for the given parameters.
    std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd&)> evaluate;
    Eigen::VectorXd lower;
    Eigen::VectorXd upper;
    double data_norm = 1.0;  ///< norm of the weighted observations, for the exact-fit test
};

struct LmOptions {
    std::size_t max_iterations = 200;
    double lambda0 = 1e-3;
    double gradient_tol = 1e-10;
    double step_tol = 1e-14;
};

struct LmOutcome {
    Eigen::VectorXd x;
    Eigen::MatrixXd jacobian;
    double cost = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
    double gradient_norm = 0.0;
    std::vector<double> history;
};

namespace detail {

inline Eigen::VectorXd project(const Eigen::VectorXd& x, const LeastSquaresProblem& prob) {
    return x.cwiseMax(prob.lower).cwiseMin(prob.upper);
}

/// Largest |cos| between the residual and a Jacobian column, skipping parameters
/// held at a bound by a gradient that points outward.
inline double projected_gradient_cosine(const Eigen::VectorXd& x, const Eigen::VectorXd& r, const Eigen::MatrixXd& J,
                                        const LeastSquaresProblem& prob) {
    const double rn = r.norm();
    if (rn == 0.0) return 0.0;
    const Eigen::VectorXd g = J.transpose() * r;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const bool at_lower = x[j] <= prob.lower[j] && g[j] > 0.0;
        const bool at_upper = x[j] >= prob.upper[j] && g[j] < 0.0;
        if (at_lower || at_upper) continue;
        const double cn = J.col(j).norm();
        if (cn > 0.0) worst = std::max(worst, std::abs(g[j]) / (cn * rn));
    }
    return worst;
}

} // namespace detail

inline LmOutcome levenberg_marquardt(const LeastSquaresProblem& prob, Eigen::VectorXd x0, const LmOptions& opt = {}) {
    LmOutcome out;
    out.x = detail::project(x0, prob);
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    prob.evaluate(out.x, r, J);
    out.cost = r.squaredNorm();
    out.history.push_back(std::sqrt(out.cost));
    double lambda = opt.lambda0;

    auto exact_fit = [&](double cost) { return std::sqrt(cost) <= 1e-13 * prob.data_norm; };
    // Rounding in the residuals bounds the attainable cosine at about eps * |y| / |r|.
    auto gradient_ok = [&](double grad, double cost) {
        const double floor = 10.0 * std::numeric_limits<double>::epsilon() * prob.data_norm / std::sqrt(cost);
        return grad < std::max(opt.gradient_tol, floor);
    };

    for (out.iterations = 0; out.iterations < opt.max_iterations; ++out.iterations) {
        out.gradient_norm = detail::projected_gradient_cosine(out.x, r, J, prob);
        if (exact_fit(out.cost) || gradient_ok(out.gradient_norm, out.cost)) {
            out.converged = true;
            break;
        }
        const Eigen::MatrixXd jtj = J.transpose() * J;
        const Eigen::VectorXd jtr = J.transpose() * r;
        // Parameters pinned at a bound by an outward gradient are frozen for this step.
        std::vector<Eigen::Index> free;
        for (Eigen::Index j = 0; j < out.x.size(); ++j) {
            const bool pinned = (out.x[j] <= prob.lower[j] && jtr[j] > 0.0) || (out.x[j] >= prob.upper[j] && jtr[j] < 0.0);
            if (!pinned) free.push_back(j);
        }
        const auto nf = static_cast<Eigen::Index>(free.size());
        bool accepted = false;
        while (lambda < 1e16) {
            Eigen::MatrixXd a(nf, nf);
            Eigen::VectorXd rhs(nf);
            for (Eigen::Index i = 0; i < nf; ++i) {
                rhs[i] = -jtr[free[i]];
                for (Eigen::Index k = 0; k < nf; ++k) a(i, k) = jtj(free[i], free[k]);
                a(i, i) += lambda * std::max(jtj(free[i], free[i]), 1e-300);
            }
            const Eigen::VectorXd reduced = a.ldlt().solve(rhs);
            Eigen::VectorXd step = Eigen::VectorXd::Zero(out.x.size());
            for (Eigen::Index i = 0; i < nf; ++i) step[free[i]] = reduced[i];
            const Eigen::VectorXd trial = detail::project(out.x + step, prob);
            Eigen::VectorXd r_trial;
            Eigen::MatrixXd j_trial;
            prob.evaluate(trial, r_trial, j_trial);
            const double cost_trial = r_trial.squaredNorm();
            if (std::isfinite(cost_trial) && cost_trial <= out.cost) {
                const double rel_step = (trial - out.x).cwiseAbs().cwiseQuotient(
                    out.x.cwiseAbs().cwiseMax(Eigen::VectorXd::Constant(out.x.size(), 1e-300))).maxCoeff();
                const bool no_progress = cost_trial == out.cost;
                out.x = trial;
                r = std::move(r_trial);
                J = std::move(j_trial);
                out.cost = cost_trial;
                out.history.push_back(std::sqrt(out.cost));
                lambda = std::max(lambda / 10.0, 1e-15);
                accepted = true;
                if (rel_step < opt.step_tol || no_progress) {
                    out.gradient_norm = detail::projected_gradient_cosine(out.x, r, J, prob);
                    out.converged = exact_fit(out.cost) || gradient_ok(out.gradient_norm, out.cost);
                    out.jacobian = J;
                    ++out.iterations;
                    return out;
                }
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // Stalled at the rounding floor.
            out.gradient_norm = detail::projected_gradient_cosine(out.x, r, J, prob);
            out.converged = exact_fit(out.cost) || gradient_ok(out.gradient_norm, out.cost);
            break;
        }
    }
    out.jacobian = J;
    return out;
}

inline std::optional<std::vector<double>> covariance_diagonal(const Eigen::MatrixXd& J, double cost, bool absolute_sigma) {
    const auto m = J.rows();
    const auto n = J.cols();
    if (m <= n) return std::nullopt;
    // Column scaling keeps the rank test meaningful when parameters differ by many decades.
    const Eigen::VectorXd norms = J.colwise().norm().transpose();
    if ((norms.array() == 0.0).any()) return std::nullopt;
    const Eigen::MatrixXd js = J * norms.cwiseInverse().asDiagonal();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(js.transpose() * js);
    if (!lu.isInvertible()) return std::nullopt;
    const double scale = absolute_sigma ? 1.0 : cost / static_cast<double>(m - n);
    const Eigen::MatrixXd inv = lu.inverse();
    std::vector<double> out(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j)
        out[static_cast<std::size_t>(j)] = scale * inv(j, j) / (norms[j] * norms[j]);
    return out;
}

/// Reciprocal condition number of the column-normalized Jacobian.
inline double normalized_rcond(const Eigen::MatrixXd& J) {
    Eigen::MatrixXd jn = J;
    for (Eigen::Index j = 0; j < jn.cols(); ++j) {
        const double cn = jn.col(j).norm();
        if (cn == 0.0) return 0.0;
        jn.col(j) /= cn;
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(jn);
    const auto& s = svd.singularValues();
    return s[s.size() - 1] / s[0];
}

namespace detail {

inline double weighted_data_norm(const DataSeries& d) {
    double acc = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) acc += d.weight(i) * d.y[i] * d.y[i];
    return std::sqrt(acc);
}

inline FitResult to_fit_result(const LmOutcome& o, std::vector<std::string> names, bool absolute_sigma) {
    FitResult res;
    for (std::size_t j = 0; j < names.size(); ++j)
        res.params.push_back({std::move(names[j]), o.x[static_cast<Eigen::Index>(j)]});
    res.residual_norm = std::sqrt(o.cost);
    res.iterations = o.iterations;
    res.converged = o.converged;
    res.gradient_norm = o.gradient_norm;
    res.residual_history = o.history;
    res.covariance_diag = covariance_diagonal(o.jacobian, o.cost, absolute_sigma);
    return res;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Tuning curve: omega_r(F) = omega_bare / (1 + gamma0 / |cos F|). x = flux (rad), y = omega (rad/s).

inline constexpr double gamma0_upper_bound = 0.5;

inline FitResult fit_tuning_curve(const DataSeries& data) {
    data.validate(2);
    const auto [xmin, xmax] = std::minmax_element(data.x.begin(), data.x.end());
    if (*xmin <= -pi / 2.0 || *xmax >= pi / 2.0) throw ValidationError("tuning fit: flux must lie in (-pi/2, pi/2)");
    if (*xmax - *xmin < 0.2 * pi) throw ValidationError("tuning fit: flux span below 0.2 pi, parameters not resolvable");
    for (double y : data.y)
        if (!(y > 0.0)) throw ValidationError("tuning fit: frequencies must be positive");

    // Exact linearization 1/omega = 1/omega_bare + (gamma0/omega_bare) / |cos F| for the start point.
    const std::size_t m = data.size();
    double sw = 0, su = 0, sv = 0, suu = 0, suv = 0;
    for (std::size_t i = 0; i < m; ++i) {
        const double w = data.weight(i) * data.y[i] * data.y[i] * data.y[i] * data.y[i];
        const double u = 1.0 / std::abs(std::cos(data.x[i]));
        const double v = 1.0 / data.y[i];
        sw += w; su += w * u; sv += w * v; suu += w * u * u; suv += w * u * v;
    }
    const double det = sw * suu - su * su;
    double a = sv / sw, b = 0.0;
    if (det > 0.0) {
        b = (sw * suv - su * sv) / det;
        a = (sv - b * su) / sw;
    }
    Eigen::VectorXd x0(2);
    x0 << 1.0 / a, std::clamp(b / a, 0.0, gamma0_upper_bound);

    LeastSquaresProblem prob;
    prob.lower = Eigen::Vector2d(std::numeric_limits<double>::min(), 0.0);
    prob.upper = Eigen::Vector2d(std::numeric_limits<double>::infinity(), gamma0_upper_bound);
    prob.data_norm = detail::weighted_data_norm(data);
    prob.evaluate = [&data, m](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& J) {
        r.resize(static_cast<Eigen::Index>(m));
        J.resize(static_cast<Eigen::Index>(m), 2);
        DeviceParams dev;
        dev.omega_bare = p[0];
        dev.gamma0 = p[1];
        for (std::size_t i = 0; i < m; ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            const double sw_i = std::sqrt(data.weight(i));
            const double c = std::abs(std::cos(data.x[i]));
            const double g = c + dev.gamma0;
            r[k] = sw_i * (resonance_frequency(dev, FluxBias(data.x[i])) - data.y[i]);
            J(k, 0) = sw_i * c / g;
            J(k, 1) = -sw_i * dev.omega_bare * c / (g * g);
        }
    };
    const LmOutcome o = levenberg_marquardt(prob, x0);
    if (normalized_rcond(o.jacobian) < 1e-10)
        throw ConvergenceError("tuning fit: rank-deficient Jacobian, flux span too narrow");
    if (!o.converged && o.iterations >= 200) throw ConvergenceError("tuning fit: no convergence after 200 iterations");
    return detail::to_fit_result(o, {"omega_bare", "gamma0"}, data.sigma.has_value());
}

// ---------------------------------------------------------------------------
// Reflection trace: |C/B|^2 = 1 - 4 G0 GR / ((omega - omega_r)^2 + G^2). x = probe frequency (rad/s).

/// Which of the two damping rates dominates. Power data alone cannot tell them apart.
enum class Coupling { unknown, over, under };

struct ReflectionFitOptions {
    std::optional<double> omega_guess;
    Coupling coupling = Coupling::unknown;
    std::optional<std::vector<double>> phase;  ///< arg(C/B) at each x, breaks the exchange symmetry
};

namespace detail {

inline double wrapped(double a) { return std::remainder(a, two_pi); }

inline double phase_mismatch(const DataSeries& data, const std::vector<double>& phase, double omega_r, double g_ext,
                             double g_int) {
    double acc = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double e = wrapped(std::arg(reflection_amplitude(data.x[i] - omega_r, g_ext, g_int)) - phase[i]);
        acc += e * e;
    }
    return acc;
}

} // namespace detail

inline FitResult fit_reflection_trace(const DataSeries& data, const ReflectionFitOptions& opt = {}) {
    data.validate(3);
    if (opt.phase && opt.phase->size() != data.size()) throw ValidationError("reflection fit: phase length differs");
    const std::size_t m = data.size();

    const auto imin = static_cast<std::size_t>(std::min_element(data.y.begin(), data.y.end()) - data.y.begin());
    const double depth = 1.0 - data.y[imin];
    const double center = opt.omega_guess.value_or(data.x[imin]);

    if (!(depth > 1e-6)) {
        FitResult res;
        res.params = {{"omega_r", center}, {"gamma_ext", 0.0}, {"gamma_int", 0.0}};
        res.degenerate = true;
        res.warnings.emplace_back("reflection fit: no resonance dip, damping rates not resolvable");
        return res;
    }

    // Half width at half depth of the Lorentzian dip is Gamma.
    double lo = data.x[imin], hi = data.x[imin];
    for (std::size_t i = 0; i < m; ++i)
        if (1.0 - data.y[i] >= 0.5 * depth) {
            lo = std::min(lo, data.x[i]);
            hi = std::max(hi, data.x[i]);
        }
    const auto [xmin, xmax] = std::minmax_element(data.x.begin(), data.x.end());
    double gamma = 0.5 * (hi - lo);
    if (!(gamma > 0.0)) gamma = (*xmax - *xmin) / static_cast<double>(m);
    if (*xmax - *xmin < 6.0 * gamma) throw ValidationError("reflection fit: trace must span at least 6 Gamma");

    const double root = std::sqrt(std::max(0.0, 1.0 - std::min(depth, 1.0)));
    const double big = 0.5 * gamma * (1.0 + root);
    const double small = 0.5 * gamma * (1.0 - root);
    Eigen::VectorXd x0(3);
    x0 << center, big, std::max(small, 1e-6 * gamma);

    LeastSquaresProblem prob;
    prob.lower = Eigen::Vector3d(-std::numeric_limits<double>::infinity(), 0.0, 0.0);
    prob.upper = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    prob.data_norm = detail::weighted_data_norm(data);
    prob.evaluate = [&data, m](const Eigen::VectorXd& p, Eigen::VectorXd& r, Eigen::MatrixXd& J) {
        r.resize(static_cast<Eigen::Index>(m));
        J.resize(static_cast<Eigen::Index>(m), 3);
        const double g0 = p[1], gr = p[2], g = g0 + gr;
        for (std::size_t i = 0; i < m; ++i) {
            const auto k = static_cast<Eigen::Index>(i);
            const double sw_i = std::sqrt(data.weight(i));
            const double z = data.x[i] - p[0];
            const double den = z * z + g * g;
            const double frac = 4.0 * g0 * gr / den;
            r[k] = sw_i * (1.0 - frac - data.y[i]);
            J(k, 0) = -sw_i * frac * 2.0 * z / den;
            J(k, 1) = -sw_i * (4.0 * gr / den - frac * 2.0 * g / den);
            J(k, 2) = -sw_i * (4.0 * g0 / den - frac * 2.0 * g / den);
        }
    };
    const LmOutcome o = levenberg_marquardt(prob, x0);
    if (!o.converged && o.iterations >= 200) throw ConvergenceError("reflection fit: no convergence after 200 iterations");

    FitResult res = detail::to_fit_result(o, {"omega_r", "gamma_ext", "gamma_int"}, data.sigma.has_value());
    double& g_ext = res.params[1].value;
    double& g_int = res.params[2].value;
    bool want_ext_larger = true;
    if (opt.phase) {
        const double keep = detail::phase_mismatch(data, *opt.phase, res.params[0].value, g_ext, g_int);
        const double swap = detail::phase_mismatch(data, *opt.phase, res.params[0].value, g_int, g_ext);
        want_ext_larger = (keep <= swap) == (g_ext >= g_int);
    } else if (opt.coupling == Coupling::under) {
        want_ext_larger = false;
    } else if (opt.coupling == Coupling::unknown) {
        res.warnings.emplace_back(
            "reflection fit: external/internal damping exchange ambiguous without coupling flag or phase data");
    }
    if ((g_ext < g_int) == want_ext_larger) {
        std::swap(g_ext, g_int);
        if (res.covariance_diag) std::swap((*res.covariance_diag)[1], (*res.covariance_diag)[2]);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Duffing shift versus probe power: delta_omega = -2 alpha G0 |B|^2 / G^2. x = |B|^2, y = shift (rad/s).

inline FitResult fit_duffing_alpha(const DataSeries& data, double gamma_ext, double gamma_total) {
    data.validate(1);
    if (!(gamma_ext > 0.0) || !(gamma_total >= gamma_ext)) throw ValidationError("alpha fit: need 0 < gamma_ext <= gamma_total");
    const std::size_t m = data.size();

    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double w = data.weight(i);
        sxx += w * data.x[i] * data.x[i];
        sxy += w * data.x[i] * data.y[i];
    }
    if (!(sxx > 0.0)) throw ValidationError("alpha fit: power values must not all be zero");
    const double slope = sxy / sxx;
    const double to_alpha = -gamma_total * gamma_total / (2.0 * gamma_ext);

    double chi_lin = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double e = data.y[i] - slope * data.x[i];
        chi_lin += data.weight(i) * e * e;
    }

    FitResult res;
    res.params = {{"alpha", slope * to_alpha}};
    res.residual_norm = std::sqrt(chi_lin);
    res.iterations = 1;
    res.converged = true;
    res.residual_history = {res.residual_norm};
    const double var_slope = (data.sigma ? 1.0 : chi_lin / static_cast<double>(m - 1)) / sxx;
    res.covariance_diag = std::vector<double>{var_slope * to_alpha * to_alpha};

    // Curvature check against y = s x + c x^2.
    const double exact_floor = 1e-12 * detail::weighted_data_norm(data);
    if (m >= 3 && chi_lin > exact_floor * exact_floor) {
        Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
        Eigen::Vector2d b = Eigen::Vector2d::Zero();
        for (std::size_t i = 0; i < m; ++i) {
            const double w = data.weight(i), x = data.x[i];
            const Eigen::Vector2d phi(x, x * x);
            a += w * phi * phi.transpose();
            b += w * phi * data.y[i];
        }
        const Eigen::Vector2d c = a.fullPivLu().solve(b);
        double chi_quad = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double e = data.y[i] - c[0] * data.x[i] - c[1] * data.x[i] * data.x[i];
            chi_quad += data.weight(i) * e * e;
        }
        const double red_lin = chi_lin / static_cast<double>(m - 1);
        const double red_quad = chi_quad / static_cast<double>(m - 2);
        // Without sigma, the quadratic fit's residual variance stands in for the noise level.
        const double red_chi = data.sigma ? red_lin : (red_quad > 0.0 ? red_lin / red_quad : std::numeric_limits<double>::infinity());
        if (red_chi > 4.0 && chi_quad < chi_lin)
            res.warnings.emplace_back("alpha fit: residual curvature, data leave the linear-in-power regime");
    }
    return res;
}

} // namespace jpo

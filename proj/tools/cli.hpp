#pragma once

// Command-line front end. `run` is kept free of process state so the test
// suite can drive it in-process.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "jpo/calibration.hpp"
#include "jpo/device_model.hpp"
#include "jpo/dynamics.hpp"
#include "jpo/instability_region.hpp"
#include "jpo/io.hpp"
#include "jpo/pump_compensation.hpp"
#include "jpo/steady_state.hpp"

namespace jpo::cli {

inline constexpr const char* tool_version = "0.1.0";

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int numerical = 1;
inline constexpr int validation = 2;
} // namespace exit_code

using io::json;

/// Column-oriented result that renders to CSV or JSON.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<json>> rows;

    std::string to_csv(const json& provenance) const {
        std::ostringstream os;
        os << "# " << provenance.dump() << '\n';
        for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
        os << '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) os << ',';
                const auto& v = row[i];
                if (v.is_null()) continue;
                if (v.is_boolean()) os << (v.get<bool>() ? "true" : "false");
                else if (v.is_number_integer()) os << v.get<long long>();
                else if (v.is_number_unsigned()) os << v.get<unsigned long long>();
                else os << io::format_number(v.get<double>());
            }
            os << '\n';
        }
        return os.str();
    }

    std::string to_json(const json& provenance) const {
        json doc;
        doc["provenance"] = provenance;
        for (std::size_t c = 0; c < columns.size(); ++c) {
            json col = json::array();
            for (const auto& row : rows) col.push_back(row[c].is_number_float() ? io::json_number(row[c].get<double>()) : row[c]);
            doc[columns[c]] = std::move(col);
        }
        return doc.dump() + "\n";
    }
};

struct Context {
    std::string command_line;
    std::ostream& out;

    json provenance(const std::optional<DeviceParams>& device) const {
        json p;
        p["tool"] = "jpo";
        p["version"] = tool_version;
        p["command"] = command_line;
        p["device_hash"] = device ? json(io::device_hash(*device)) : json(nullptr);
        return p;
    }

    void emit(const std::string& path, const std::string& content) const {
        if (path.empty() || path == "-") out << content;
        else io::write_atomic(path, content);
    }
};

inline std::string json_document(json body, const json& provenance) {
    json doc;
    doc["provenance"] = provenance;
    for (auto& [k, v] : body.items()) doc[k] = v;
    return doc.dump(2) + "\n";
}

inline void require_format(const std::string& format, std::initializer_list<const char*> allowed) {
    for (const char* a : allowed)
        if (format == a) return;
    throw ValidationError("format '" + format + "' is not supported by this subcommand");
}

// ---------------------------------------------------------------------------

struct CommonOptions {
    std::string device_path;
    std::string output = "-";
    std::string format;
};

inline void add_common(CLI::App* sub, CommonOptions& o, bool device_required) {
    auto* d = sub->add_option("--device", o.device_path, "device parameter JSON");
    if (device_required) d->required();
    sub->add_option("-o,--output", o.output, "output path, '-' for stdout");
    sub->add_option("--format", o.format, "csv or json");
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Josephson parametric oscillator modeling toolkit", "jpo"};
    app.require_subcommand(1);
    app.set_version_flag("--version", tool_version);

    std::string command_line;
    for (std::size_t i = 0; i < args.size(); ++i) command_line += (i ? " " : "") + args[i];
    const Context ctx{command_line, out};

    // tune-curve
    CommonOptions tune_o;
    std::string tune_fmin = "-0.45pi", tune_fmax = "0.45pi";
    std::size_t tune_points = 181;
    auto* tune = app.add_subcommand("tune-curve", "resonance frequency versus dc flux");
    add_common(tune, tune_o, true);
    tune->add_option("--flux-min", tune_fmin, "lower flux bound (rad or '<x>pi')");
    tune->add_option("--flux-max", tune_fmax, "upper flux bound (rad or '<x>pi')");
    tune->add_option("--points", tune_points, "number of flux points");

    // coeffs
    CommonOptions coeffs_o;
    std::string coeffs_flux;
    std::optional<double> coeffs_df1;
    auto* coeffs = app.add_subcommand("coeffs", "flux-dependent model coefficients");
    add_common(coeffs, coeffs_o, true);
    coeffs->add_option("--flux", coeffs_flux, "dc flux bias (rad or '<x>pi')")->required();
    coeffs->add_option("--df1", coeffs_df1, "ac flux amplitude in rad; adds epsilon_hz");

    // region
    CommonOptions region_o;
    std::optional<double> region_beta;
    std::string region_flux;
    double region_span = 5.0;
    std::size_t region_points = 201;
    auto* region = app.add_subcommand("region", "parametric instability region boundaries (units of Gamma)");
    add_common(region, region_o, false);
    region->add_option("--beta", region_beta, "dimensionless pump-induced shift coefficient");
    region->add_option("--flux", region_flux, "compute beta from --device at this flux instead");
    region->add_option("--delta-span", region_span, "detuning half-range in units of Gamma");
    region->add_option("--points", region_points, "number of detuning points");

    // sweep
    CommonOptions sweep_o;
    std::string sweep_flux;
    double sweep_power = 0.0, sweep_span = 5.0;
    std::size_t sweep_points = 201;
    auto* sweep = app.add_subcommand("sweep", "probe detuning sweep of the steady-state response");
    add_common(sweep, sweep_o, true);
    sweep->add_option("--flux", sweep_flux, "dc flux bias")->required();
    sweep->add_option("--power", sweep_power, "incoming photon flux |B|^2 in photons/s")->required();
    sweep->add_option("--span", sweep_span, "detuning half-range in units of Gamma");
    sweep->add_option("--points", sweep_points, "number of detuning points");

    // simulate
    CommonOptions sim_o;
    std::string sim_config, sim_flux;
    double sim_delta_hz = 0.0;
    std::optional<double> sim_eps_hz, sim_df1, sim_alpha_hz;
    auto* simulate = app.add_subcommand("simulate", "integrate the slow-amplitude equation");
    add_common(simulate, sim_o, true);
    simulate->add_option("--config", sim_config, "simulation config JSON")->required();
    simulate->add_option("--delta-hz", sim_delta_hz, "pump detuning omega_p/2 - omega_r, Hz");
    simulate->add_option("--eps-hz", sim_eps_hz, "effective pump strength, Hz");
    simulate->add_option("--df1", sim_df1, "ac flux amplitude in rad (epsilon from device at --flux)");
    simulate->add_option("--alpha-hz", sim_alpha_hz, "Duffing shift per photon, Hz (default: device at --flux)");
    simulate->add_option("--flux", sim_flux, "dc flux bias");

    // compensate
    CommonOptions comp_o;
    std::string comp_flux, comp_report = "-";
    double comp_df1 = 0.0;
    std::optional<double> comp_pump_hz;
    std::size_t comp_samples = 1024;
    auto* compensate = app.add_subcommand("compensate", "two-tone compensated pump waveform and spectral check");
    add_common(compensate, comp_o, true);
    compensate->add_option("--flux", comp_flux, "dc flux bias")->required();
    compensate->add_option("--df1", comp_df1, "fundamental ac flux amplitude, rad")->required();
    compensate->add_option("--pump-hz", comp_pump_hz, "pump frequency, Hz (default 2 omega_r)");
    compensate->add_option("--samples", comp_samples, "samples per pump period (power of two >= 256)");
    compensate->add_option("--report", comp_report, "spectral report JSON path, '-' for stdout");

    // fit
    CommonOptions fit_o;
    std::string fit_data, fit_kind, fit_coupling = "unknown", fit_flux;
    std::optional<double> fit_omega_guess_hz, fit_gext_hz, fit_gtot_hz;
    auto* fit = app.add_subcommand("fit", "fit device parameters to measurement-style data");
    add_common(fit, fit_o, false);
    fit->add_option("--data", fit_data, "CSV with header (flux_rad|detuning_hz|power_pps),value[,sigma]")->required();
    fit->add_option("--kind", fit_kind, "tuning, reflection or duffing (default: from the x column)");
    fit->add_option("--omega-guess-hz", fit_omega_guess_hz, "reflection: initial resonance frequency");
    fit->add_option("--coupling", fit_coupling, "reflection: over, under or unknown");
    fit->add_option("--gamma-ext-hz", fit_gext_hz, "duffing: external damping rate");
    fit->add_option("--gamma-tot-hz", fit_gtot_hz, "duffing: total damping rate");

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        if (!rev.empty()) rev.pop_back();  // program name
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_code::ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_code::ok;
    } catch (const CLI::CallForVersion&) {
        out << tool_version << '\n';
        return exit_code::ok;
    } catch (const CLI::ParseError& e) {
        err << "jpo: " << e.what() << '\n';
        return exit_code::validation;
    }

    try {
        auto device_of = [](const CommonOptions& o) -> std::optional<DeviceParams> {
            if (o.device_path.empty()) return std::nullopt;
            return io::load_device(o.device_path);
        };

        if (tune->parsed()) {
            const auto dev = device_of(tune_o);
            const std::string fmt = tune_o.format.empty() ? "csv" : tune_o.format;
            require_format(fmt, {"csv", "json"});
            const double lo = io::parse_flux(tune_fmin), hi = io::parse_flux(tune_fmax);
            if (!(lo < hi)) throw ValidationError("tune-curve: --flux-min must be below --flux-max");
            if (tune_points < 2) throw ValidationError("tune-curve: need at least 2 points");
            Table t{{"flux_rad", "omega_hz"}, {}};
            for (std::size_t i = 0; i < tune_points; ++i) {
                const double f = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(tune_points - 1);
                t.rows.push_back({f, rad_to_hz(resonance_frequency(*dev, FluxBias(f)))});
            }
            ctx.emit(tune_o.output, fmt == "csv" ? t.to_csv(ctx.provenance(dev)) : t.to_json(ctx.provenance(dev)));
        } else if (coeffs->parsed()) {
            const auto dev = device_of(coeffs_o);
            require_format(coeffs_o.format.empty() ? "json" : coeffs_o.format, {"json"});
            const FluxBias f(io::parse_flux(coeffs_flux));
            json body;
            body["flux_rad"] = io::json_number(f.radians());
            body["omega_r_hz"] = io::json_number(rad_to_hz(resonance_frequency(*dev, f)));
            body["alpha0_hz"] = io::json_number(rad_to_hz(alpha0(*dev)));
            body["alpha_hz_per_photon"] = io::json_number(rad_to_hz(duffing_alpha(*dev, f)));
            body["alpha_over_alpha0"] = io::json_number(alpha_over_alpha0(*dev, f));
            const bool beta_defined = std::abs(std::sin(f.reduced())) >= 1e-12 && dev->gamma0 > 0.0;
            body["beta"] = beta_defined ? io::json_number(beta_coefficient(*dev, f)) : json(nullptr);
            body["beta0"] = io::json_number(beta0(*dev));
            body["epsilon_per_df1"] = io::json_number(rad_to_hz(pump_epsilon(*dev, f, 1.0)));
            if (coeffs_df1) {
                const auto warnings = pump_drive_warnings({0.0, *coeffs_df1, std::nullopt});
                body["epsilon_hz"] = io::json_number(rad_to_hz(pump_epsilon(*dev, f, *coeffs_df1)));
                body["warnings"] = warnings;
            }
            ctx.emit(coeffs_o.output, json_document(body, ctx.provenance(dev)));
        } else if (region->parsed()) {
            const auto dev = device_of(region_o);
            const std::string fmt = region_o.format.empty() ? "csv" : region_o.format;
            require_format(fmt, {"csv", "json"});
            double beta = 0.0;
            if (region_beta && !region_flux.empty()) throw ValidationError("region: give either --beta or --flux, not both");
            if (region_beta) {
                beta = *region_beta;
            } else if (!region_flux.empty()) {
                if (!dev) throw ValidationError("region: --flux requires --device");
                beta = beta_coefficient(*dev, FluxBias(io::parse_flux(region_flux)));
            } else {
                throw ValidationError("region: --beta or --device with --flux is required");
            }
            Table t{{"delta_over_gamma", "eps_lower_over_gamma", "eps_upper_over_gamma", "exists"}, {}};
            for (const auto& b : sample_region(beta, region_span, region_points)) {
                const json upper = (b.exists && b.eps_upper) ? json(*b.eps_upper) : json(nullptr);
                t.rows.push_back({b.delta, b.exists ? json(b.eps_lower) : json(nullptr), upper, b.exists});
            }
            ctx.emit(region_o.output, fmt == "csv" ? t.to_csv(ctx.provenance(dev)) : t.to_json(ctx.provenance(dev)));
        } else if (sweep->parsed()) {
            const auto dev = device_of(sweep_o);
            require_format(sweep_o.format.empty() ? "csv" : sweep_o.format, {"csv"});
            if (sweep_points < 2) throw ValidationError("sweep: need at least 2 points");
            if (!(sweep_power >= 0.0)) throw ValidationError("sweep: --power must be >= 0");
            const FluxBias f(io::parse_flux(sweep_flux));
            std::vector<double> detunings(sweep_points);
            const double g = dev->gamma_total();
            for (std::size_t i = 0; i < sweep_points; ++i)
                detunings[i] = g * sweep_span * (-1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(sweep_points - 1));
            Table t{{"delta_omega_hz", "branch_index", "n_photons", "stable", "refl_power", "refl_phase_rad"}, {}};
            for (const auto& r : probe_sweep(*dev, f, sweep_power, detunings))
                t.rows.push_back({rad_to_hz(r.delta_omega), r.branch_index, r.n_photons, r.stable, r.refl_power, r.refl_phase});
            ctx.emit(sweep_o.output, t.to_csv(ctx.provenance(dev)));
        } else if (simulate->parsed()) {
            const auto dev = device_of(sim_o);
            require_format(sim_o.format.empty() ? "csv" : sim_o.format, {"csv"});
            std::ifstream in(sim_config);
            if (!in) throw ValidationError("simulate: cannot open " + sim_config);
            json cfg_json;
            try {
                cfg_json = json::parse(in);
            } catch (const json::parse_error& e) {
                throw ValidationError(std::string("simulate: malformed config JSON: ") + e.what());
            }
            const SimConfig cfg = io::sim_config_from_json(cfg_json);
            std::optional<FluxBias> f;
            if (!sim_flux.empty()) f = FluxBias(io::parse_flux(sim_flux));
            if (sim_eps_hz && sim_df1) throw ValidationError("simulate: give either --eps-hz or --df1, not both");
            double eps = 0.0;
            if (sim_eps_hz) eps = hz_to_rad(*sim_eps_hz);
            else if (sim_df1) {
                if (!f) throw ValidationError("simulate: --df1 requires --flux");
                eps = pump_epsilon(*dev, *f, *sim_df1);
            }
            double alpha = 0.0;
            if (sim_alpha_hz) alpha = hz_to_rad(*sim_alpha_hz);
            else if (f) alpha = duffing_alpha(*dev, *f);
            else throw ValidationError("simulate: --alpha-hz or --flux is required");
            const Trajectory traj = integrate(*dev, hz_to_rad(sim_delta_hz), eps, alpha, cfg);
            Table t{{"t_s", "re_a", "im_a", "n_photons"}, {}};
            for (std::size_t i = 0; i < traj.size(); ++i)
                t.rows.push_back({traj.times[i], traj.amplitudes[i].real(), traj.amplitudes[i].imag(), traj.photon_numbers[i]});
            ctx.emit(sim_o.output, t.to_csv(ctx.provenance(dev)));
        } else if (compensate->parsed()) {
            const auto dev = device_of(comp_o);
            require_format(comp_o.format.empty() ? "csv" : comp_o.format, {"csv"});
            const double f_dc = io::parse_flux(comp_flux);
            const double omega_p =
                comp_pump_hz ? hz_to_rad(*comp_pump_hz) : 2.0 * resonance_frequency(*dev, FluxBias(f_dc));
            const CompensatedPump pump = build_compensated_pump(*dev, f_dc, comp_df1, omega_p);
            const SpectralReport rep = verify_cancelation(*dev, pump, comp_samples);

            Table t{{"t_s", "flux_rad", "omega_hz"}, {}};
            for (const auto& s : sample_waveform(*dev, pump, comp_samples))
                t.rows.push_back({s.t, s.flux, rad_to_hz(s.omega)});

            auto harmonics = [](const HarmonicContent& h) {
                json j;
                j["dc_offset_hz"] = io::json_number(rad_to_hz(h.dc_offset));
                j["h1_hz"] = io::json_number(rad_to_hz(h.h1));
                j["h2_hz"] = io::json_number(rad_to_hz(h.h2));
                j["h3_hz"] = io::json_number(rad_to_hz(h.h3));
                return j;
            };
            json body = harmonics(rep.compensated);
            body["h2_suppression_db"] = io::json_number(rep.h2_suppression_db);
            body["dc_suppression_db"] = io::json_number(rep.dc_suppression_db);
            body["uncompensated"] = harmonics(rep.uncompensated);
            body["pump"] = {{"f_dc_rad", io::json_number(pump.f_dc)},
                            {"f_rec_rad", io::json_number(pump.f_rec)},
                            {"df1_rad", io::json_number(pump.df1)},
                            {"df2_rad", io::json_number(pump.df2)},
                            {"pump_hz", io::json_number(rad_to_hz(pump.omega_p))}};
            body["warnings"] = compensation_warnings(comp_df1);

            const json prov = ctx.provenance(dev);
            const std::string csv = t.to_csv(prov);
            const std::string report = json_document(body, prov);
            const bool both_stdout = (comp_o.output == "-" || comp_o.output.empty()) && comp_report == "-";
            if (both_stdout) {
                out << csv << report;
            } else {
                ctx.emit(comp_o.output, csv);
                ctx.emit(comp_report, report);
            }
        } else if (fit->parsed()) {
            const auto dev = device_of(fit_o);
            require_format(fit_o.format.empty() ? "json" : fit_o.format, {"json"});
            std::ifstream in(fit_data);
            if (!in) throw ValidationError("fit: cannot open " + fit_data);
            io::SeriesFile file = io::read_series_csv(in);
            const std::string inferred = file.x_column == "flux_rad" ? "tuning"
                                         : file.x_column == "detuning_hz" ? "reflection" : "duffing";
            const std::string kind = fit_kind.empty() ? inferred : fit_kind;
            if (kind != inferred)
                throw ValidationError("fit: --kind " + kind + " does not match data column " + file.x_column);
            DataSeries& d = file.data;
            auto scale_series = [](std::vector<double>& v, double s) {
                for (double& x : v) x *= s;
            };

            FitResult res;
            json params;
            auto hz_param = [&](const char* out_name, const std::string& in_name) {
                params[out_name] = io::json_number(rad_to_hz(res.value(in_name)));
            };
            std::vector<double> variance_scale;
            if (kind == "tuning") {
                scale_series(d.y, two_pi);
                if (d.sigma) scale_series(*d.sigma, two_pi);
                res = fit_tuning_curve(d);
                hz_param("omega_bare_hz", "omega_bare");
                params["gamma0"] = io::json_number(res.value("gamma0"));
                variance_scale = {1.0 / (two_pi * two_pi), 1.0};
            } else if (kind == "reflection") {
                scale_series(d.x, two_pi);
                ReflectionFitOptions opt;
                if (fit_omega_guess_hz) opt.omega_guess = hz_to_rad(*fit_omega_guess_hz);
                if (fit_coupling == "over") opt.coupling = Coupling::over;
                else if (fit_coupling == "under") opt.coupling = Coupling::under;
                else if (fit_coupling != "unknown") throw ValidationError("fit: --coupling must be over, under or unknown");
                res = fit_reflection_trace(d, opt);
                hz_param("omega_r_hz", "omega_r");
                hz_param("gamma_ext_hz", "gamma_ext");
                hz_param("gamma_int_hz", "gamma_int");
                const double v = 1.0 / (two_pi * two_pi);
                variance_scale = {v, v, v};
            } else {
                scale_series(d.y, two_pi);
                if (d.sigma) scale_series(*d.sigma, two_pi);
                double g_ext = 0.0, g_tot = 0.0;
                if (fit_gext_hz && fit_gtot_hz) {
                    g_ext = hz_to_rad(*fit_gext_hz);
                    g_tot = hz_to_rad(*fit_gtot_hz);
                } else if (dev) {
                    g_ext = dev->gamma_ext;
                    g_tot = dev->gamma_total();
                } else {
                    throw ValidationError("fit: duffing fit needs --gamma-ext-hz and --gamma-tot-hz or --device");
                }
                res = fit_duffing_alpha(d, g_ext, g_tot);
                hz_param("alpha_hz_per_photon", "alpha");
                variance_scale = {1.0 / (two_pi * two_pi)};
            }
            if (!res.converged && !res.degenerate)
                throw ConvergenceError("fit: " + kind + " fit did not converge after " + std::to_string(res.iterations) +
                                       " iterations (residual " + io::format_number(res.residual_norm) + ")");

            // Residuals are in rad/s for unweighted frequency data.
            const bool freq_residual = kind != "reflection" && !d.sigma;
            json body;
            body["kind"] = kind;
            body["params"] = params;
            body["residual_norm"] = io::json_number(freq_residual ? rad_to_hz(res.residual_norm) : res.residual_norm);
            body["iterations"] = res.iterations;
            body["converged"] = res.converged;
            body["degenerate"] = res.degenerate;
            if (res.covariance_diag) {
                json cov = json::array();
                for (std::size_t i = 0; i < res.covariance_diag->size(); ++i)
                    cov.push_back(io::json_number((*res.covariance_diag)[i] * variance_scale[i]));
                body["covariance_diag"] = cov;
            } else {
                body["covariance_diag"] = nullptr;
            }
            body["warnings"] = res.warnings;
            ctx.emit(fit_o.output, json_document(body, ctx.provenance(dev)));
        }
        return exit_code::ok;
    } catch (const ValidationError& e) {
        err << "jpo: " << e.what() << '\n';
        return exit_code::validation;
    } catch (const DomainError& e) {
        err << "jpo: " << e.what() << '\n';
        return exit_code::validation;
    } catch (const ConvergenceError& e) {
        err << "jpo: numerical failure: " << e.what() << '\n';
        return exit_code::numerical;
    } catch (const DivergenceError& e) {
        err << "jpo: numerical failure: " << e.what() << '\n';
        return exit_code::numerical;
    } catch (const std::exception& e) {
        err << "jpo: " << e.what() << '\n';
        return exit_code::numerical;
    }
}

} // namespace jpo::cli

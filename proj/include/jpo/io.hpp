#pragma once

// File formats: device JSON, simulation config JSON, fit-input CSV, and the
// fixed number formatting used by every output.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "jpo/calibration.hpp"
#include "jpo/device_model.hpp"
#include "jpo/dynamics.hpp"

namespace jpo::io {

using json = nlohmann::ordered_json;

/// 12 significant digits, locale independent.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/// Value rounded to 12 significant digits; non-finite values become null.
inline json json_number(double v) {
    if (!std::isfinite(v)) return nullptr;
    return std::stod(format_number(v));
}

// ---------------------------------------------------------------------------
// Device

inline const std::vector<std::string>& device_keys() {
    static const std::vector<std::string> keys{"omega_bare_hz", "gamma0",       "z0_ohm",
                                               "i_c_amp",       "gamma_ext_hz", "gamma_int_hz"};
    return keys;
}

inline double require_number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ValidationError(where + ": missing key '" + key + "'");
    const auto& v = j.at(key);
    if (!v.is_number()) throw ValidationError(where + ": key '" + key + "' must be a number");
    return v.get<double>();
}

inline DeviceParams device_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("device: document must be a JSON object");
    const auto& keys = device_keys();
    for (const auto& [k, v] : j.items())
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
            throw ValidationError("device: unknown key '" + k + "'");
    DeviceParams p;
    p.omega_bare = hz_to_rad(require_number(j, "omega_bare_hz", "device"));
    p.gamma0 = require_number(j, "gamma0", "device");
    p.z0 = require_number(j, "z0_ohm", "device");
    if (!j.contains("i_c_amp")) throw ValidationError("device: missing key 'i_c_amp'");
    if (!j.at("i_c_amp").is_null()) p.i_c = require_number(j, "i_c_amp", "device");
    p.gamma_ext = hz_to_rad(require_number(j, "gamma_ext_hz", "device"));
    p.gamma_int = hz_to_rad(require_number(j, "gamma_int_hz", "device"));
    p.validate();
    return p;
}

inline json device_to_json(const DeviceParams& p) {
    json j;
    j["omega_bare_hz"] = rad_to_hz(p.omega_bare);
    j["gamma0"] = p.gamma0;
    j["z0_ohm"] = p.z0;
    j["i_c_amp"] = p.i_c ? json(*p.i_c) : json(nullptr);
    j["gamma_ext_hz"] = rad_to_hz(p.gamma_ext);
    j["gamma_int_hz"] = rad_to_hz(p.gamma_int);
    return j;
}

inline DeviceParams load_device(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("device: cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("device: malformed JSON in " + path.string() + ": " + e.what());
    }
    return device_from_json(j);
}

/// FNV-1a 64 of the canonical device JSON, as 16 hex digits.
inline std::string device_hash(const DeviceParams& p) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : device_to_json(p).dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Flux syntax: radians ("0.785") or multiples of pi ("0.25pi", "-pi").

inline double parse_flux(std::string_view text) {
    std::string s(text);
    s.erase(std::remove_if(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); }), s.end());
    if (s.empty()) throw ValidationError("flux: empty value");
    double scale = 1.0;
    if (s.size() >= 2 && s.compare(s.size() - 2, 2, "pi") == 0) {
        scale = pi;
        s.erase(s.size() - 2);
        if (s.empty() || s == "+") s = "1";
        else if (s == "-") s = "-1";
        else if (s.back() == '*') s.pop_back();
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ValidationError("flux: cannot parse '" + std::string(text) + "'");
    }
    if (used != s.size() || !std::isfinite(v)) throw ValidationError("flux: cannot parse '" + std::string(text) + "'");
    return v * scale;
}

// ---------------------------------------------------------------------------
// Simulation config

inline SimConfig sim_config_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("sim config: document must be a JSON object");
    static const std::set<std::string> allowed{"dt_s",  "t_max_s",         "a0_re",        "a0_im",
                                               "seed",  "noise_amplitude", "record_stride", "drive"};
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ValidationError("sim config: unknown key '" + k + "'");
    SimConfig cfg;
    cfg.dt = require_number(j, "dt_s", "sim config");
    cfg.t_max = require_number(j, "t_max_s", "sim config");
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) throw ValidationError("sim config: seed must be a non-negative integer");
        cfg.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("a0_re") || j.contains("a0_im")) {
        cfg.a0 = {j.contains("a0_re") ? require_number(j, "a0_re", "sim config") : 0.0,
                  j.contains("a0_im") ? require_number(j, "a0_im", "sim config") : 0.0};
    } else {
        cfg.a0 = seeded_initial_amplitude(cfg.seed);
    }
    if (j.contains("noise_amplitude")) cfg.noise_amplitude = require_number(j, "noise_amplitude", "sim config");
    if (j.contains("record_stride")) {
        if (!j.at("record_stride").is_number_unsigned() || j.at("record_stride").get<std::uint64_t>() == 0)
            throw ValidationError("sim config: record_stride must be a positive integer");
        cfg.record_stride = j.at("record_stride").get<std::size_t>();
    }
    if (j.contains("drive")) {
        const auto& d = j.at("drive");
        if (!d.is_object() || !d.contains("kind") || !d.at("kind").is_string())
            throw ValidationError("sim config: drive must be an object with a string 'kind'");
        const auto kind = d.at("kind").get<std::string>();
        if (kind == "zero") cfg.drive.kind = ProbeWaveform::Kind::zero;
        else if (kind == "constant") cfg.drive.kind = ProbeWaveform::Kind::constant;
        else if (kind == "pulse") cfg.drive.kind = ProbeWaveform::Kind::pulse;
        else throw ValidationError("sim config: drive kind must be zero, constant or pulse");
        if (cfg.drive.kind != ProbeWaveform::Kind::zero)
            cfg.drive.amplitude = {d.contains("re") ? require_number(d, "re", "drive") : 0.0,
                                   d.contains("im") ? require_number(d, "im", "drive") : 0.0};
        if (cfg.drive.kind == ProbeWaveform::Kind::pulse) {
            cfg.drive.t_on = require_number(d, "t_on_s", "drive");
            cfg.drive.t_off = require_number(d, "t_off_s", "drive");
        }
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// CSV

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

struct SeriesFile {
    std::string x_column;
    DataSeries data;
};

/// Reads `x_column,value[,sigma]` with a header row; lines starting with '#' are skipped.
inline SeriesFile read_series_csv(std::istream& in) {
    static const std::set<std::string> x_names{"flux_rad", "detuning_hz", "power_pps"};
    SeriesFile out;
    std::string line;
    std::vector<std::string> header;
    std::size_t line_no = 0;
    std::vector<double> sigma;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto cells = split_csv_line(line);
        if (header.empty()) {
            header = cells;
            if (header.size() < 2 || header.size() > 3 || !x_names.count(header[0]) || header[1] != "value" ||
                (header.size() == 3 && header[2] != "sigma"))
                throw ValidationError("csv: header must be (flux_rad|detuning_hz|power_pps),value[,sigma]");
            out.x_column = header[0];
            continue;
        }
        if (cells.size() != header.size())
            throw ValidationError("csv: line " + std::to_string(line_no) + " has the wrong number of columns");
        double v[3];
        for (std::size_t i = 0; i < cells.size(); ++i) {
            std::size_t used = 0;
            try {
                v[i] = std::stod(cells[i], &used);
            } catch (const std::exception&) {
                used = std::string::npos;
            }
            if (used != cells[i].size() || cells[i].empty())
                throw ValidationError("csv: line " + std::to_string(line_no) + ": not a number '" + cells[i] + "'");
        }
        out.data.x.push_back(v[0]);
        out.data.y.push_back(v[1]);
        if (header.size() == 3) sigma.push_back(v[2]);
    }
    if (header.empty()) throw ValidationError("csv: missing header row");
    if (header.size() == 3) out.data.sigma = std::move(sigma);
    return out;
}

/// Writes the whole file to a sibling temporary and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

} // namespace jpo::io

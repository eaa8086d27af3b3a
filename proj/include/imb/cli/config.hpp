#pragma once

// Run configuration for the imb-lab front end. Every setting has one
// spelling, used both as the long flag name and as the key in a config file
// ("key = value" lines, '#' comments). Flags override the file.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "imb/tolerances.hpp"

namespace imb::cli {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string command;
    std::string curve = "ellipse:lambda=2";
    std::optional<double> mu;
    std::optional<double> field;   // B
    std::optional<double> mass;
    std::optional<double> charge;
    std::optional<double> speed;
    int iters = 500;
    int grid_s = 4;
    int grid_u = 16;
    std::uint64_t seed = 1;
    int jobs = 1;
    std::string out = ".";
    std::vector<std::pair<std::string, double>> tol_overrides;
    int m = 1;
    int n = 2;
    std::string method = "both";
    double s0 = 0.0;
    double u0 = -0.5;
    std::optional<double> theta0;
    int samples = 100;
    bool native_angle = true;

    /// Larmor radius: --mu, or m |v| / (|e| B) from the physics quadruple.
    double resolve_mu() const {
        if (mu) {
            if (!(*mu > 0.0) || !std::isfinite(*mu)) throw ConfigError("mu must be positive");
            return *mu;
        }
        if (field && mass && charge && speed) {
            const double v = *mass * std::abs(*speed) / (std::abs(*charge) * std::abs(*field));
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw ConfigError("mass, speed, charge and B must give a positive finite Larmor radius");
            }
            return v;
        }
        throw ConfigError("set --mu or all of --B, --mass, --charge, --speed");
    }

    /// Kinetic energy 1/2 m |v|^2 when the physics quadruple is given.
    std::optional<double> energy() const {
        if (mass && speed) return 0.5 * *mass * *speed * *speed;
        return std::nullopt;
    }

    Tolerances tolerances() const {
        Tolerances t;
        for (const auto& [k, v] : tol_overrides) {
            try {
                t.set(k, v);
            } catch (const std::exception& e) {
                throw ConfigError(e.what());
            }
        }
        return t;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw ConfigError(key + ": expected a number, got '" + v + "'");
    return d;
}

inline long long to_int(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    long long d = 0;
    try {
        d = std::stoll(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
    return d;
}

}  // namespace detail

inline const std::vector<std::string>& setting_keys() {
    static const std::vector<std::string> keys = {
        "curve", "mu", "B", "mass", "charge", "speed", "iters", "grid", "seed", "jobs", "out",
        "tol-override", "m", "n", "method", "s0", "u0", "theta0", "samples", "coords"};
    return keys;
}

/// Applies one setting. Throws ConfigError naming the key on bad values.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& raw) {
    using detail::to_double;
    using detail::to_int;
    const std::string v = detail::trim(raw);
    if (key == "curve") {
        cfg.curve = v;
    } else if (key == "mu") {
        cfg.mu = to_double(key, v);
    } else if (key == "B") {
        cfg.field = to_double(key, v);
    } else if (key == "mass") {
        cfg.mass = to_double(key, v);
    } else if (key == "charge") {
        cfg.charge = to_double(key, v);
    } else if (key == "speed") {
        cfg.speed = to_double(key, v);
    } else if (key == "iters") {
        cfg.iters = static_cast<int>(to_int(key, v));
        if (cfg.iters < 0) throw ConfigError("iters must be non-negative");
    } else if (key == "grid") {
        const auto x = v.find('x');
        if (x == std::string::npos) throw ConfigError("grid: expected NSxNU, got '" + v + "'");
        cfg.grid_s = static_cast<int>(to_int(key, v.substr(0, x)));
        cfg.grid_u = static_cast<int>(to_int(key, v.substr(x + 1)));
        if (cfg.grid_s < 0 || cfg.grid_u < 0) throw ConfigError("grid counts must be non-negative");
    } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(to_int(key, v));
    } else if (key == "jobs") {
        cfg.jobs = static_cast<int>(to_int(key, v));
    } else if (key == "out") {
        cfg.out = v;
    } else if (key == "tol-override") {
        const auto eq = v.find('=');
        if (eq == std::string::npos) throw ConfigError("tol-override: expected KEY=VAL, got '" + v + "'");
        const std::string k = detail::trim(v.substr(0, eq));
        const double d = to_double("tol-override " + k, detail::trim(v.substr(eq + 1)));
        try {
            Tolerances probe;
            probe.set(k, d);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("tol-override: ") + e.what());
        }
        cfg.tol_overrides.emplace_back(k, d);
    } else if (key == "m") {
        cfg.m = static_cast<int>(to_int(key, v));
    } else if (key == "n") {
        cfg.n = static_cast<int>(to_int(key, v));
    } else if (key == "method") {
        if (v != "variational" && v != "shooting" && v != "both") {
            throw ConfigError("method: expected variational, shooting or both");
        }
        cfg.method = v;
    } else if (key == "s0") {
        cfg.s0 = to_double(key, v);
    } else if (key == "u0") {
        cfg.u0 = to_double(key, v);
        if (!(cfg.u0 >= -1.0 && cfg.u0 <= 1.0)) throw ConfigError("u0 must lie in [-1, 1]");
    } else if (key == "theta0") {
        cfg.theta0 = to_double(key, v);
    } else if (key == "samples") {
        cfg.samples = static_cast<int>(to_int(key, v));
    } else if (key == "coords") {
        if (v != "phi" && v != "s") throw ConfigError("coords: expected phi or s");
        cfg.native_angle = v == "phi";
    } else {
        throw ConfigError("unknown setting '" + key + "'");
    }
}

/// Reads "key = value" lines. Errors carry the file name and line number.
inline std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        bool known = false;
        for (const auto& k : setting_keys()) known = known || k == key;
        if (!known) throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown setting '" + key + "'");
        out.emplace_back(std::move(key), value);
    }
    return out;
}

/// File settings first, then flags; the later assignment wins except for
/// tol-override, which accumulates.
inline RunConfig merge_settings(const std::string& command,
                                const std::vector<std::pair<std::string, std::string>>& file,
                                const std::vector<std::pair<std::string, std::string>>& flags,
                                const std::string& file_name = "config") {
    RunConfig cfg;
    cfg.command = command;
    for (const auto& [k, v] : file) {
        try {
            apply_setting(cfg, k, v);
        } catch (const ConfigError& e) {
            throw ConfigError(file_name + ": " + e.what());
        }
    }
    for (const auto& [k, v] : flags) {
        try {
            apply_setting(cfg, k, v);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("--") + k + ": " + e.what());
        }
    }
    return cfg;
}

}  // namespace imb::cli

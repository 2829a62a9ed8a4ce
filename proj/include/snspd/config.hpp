#pragma once

// Flat key = value configuration with unit-suffixed numbers.
//
//   # comment
//   L_k = 490nH
//   R_grid = 25, 50, 100 Ohm
//
// Every accepted key lives in one registry; defaults are applied through the
// same setters that parse the file, and --help is printed from it.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "snspd/circuit.hpp"
#include "snspd/detection.hpp"
#include "snspd/engine.hpp"
#include "snspd/errors.hpp"
#include "snspd/thermal.hpp"

namespace snspd::config {

enum class Dim { None, Time, Frequency, Resistance, Inductance, Capacitance, Current, Temperature, Length };

inline const char* unit_symbol(Dim d) {
    switch (d) {
        case Dim::None: return "";
        case Dim::Time: return "s";
        case Dim::Frequency: return "Hz";
        case Dim::Resistance: return "Ohm";
        case Dim::Inductance: return "H";
        case Dim::Capacitance: return "F";
        case Dim::Current: return "A";
        case Dim::Temperature: return "K";
        case Dim::Length: return "m";
    }
    return "";
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline bool strip_suffix(std::string_view& s, std::string_view suffix) {
    if (s.size() < suffix.size() || s.substr(s.size() - suffix.size()) != suffix) return false;
    s.remove_suffix(suffix.size());
    return true;
}

/// Parses "490nH", "0.57 pF", "725", "20uA", "4.2K" for the given dimension.
inline double parse_quantity(std::string_view text, Dim dim, const std::string& key) {
    const std::string_view t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr == t.data()) {
        throw ConfigError(key + ": expected a number, got '" + std::string(t) + "'");
    }
    std::string_view unit = trim(std::string_view(ptr, static_cast<std::size_t>(t.data() + t.size() - ptr)));
    if (unit.empty()) return v;
    if (dim == Dim::None) throw ConfigError(key + ": dimensionless value takes no unit suffix");

    bool matched = false;
    if (dim == Dim::Resistance) {
        matched = strip_suffix(unit, "Ohm") || strip_suffix(unit, "ohm") || strip_suffix(unit, "Ω");
    } else {
        matched = strip_suffix(unit, unit_symbol(dim));
    }
    if (!matched) {
        throw ConfigError(key + ": unit must be " + std::string(unit_symbol(dim)) + " with an optional prefix");
    }
    static const std::map<std::string_view, double> prefixes = {
        {"", 1.0},   {"f", 1e-15}, {"p", 1e-12}, {"n", 1e-9},      {"u", 1e-6}, {"μ", 1e-6},
        {"µ", 1e-6}, {"m", 1e-3}, {"k", 1e3},   {"M", 1e6}, {"G", 1e9}};
    const auto it = prefixes.find(unit);
    if (it == prefixes.end()) throw ConfigError(key + ": unknown unit prefix '" + std::string(unit) + "'");
    return v * it->second;
}

inline std::vector<double> parse_list(std::string_view text, Dim dim, const std::string& key) {
    // A unit written once after the last element applies to bare elements.
    std::vector<std::string> items;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            items.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    items.push_back(cur);
    std::string tail_unit;
    {
        const std::string_view last = trim(items.back());
        std::size_t k = last.size();
        while (k > 0 && !std::isdigit(static_cast<unsigned char>(last[k - 1])) && last[k - 1] != '.') --k;
        tail_unit = std::string(trim(last.substr(k)));
    }
    std::vector<double> out;
    for (const auto& item : items) {
        std::string_view s = trim(item);
        if (s.empty()) throw ConfigError(key + ": empty list element");
        const bool bare = std::isdigit(static_cast<unsigned char>(s.back())) || s.back() == '.';
        out.push_back(parse_quantity(bare ? std::string(s) + tail_unit : std::string(s), dim, key));
    }
    return out;
}

/// Everything a subcommand can be configured with.
struct Settings {
    engine::SimConfig sim;
    std::string mode = "GM";
    std::string damping = "paper";  // paper: R_p as given; critical: critically damped R_p
    double frequency = 100e6;
    double i_min = -2e-6;
    double i_max_frac = 0.9;
    double i_bias_frac = 0.9;
    std::vector<double> photon_times;
    double photon_position = 250e-6;
    double photon_rate = 0.0;
    std::string absorption = "none";
    QeCurve qe;
    std::uint64_t seed = 1;

    double sweep_start = 50e6, sweep_stop = 700e6, sweep_step = 10e6;
    long post_gates = 3;

    std::vector<double> L_values{6e-9, 60e-9, 600e-9, 6e-6};
    double mcr_C_p = 0.01e-12;
    double mcr_f_start = 200e6;
    double mcr_resolution = 0.01;

    std::vector<double> R_grid{25, 50, 100, 150, 200, 300, 500, 700, 1000};
    double settle_multiple = 20.0;
    double start_frac = 0.995;
    double step_frac = 0.002;
    double coarse_step_frac = 0.02;

    std::string source = "CW";
    double mu = 0.1;
    long pulse_divisor = 20;
    double dark_prob = 0.0;
    double afterpulse_prob = 0.0;
    long n_gates = 100000;
    long max_lag = 50;
    long hist_bins = 100;

    std::string chain_file;
    double cal_f_start = 10e6, cal_f_stop = 2e9;
    long cal_points = 200;

    std::string reference_file;
    std::string netlist;
    double R_b_validation = 50.0;
    double cutoff = 2e9;
    long validation_points = 201;
};

struct KeySpec {
    std::string name;
    Dim dim = Dim::None;
    std::string def;
    std::string help;
    std::function<void(Settings&, std::string_view, const std::string&)> set;
};

namespace detail {

inline long parse_integer(std::string_view text, const std::string& key) {
    const std::string_view t = trim(text);
    long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
        // accept integral values written as 1e6
        double d = 0.0;
        const auto [p2, e2] = std::from_chars(t.data(), t.data() + t.size(), d);
        if (e2 != std::errc{} || p2 != t.data() + t.size() || d != static_cast<double>(static_cast<long>(d))) {
            throw ConfigError(key + ": expected an integer, got '" + std::string(t) + "'");
        }
        return static_cast<long>(d);
    }
    return v;
}

inline std::string parse_text(std::string_view text) {
    std::string_view t = trim(text);
    if (t.size() >= 2 && t.front() == '"' && t.back() == '"') t = t.substr(1, t.size() - 2);
    return std::string(t);
}

inline std::string parse_choice(std::string_view text, const std::string& key, std::initializer_list<const char*> options) {
    const std::string v = parse_text(text);
    for (const char* o : options) {
        if (v == o) return v;
    }
    std::string msg = key + ": must be one of";
    for (const char* o : options) msg += std::string(" ") + o;
    throw ConfigError(msg);
}

}  // namespace detail

inline const std::vector<KeySpec>& registry() {
    using S = Settings;
    using sv = std::string_view;
    using detail::parse_integer;
    auto num = [](std::string name, Dim dim, std::string def, std::string help, double S::*field) {
        return KeySpec{name, dim, def, help, [field, dim](S& s, sv v, const std::string& k) { s.*field = parse_quantity(v, dim, k); }};
    };
    auto integer = [](std::string name, std::string def, std::string help, long S::*field) {
        return KeySpec{name, Dim::None, def, help, [field](S& s, sv v, const std::string& k) { s.*field = parse_integer(v, k); }};
    };
    auto list = [](std::string name, Dim dim, std::string def, std::string help, std::vector<double> S::*field) {
        return KeySpec{name, dim, def, help, [field, dim](S& s, sv v, const std::string& k) { s.*field = parse_list(v, dim, k); }};
    };
    auto text = [](std::string name, std::string def, std::string help, std::string S::*field) {
        return KeySpec{name, Dim::None, def, help, [field](S& s, sv v, const std::string&) { s.*field = detail::parse_text(v); }};
    };
#define SNSPD_SIM(member) [](S& s, sv v, const std::string& k, Dim d) { s.sim.member = parse_quantity(v, d, k); }
    auto sim = [](std::string name, Dim dim, std::string def, std::string help,
                  std::function<void(S&, sv, const std::string&, Dim)> f) {
        return KeySpec{name, dim, def, help, [f, dim](S& s, sv v, const std::string& k) { f(s, v, k, dim); }};
    };

    static const std::vector<KeySpec> keys = {
        // circuit
        sim("L_k", Dim::Inductance, "490nH", "nanowire kinetic inductance", SNSPD_SIM(circuit.L_k)),
        sim("C_p", Dim::Capacitance, "0.57pF", "shunt capacitance at the bias node", SNSPD_SIM(circuit.C_p)),
        sim("R_p", Dim::Resistance, "725Ohm", "source resistance seen by the RLC core (gated)", SNSPD_SIM(circuit.R_p)),
        sim("R_B", Dim::Resistance, "650Ohm", "bias resistor; free-running load is R_B + R_sense", SNSPD_SIM(circuit.R_B)),
        sim("R_sense", Dim::Resistance, "50Ohm", "current-sense resistor", SNSPD_SIM(circuit.R_sense)),
        sim("R_term", Dim::Resistance, "50Ohm", "coax termination at the pad", SNSPD_SIM(circuit.R_term)),
        sim("pad_cap", Dim::Capacitance, "0.14pF", "board pad capacitance", SNSPD_SIM(circuit.pad_cap)),
        text("damping", "paper", "paper: use R_p as given; critical: R_p = sqrt(L_k/C_p)/2", &S::damping),
        // thermal
        sim("T_sub", Dim::Temperature, "4.2K", "substrate temperature", SNSPD_SIM(thermal.T_sub)),
        sim("T_c", Dim::Temperature, "10.5K", "critical temperature", SNSPD_SIM(thermal.T_c)),
        sim("I_c0", Dim::Current, "20uA", "critical current at T_sub", SNSPD_SIM(thermal.I_c0)),
        sim("R_sheet", Dim::Resistance, "400Ohm", "normal-state sheet resistance per square", SNSPD_SIM(thermal.R_sheet)),
        sim("kappa0", Dim::None, "0.1", "thermal conductivity at T_c, W/(m K)", SNSPD_SIM(thermal.kappa0)),
        sim("c0", Dim::None, "1e4", "heat capacity at T_c, J/(m^3 K)", SNSPD_SIM(thermal.c0)),
        sim("alpha", Dim::None, "300", "substrate coupling, W/(m^2 K^n)", SNSPD_SIM(thermal.alpha)),
        sim("n_bnd", Dim::None, "3", "substrate coupling exponent", SNSPD_SIM(thermal.n_bnd)),
        sim("hotspot_len", Dim::Length, "30nm", "photon seed length", SNSPD_SIM(thermal.hotspot_len)),
        sim("hotspot_T", Dim::Temperature, "21K", "photon seed temperature", SNSPD_SIM(thermal.hotspot_T)),
        // geometry
        sim("length", Dim::Length, "500um", "wire length", SNSPD_SIM(geom.length)),
        sim("width", Dim::Length, "120nm", "wire width", SNSPD_SIM(geom.width)),
        sim("thickness", Dim::Length, "4nm", "film thickness", SNSPD_SIM(geom.thickness)),
        KeySpec{"n_cells", Dim::None, "50000", "cells along the wire",
                [](S& s, sv v, const std::string& k) {
                    const long n = parse_integer(v, k);
                    if (n <= 0) throw ConfigError(k + ": must be > 0");
                    s.sim.geom.n_cells = static_cast<std::size_t>(n);
                }},
        // simulation
        KeySpec{"mode", Dim::None, "GM", "GM (gated sine bias) or FM (free-running DC bias)",
                [](S& s, sv v, const std::string& k) { s.mode = detail::parse_choice(v, k, {"GM", "FM"}); }},
        num("frequency", Dim::Frequency, "100MHz", "gate frequency (simulate, stats, calibrate drive)", &S::frequency),
        num("i_min", Dim::Current, "-2uA", "gate current minimum", &S::i_min),
        num("i_max_frac", Dim::None, "0.9", "gate current maximum, fraction of I_c0", &S::i_max_frac),
        num("i_bias_frac", Dim::None, "0.9", "free-running bias, fraction of I_c0", &S::i_bias_frac),
        sim("duration", Dim::Time, "100ns", "simulated time", SNSPD_SIM(duration)),
        list("photon_times", Dim::Time, "", "explicit photon arrival times", &S::photon_times),
        num("photon_position", Dim::Length, "250um", "position of explicit photons", &S::photon_position),
        num("photon_rate", Dim::Frequency, "0Hz", "Poisson photon rate, uniformly along the wire", &S::photon_rate),
        KeySpec{"absorption", Dim::None, "none", "none: every photon seeds a hotspot; qe: absorbed with QE(i)",
                [](S& s, sv v, const std::string& k) { s.absorption = detail::parse_choice(v, k, {"none", "qe"}); }},
        sim("dark_rate", Dim::Frequency, "0Hz", "Poisson rate of dark seeds", SNSPD_SIM(dark_rate)),
        sim("sample_interval", Dim::Time, "0s", "trace sampling interval; 0 records every step", SNSPD_SIM(sample_interval)),
        sim("latch_resistance", Dim::Resistance, "150Ohm", "hotspot resistance counted as latched", SNSPD_SIM(latch_resistance)),
        sim("gate_latch_fraction", Dim::None, "0.25", "fraction of a gate above the latch resistance for a click",
            SNSPD_SIM(gate_latch_fraction)),
        sim("fm_bin_width", Dim::Time, "1ns", "free-running click-train bin", SNSPD_SIM(fm_bin_width)),
        KeySpec{"seed", Dim::None, "1", "random seed (overridden by --seed)",
                [](S& s, sv v, const std::string& k) {
                    const long n = parse_integer(v, k);
                    if (n < 0) throw ConfigError(k + ": must be >= 0");
                    s.seed = static_cast<std::uint64_t>(n);
                }},
        // QE curve
        KeySpec{"qe_max", Dim::None, "0.05", "logistic QE plateau",
                [](S& s, sv v, const std::string& k) { s.qe.qe_max = parse_quantity(v, Dim::None, k); }},
        KeySpec{"qe_x_half", Dim::None, "0.8", "logistic QE midpoint, fraction of I_c0",
                [](S& s, sv v, const std::string& k) { s.qe.x_half = parse_quantity(v, Dim::None, k); }},
        KeySpec{"qe_width", Dim::None, "0.04", "logistic QE width, fraction of I_c0",
                [](S& s, sv v, const std::string& k) { s.qe.width = parse_quantity(v, Dim::None, k); }},
        // fig4c
        num("sweep_start", Dim::Frequency, "50MHz", "fig4c first frequency", &S::sweep_start),
        num("sweep_stop", Dim::Frequency, "700MHz", "fig4c last frequency", &S::sweep_stop),
        num("sweep_step", Dim::Frequency, "10MHz", "fig4c frequency step", &S::sweep_step),
        integer("post_gates", "3", "gates recorded after the detection gate", &S::post_gates),
        // mcr-sweep
        list("L_values", Dim::Inductance, "6nH, 60nH, 600nH, 6uH", "mcr-sweep kinetic inductances", &S::L_values),
        num("mcr_C_p", Dim::Capacitance, "0.01pF", "mcr-sweep shunt capacitance", &S::mcr_C_p),
        num("mcr_f_start", Dim::Frequency, "200MHz", "mcr-sweep bracketing start", &S::mcr_f_start),
        num("mcr_resolution", Dim::None, "0.01", "mcr-sweep relative frequency resolution", &S::mcr_resolution),
        // tau-e-min
        list("R_grid", Dim::Resistance, "25, 50, 100, 150, 200, 300, 500, 700, 1000 Ohm", "tau-e-min load values",
             &S::R_grid),
        num("settle_multiple", Dim::None, "20", "hold per bias level, in max(tau_e, cooling time)", &S::settle_multiple),
        num("start_frac", Dim::None, "0.995", "return-current sweep start, fraction of I_c0", &S::start_frac),
        num("step_frac", Dim::None, "0.002", "return-current fine step, fraction of I_c0", &S::step_frac),
        num("coarse_step_frac", Dim::None, "0.02", "return-current bracketing step, fraction of I_c0",
            &S::coarse_step_frac),
        // stats
        KeySpec{"source", Dim::None, "CW", "CW or pulsed illumination",
                [](S& s, sv v, const std::string& k) { s.source = detail::parse_choice(v, k, {"CW", "pulsed"}); }},
        num("mu", Dim::None, "0.1", "mean photons per illuminated gate", &S::mu),
        integer("pulse_divisor", "20", "pulsed laser at gate frequency / divisor", &S::pulse_divisor),
        num("dark_prob", Dim::None, "0", "dark click probability per gate", &S::dark_prob),
        num("afterpulse_prob", Dim::None, "0", "click probability in the gate after a click", &S::afterpulse_prob),
        integer("n_gates", "100000", "gates generated by stats", &S::n_gates),
        integer("max_lag", "50", "autocorrelation lags", &S::max_lag),
        integer("hist_bins", "100", "gate-phase histogram bins", &S::hist_bins),
        // calibrate
        text("chain_file", "", "Touchstone file of the bias chain; empty means an ideal thru", &S::chain_file),
        num("cal_f_start", Dim::Frequency, "10MHz", "transconductance table first frequency", &S::cal_f_start),
        num("cal_f_stop", Dim::Frequency, "2GHz", "transconductance table last frequency", &S::cal_f_stop),
        integer("cal_points", "200", "transconductance table points", &S::cal_points),
        // validate-model
        text("reference_file", "", "measured S11 Touchstone file; empty synthesises one from the model", &S::reference_file),
        text("netlist", "",
             "ladder 'Kind value; ...' with Kind in SeriesR SeriesL SeriesC ShuntR ShuntL ShuntC; empty uses the "
             "default device model",
             &S::netlist),
        num("R_b_validation", Dim::Resistance, "50Ohm", "bias resistor used for reflection validation",
            &S::R_b_validation),
        num("cutoff", Dim::Frequency, "2GHz", "highest frequency compared", &S::cutoff),
        integer("validation_points", "201", "points of a synthesised reference", &S::validation_points),
    };
#undef SNSPD_SIM
    return keys;
}

inline const KeySpec* find_key(const std::string& name) {
    for (const auto& k : registry()) {
        if (k.name == name) return &k;
    }
    return nullptr;
}

inline Settings defaults() {
    Settings s;
    for (const auto& k : registry()) {
        if (!k.def.empty()) k.set(s, k.def, k.name);
    }
    return s;
}

/// Parses config text over the defaults. Unknown keys are collected and
/// reported together; a key given twice is an error.
inline Settings parse(std::string_view text) {
    Settings s = defaults();
    std::vector<std::string> unknown;
    std::set<std::string> seen;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string_view l = trim(line);
        if (l.empty()) continue;
        const auto eq = l.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key(trim(l.substr(0, eq)));
        const std::string_view value = trim(l.substr(eq + 1));
        const KeySpec* spec = find_key(key);
        if (!spec) {
            unknown.push_back(key);
            continue;
        }
        if (!seen.insert(key).second) {
            throw ConfigError("line " + std::to_string(lineno) + ": key '" + key + "' given twice");
        }
        if (value.empty() && key != "photon_times" && key != "chain_file" && key != "reference_file" &&
            key != "netlist") {
            throw ConfigError("line " + std::to_string(lineno) + ": key '" + key + "' has no value");
        }
        if (value.empty()) {
            if (key == "photon_times") s.photon_times.clear();
            continue;
        }
        spec->set(s, value, key);
    }
    if (!unknown.empty()) {
        std::string msg = "unknown config keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw ConfigError(msg);
    }
    return s;
}

/// Help text listing every key with its unit and default.
inline std::string key_help() {
    std::ostringstream os;
    os << "Config keys (key = value, numbers accept SI-prefixed unit suffixes):\n";
    for (const auto& k : registry()) {
        os << "  " << k.name;
        if (k.dim != Dim::None) os << " [" << unit_symbol(k.dim) << "]";
        os << "  default: " << (k.def.empty() ? "(empty)" : k.def) << "\n      " << k.help << "\n";
    }
    return os.str();
}

}  // namespace snspd::config

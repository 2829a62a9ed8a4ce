#pragma once

// Scripted engine runs: response to a single detection, the thermally
// limited gating frequency and the free-running return-current sweep.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "snspd/circuit.hpp"
#include "snspd/engine.hpp"
#include "snspd/errors.hpp"
#include "snspd/sweep.hpp"
#include "snspd/thermal.hpp"

namespace snspd::engine {

/// Gated bias whose superconducting steady state spans [i_min, i_max] in the
/// core network of `p`.
inline circuit::BiasWaveform gated_bias(const circuit::CircuitParams& p, double f, double i_min, double i_max) {
    return circuit::solve_drive(1.0 / p.R_p, circuit::core_transconductance(p, f), f, i_min, i_max);
}

struct DetectionResponse {
    bool detected = false;             // the detection gate latched
    std::vector<double> peaks;         // gates 1..n, in units of 0.95 I_c0
    std::vector<bool> relatched;       // gates 1..n
    double max_T_next = 0.0;           // K, centre window of gate 1
    double quiescent_peak = 0.0;       // detection gate peak, same units
};

/// One photon at the wire centre at the current maximum of gate 0, then
/// n_gates further gates with no light.
inline DetectionResponse detection_response(SimConfig cfg, std::size_t n_gates, bool inject = true) {
    if (cfg.mode != Mode::GM) throw DomainError("detection response needs a gated config");
    if (n_gates == 0) throw DomainError("n_gates must be > 0");
    const double T = cfg.bias.period();
    cfg.events.clear();
    if (inject) cfg.events.push_back({0.5 * T, 0.5 * cfg.geom.length});
    cfg.dark_rate = 0.0;
    cfg.duration = static_cast<double>(n_gates + 1) * T;
    cfg.sample_interval = -1.0;
    cfg.absorption.reset();
    const SimTrace tr = simulate(cfg);
    const double norm = 0.95 * cfg.thermal.I_c0;
    DetectionResponse r;
    r.detected = tr.gates.at(0).latched;
    r.quiescent_peak = tr.gates[0].peak_current / norm;
    for (std::size_t k = 1; k <= n_gates; ++k) {
        r.peaks.push_back(tr.gates.at(k).peak_current / norm);
        r.relatched.push_back(tr.gates[k].latched);
    }
    r.max_T_next = tr.gates.at(1).max_T_center;
    return r;
}

/// Peak nanowire current in the gates after a detection, normalised to
/// 0.95 I_c0.
inline std::vector<double> gate_peaks_after_detection(const SimConfig& cfg, std::size_t n_gates) {
    return detection_response(cfg, n_gates).peaks;
}

/// Maximum wire temperature in the centre window of the gate after a
/// detection, divided by T_sub when `normalize` is set.
inline double max_temperature_next_gate(const SimConfig& cfg, bool normalize = true, bool inject = true) {
    const double T = detection_response(cfg, 1, inject).max_T_next;
    return normalize ? T / cfg.thermal.T_sub : T;
}

struct MaxFrequencyOptions {
    double f_start = 200e6;   // Hz
    double f_floor = 1e6;     // Hz
    double f_ceiling = 50e9;  // Hz
    double resolution = 0.01;
    std::size_t post_gates = 3;
    double i_min = -2e-6;      // A
    double i_max_frac = 0.9;   // of I_c0
};

/// True when a detection latches its gate and none of the following
/// post_gates re-latch.
inline bool admissible_frequency(const SimConfig& base, double f, const MaxFrequencyOptions& opt) {
    SimConfig cfg = base;
    cfg.mode = Mode::GM;
    cfg.bias = gated_bias(cfg.circuit, f, opt.i_min, opt.i_max_frac * cfg.thermal.I_c0);
    const DetectionResponse r = detection_response(cfg, opt.post_gates);
    if (!r.detected) return false;
    return std::none_of(r.relatched.begin(), r.relatched.end(), [](bool b) { return b; });
}

/// Largest gating frequency at which a single detection does not re-latch the
/// following gates, with R_p set for critical damping. Bracketing by factors
/// of two, then geometric bisection to the requested relative resolution.
inline double find_max_gating_frequency(double L_k, double C_p, const thermal::ThermalParams& th,
                                        const thermal::WireGeometry& geom, SimConfig base = {},
                                        const MaxFrequencyOptions& opt = {}) {
    base.circuit.L_k = L_k;
    base.circuit.C_p = C_p;
    base.circuit.R_p = circuit::critically_damped_rp(L_k, C_p);
    base.thermal = th;
    base.geom = geom;
    double lo = opt.f_start;
    double hi = 0.0;
    if (admissible_frequency(base, lo, opt)) {
        hi = lo * 2.0;
        while (admissible_frequency(base, hi, opt)) {
            lo = hi;
            hi *= 2.0;
            if (hi > opt.f_ceiling) return lo;
        }
    } else {
        hi = lo;
        lo *= 0.5;
        while (!admissible_frequency(base, lo, opt)) {
            hi = lo;
            lo *= 0.5;
            if (lo < opt.f_floor) throw DomainError("no admissible gating frequency above the floor");
        }
    }
    while (hi / lo - 1.0 > opt.resolution) {
        const double mid = std::sqrt(lo * hi);
        if (admissible_frequency(base, mid, opt)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return lo;
}

struct ReturnCurrentOptions {
    double start_frac = 0.995;       // of I_c0, where the photon seed is placed
    double step_frac = 0.002;        // fine downward step, of I_c0
    double coarse_step_frac = 0.02;  // bracketing step, of I_c0
    double settle_multiple = 20.0;   // hold per level, in units of max(tau_e, cooling time)
    double floor_frac = 0.02;
};

/// Free-running return current for load R_L: the wire is seeded with a
/// photon at start_frac I_c0, then the bias is lowered level by level and the
/// first level at which the hotspot is gone for the second half of its hold
/// is returned. A load that cannot latch returns at start_frac itself.
inline double find_return_current(const SimConfig& base, double R_L, const ReturnCurrentOptions& opt = {}) {
    SimConfig cfg = base;
    cfg.mode = Mode::FM;
    cfg.circuit = circuit::free_running(cfg.circuit);
    cfg.circuit.R_p = R_L;
    cfg.circuit.R_L = R_L;
    const double Ic = cfg.thermal.I_c0;
    cfg.bias = circuit::dc_drive(cfg.circuit, opt.start_frac * Ic);
    const double t_seed = 1e-9;
    cfg.events = {{t_seed, 0.5 * cfg.geom.length}};
    cfg.dark_rate = 0.0;
    cfg.absorption.reset();
    cfg.sample_interval = -1.0;
    const double hold = opt.settle_multiple *
                        std::max(circuit::time_constant(cfg.circuit.L_k, R_L), thermal::cooling_time(cfg.geom, cfg.thermal));
    cfg.duration = 1.0;  // open-ended; the sweep decides when to stop

    Simulator sim(cfg);
    auto hold_level = [&](Simulator& s, double frac) {
        s.set_bias(circuit::dc_drive(cfg.circuit, frac * Ic));
        s.run_until(s.time() + 0.5 * hold);
        s.mark_window();
        s.run_until(s.time() + 0.5 * hold);
        return s.window_max_resistance() > 0.0;
    };
    if (!hold_level(sim, opt.start_frac)) return opt.start_frac * Ic;

    // Coarse bracket, keeping a copy of the last latched state.
    Simulator latched = sim;
    double level = opt.start_frac;
    for (;;) {
        const double next = level - opt.coarse_step_frac;
        if (next < opt.floor_frac) break;
        if (!hold_level(sim, next)) break;
        latched = sim;
        level = next;
    }
    for (double frac = level - opt.step_frac; frac >= opt.floor_frac - 1e-12; frac -= opt.step_frac) {
        if (!hold_level(latched, frac)) return frac * Ic;
    }
    throw NumericalError("latched state persisted down to the sweep floor");
}

struct ReturnCurrentRow {
    double R_L = 0.0;
    double return_current = 0.0;
    bool refinement = false;  // added while bisecting for the knee
};

struct TauEMinResult {
    std::vector<ReturnCurrentRow> rows;  // grid, then refinement points, sorted by R_L
    double plateau = 0.0;                // A
    double R_star = 0.0;                 // Ohm
    double tau_e_min = 0.0;              // s
};

/// Return-current table over R_L and the knee R*: the largest load whose
/// return current stays within `plateau_tol` of the small-load plateau,
/// refined by bisection to `refine_tol` relative.
inline TauEMinResult find_tau_e_min(const SimConfig& base, std::vector<double> R_grid,
                                    const ReturnCurrentOptions& opt = {}, std::size_t workers = 1,
                                    double plateau_tol = 0.01, double refine_tol = 0.005) {
    if (R_grid.size() < 3) throw DomainError("tau_e_min needs at least 3 load values");
    std::sort(R_grid.begin(), R_grid.end());
    const auto rc = parallel_map(R_grid.size(), workers,
                                 [&](std::size_t i) { return find_return_current(base, R_grid[i], opt); });
    TauEMinResult r;
    for (std::size_t i = 0; i < R_grid.size(); ++i) r.rows.push_back({R_grid[i], rc[i]});
    r.plateau = rc.front();
    auto on_plateau = [&](double v) { return v >= (1.0 - plateau_tol) * r.plateau; };
    if (!on_plateau(rc[1])) {
        throw NumericalError("no return-current plateau at small R_L: the wire latches at every load");
    }
    std::size_t k = 0;
    while (k + 1 < rc.size() && on_plateau(rc[k + 1])) ++k;
    if (k + 1 == rc.size()) {
        throw NumericalError("no return-current knee: the wire never latches over the R_L range");
    }
    double lo = R_grid[k], hi = R_grid[k + 1];
    while (hi / lo - 1.0 > refine_tol) {
        const double mid = std::sqrt(lo * hi);
        const double v = find_return_current(base, mid, opt);
        r.rows.push_back({mid, v, true});
        if (on_plateau(v)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    std::sort(r.rows.begin(), r.rows.end(), [](const auto& a, const auto& b) { return a.R_L < b.R_L; });
    r.R_star = lo;
    r.tau_e_min = circuit::time_constant(base.circuit.L_k, lo);
    return r;
}

}  // namespace snspd::engine

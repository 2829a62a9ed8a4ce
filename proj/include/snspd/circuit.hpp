#pragma once

// Lumped bias network of a current-biased nanowire.
//
// Topology: voltage source -> R_p -> node (C_p to ground) -> L_k in series
// with the hotspot resistance R_hs(t) -> ground. With C_p = 0 the node
// collapses and the network reduces to the free-running model, a
// Thevenin source V/R_p feeding L_k + R_hs.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "snspd/errors.hpp"

namespace snspd::circuit {

struct CircuitParams {
    double L_k = 490e-9;     // H
    double C_p = 0.57e-12;   // F
    double R_p = 725.0;      // Ohm
    double R_B = 650.0;      // Ohm
    double R_sense = 50.0;   // Ohm
    double R_term = 50.0;    // Ohm
    double R_L = 700.0;      // Ohm, free-running load (R_B + R_sense)
    double pad_cap = 0.14e-12;  // F

    /// Throws DomainError on negative or non-finite values, or L_k <= 0.
    void validate(bool gated) const {
        auto check = [](double v, const char* name) {
            if (!std::isfinite(v) || v < 0.0) {
                throw DomainError(std::string("circuit parameter ") + name +
                                  " must be finite and >= 0");
            }
        };
        check(L_k, "L_k");
        check(C_p, "C_p");
        check(R_B, "R_B");
        check(R_sense, "R_sense");
        check(R_term, "R_term");
        check(R_L, "R_L");
        check(pad_cap, "pad_cap");
        if (!(R_p >= 0.0) || std::isnan(R_p)) throw DomainError("circuit parameter R_p must be >= 0");
        if (!(L_k > 0.0)) throw DomainError("L_k must be > 0");
        if (gated && !(C_p > 0.0)) throw DomainError("C_p must be > 0 for gated simulation");
    }
};

/// Free-running configuration: R_L = R_B + R_sense, no shunt capacitance.
inline CircuitParams free_running(CircuitParams p) {
    p.R_L = p.R_B + p.R_sense;
    p.R_p = p.R_L;
    p.C_p = 0.0;
    return p;
}

struct CircuitState {
    double v_c = 0.0;  // V across C_p
    double i_L = 0.0;  // A through L_k
    double t = 0.0;    // s
};

struct Derivative {
    double dv_c = 0.0;
    double di_L = 0.0;
};

enum class WaveformKind { DC, Sine };

struct BiasWaveform {
    WaveformKind kind = WaveformKind::DC;
    double offset = 0.0;     // V
    double amplitude = 0.0;  // V
    double frequency = 0.0;  // Hz
    double phase = 0.0;      // rad
    double target_i_min = 0.0;  // A
    double target_i_max = 0.0;  // A

    double period() const { return kind == WaveformKind::Sine ? 1.0 / frequency : 0.0; }

    double operator()(double t) const {
        if (kind == WaveformKind::DC) return offset;
        return offset + amplitude * std::sin(2.0 * std::numbers::pi * frequency * t + phase);
    }

    void validate() const {
        if (kind == WaveformKind::Sine && !(frequency > 0.0)) {
            throw DomainError("sine bias requires frequency > 0");
        }
        if (kind == WaveformKind::DC && amplitude != 0.0) {
            throw DomainError("DC bias requires amplitude = 0");
        }
        if (!(target_i_min < target_i_max)) {
            throw DomainError("bias target_i_min must be < target_i_max");
        }
    }
};

inline void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError(std::string(name) + " must be finite and > 0");
    }
}

/// Electrical reset time constant tau_e = L_k / R_L.
inline double time_constant(double L_k, double R_L) {
    require_positive(L_k, "L_k");
    require_positive(R_L, "R_L");
    return L_k / R_L;
}

inline Derivative circuit_derivative(const CircuitState& s, const CircuitParams& p, double source_v,
                                     double R_hs) {
    if (!(p.C_p > 0.0) || !(p.L_k > 0.0)) {
        throw DegenerateTopologyError("circuit_derivative needs C_p > 0 and L_k > 0");
    }
    return {((source_v - s.v_c) / p.R_p - s.i_L) / p.C_p, (s.v_c - s.i_L * R_hs) / p.L_k};
}

/// Free-running reduction (C_p = 0): L_k di/dt = V - i (R_p + R_hs).
inline double free_running_derivative(double i_L, const CircuitParams& p, double source_v,
                                      double R_hs) {
    return (source_v - i_L * (p.R_p + R_hs)) / p.L_k;
}

inline double damping_ratio(const CircuitParams& p) {
    require_positive(p.L_k, "L_k");
    require_positive(p.C_p, "C_p");
    if (!(p.R_p > 0.0) || std::isnan(p.R_p)) throw DomainError("R_p must be > 0");
    return std::sqrt(p.L_k / p.C_p) / (2.0 * p.R_p);
}

inline double critically_damped_rp(double L_k, double C_p) {
    require_positive(L_k, "L_k");
    require_positive(C_p, "C_p");
    return 0.5 * std::sqrt(L_k / C_p);
}

/// Linear (R_hs = 0) transconductance i_L / V_source of the core network.
inline std::complex<double> core_transconductance(const CircuitParams& p, double f) {
    if (f == 0.0) return {1.0 / p.R_p, 0.0};
    const double w = 2.0 * std::numbers::pi * f;
    const std::complex<double> jwL{0.0, w * p.L_k};
    return 1.0 / (jwL + p.R_p * (1.0 - w * w * p.L_k * p.C_p));
}

/// Drive that makes the steady periodic nanowire current span [i_min, i_max].
/// The phase puts the current minimum at t = 0 and the maximum at half period,
/// so each bias period is one gate centred on its current peak.
inline BiasWaveform solve_drive(double g_dc, std::complex<double> g_f, double frequency,
                                double i_min, double i_max) {
    if (!(i_min < i_max)) throw DomainError("solve_drive requires i_min < i_max");
    if (g_dc == 0.0 || std::abs(g_f) == 0.0) {
        throw SingularError("solve_drive: zero transconductance");
    }
    if (!(g_dc > 0.0)) throw DomainError("solve_drive requires g_dc > 0");
    BiasWaveform w;
    w.kind = WaveformKind::Sine;
    w.frequency = frequency;
    w.offset = 0.5 * (i_max + i_min) / g_dc;
    w.amplitude = 0.5 * (i_max - i_min) / std::abs(g_f);
    w.phase = -0.5 * std::numbers::pi - std::arg(g_f);
    w.target_i_min = i_min;
    w.target_i_max = i_max;
    return w;
}

/// Free-running DC bias producing i_bias through the superconducting wire.
inline BiasWaveform dc_drive(const CircuitParams& p, double i_bias) {
    BiasWaveform w;
    w.kind = WaveformKind::DC;
    w.offset = i_bias * p.R_p;
    w.target_i_min = 0.0;
    w.target_i_max = i_bias;
    if (!(w.target_i_min < w.target_i_max)) w.target_i_min = i_bias - 1.0;
    return w;
}

/// Periodic steady state of the linear (superconducting) network at time t.
inline CircuitState steady_state(const CircuitParams& p, const BiasWaveform& bias, double t) {
    CircuitState s;
    s.t = t;
    s.i_L = bias.offset / p.R_p;
    s.v_c = 0.0;
    if (bias.kind == WaveformKind::Sine && bias.amplitude != 0.0) {
        const double w = 2.0 * std::numbers::pi * bias.frequency;
        const std::complex<double> g = core_transconductance(p, bias.frequency);
        const std::complex<double> src = std::polar(bias.amplitude, bias.phase - 0.5 * std::numbers::pi);
        const std::complex<double> i = g * src;
        const std::complex<double> v = i * std::complex<double>{0.0, w * p.L_k};
        const std::complex<double> rot = std::polar(1.0, w * t);
        s.i_L += (i * rot).real();
        s.v_c += (v * rot).real();
    }
    return s;
}

/// Classical RK4 step with the hotspot resistance held constant over dt.
template <class Source>
CircuitState rk4_step(const CircuitState& s, const CircuitParams& p, const Source& source,
                      double R_hs, double dt) {
    const double t = s.t;
    const double h = 0.5 * dt;
    if (p.C_p > 0.0) {
        const double s0 = source(t), s1 = source(t + h), s2 = source(t + dt);
        const Derivative k1 = circuit_derivative(s, p, s0, R_hs);
        const Derivative k2 = circuit_derivative({s.v_c + h * k1.dv_c, s.i_L + h * k1.di_L, t + h}, p, s1, R_hs);
        const Derivative k3 = circuit_derivative({s.v_c + h * k2.dv_c, s.i_L + h * k2.di_L, t + h}, p, s1, R_hs);
        const Derivative k4 = circuit_derivative({s.v_c + dt * k3.dv_c, s.i_L + dt * k3.di_L, t + dt}, p, s2, R_hs);
        return {s.v_c + dt / 6.0 * (k1.dv_c + 2.0 * k2.dv_c + 2.0 * k3.dv_c + k4.dv_c),
                s.i_L + dt / 6.0 * (k1.di_L + 2.0 * k2.di_L + 2.0 * k3.di_L + k4.di_L), t + dt};
    }
    const double s0 = source(t), s1 = source(t + h), s2 = source(t + dt);
    const double k1 = free_running_derivative(s.i_L, p, s0, R_hs);
    const double k2 = free_running_derivative(s.i_L + h * k1, p, s1, R_hs);
    const double k3 = free_running_derivative(s.i_L + h * k2, p, s1, R_hs);
    const double k4 = free_running_derivative(s.i_L + dt * k3, p, s2, R_hs);
    const double i = s.i_L + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    return {s2 - i * p.R_p, i, t + dt};
}

/// Base integration step: min(tau_RC, tau_RL, T_gate) / 200.
inline double base_step(const CircuitParams& p, double gate_period) {
    double scale = p.L_k / p.R_p;
    if (p.C_p > 0.0) scale = std::min(scale, p.R_p * p.C_p);
    if (gate_period > 0.0) scale = std::min(scale, gate_period);
    return scale / 200.0;
}

}  // namespace snspd::circuit

#pragma once

// Differencing readout of a gated trace.
//
// Both arms are AC coupled: V_2 = R_sense (i_L - I_dc) is the sensed wire
// current and V_1 = atten (V_src(t - delay) - offset) is a delayed,
// attenuated copy of the source. A gate clicks when max |V_2 - V_1| inside it
// exceeds the threshold.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "snspd/clicktrain.hpp"
#include "snspd/engine.hpp"
#include "snspd/errors.hpp"

namespace snspd::engine {

struct ReadoutCalibration {
    double delay = 0.0;  // s
    double atten = 0.0;  // V_1 volts per source volt
};

namespace detail {

inline void require_gated_samples(const SimTrace& tr) {
    if (tr.mode != Mode::GM) throw DomainError("differencing readout needs a gated trace");
    if (tr.t.empty()) throw DomainError("trace has no samples");
}

inline double dc_current(const SimTrace& tr) { return tr.bias.offset / tr.circuit.R_p; }

}  // namespace detail

/// Difference signal at every trace sample.
inline std::vector<double> difference_signal(const SimTrace& tr, double delay, double atten) {
    detail::require_gated_samples(tr);
    const double i_dc = detail::dc_current(tr);
    const double rs = tr.circuit.R_sense;
    std::vector<double> vd(tr.t.size());
    for (std::size_t k = 0; k < tr.t.size(); ++k) {
        const double v2 = rs * (tr.i_L[k] - i_dc);
        const double v1 = atten * (tr.bias(tr.t[k] - delay) - tr.bias.offset);
        vd[k] = v2 - v1;
    }
    return vd;
}

/// Per-gate maximum of |V_d|.
inline std::vector<double> gate_max_difference(const SimTrace& tr, double delay, double atten) {
    const std::vector<double> vd = difference_signal(tr, delay, atten);
    const double T = tr.bias.period();
    std::vector<double> peak(tr.gates.size(), 0.0);
    for (std::size_t k = 0; k < vd.size(); ++k) {
        const auto g = static_cast<std::size_t>(std::floor(tr.t[k] / T));
        if (g < peak.size()) peak[g] = std::max(peak[g], std::abs(vd[k]));
    }
    return peak;
}

inline ClickTrain differencing_readout(const SimTrace& tr, double delay, double atten, double threshold) {
    if (!(threshold > 0.0)) throw DomainError("readout threshold must be > 0");
    const std::vector<double> peak = gate_max_difference(tr, delay, atten);
    ClickTrain c;
    c.mode = TrainMode::GM;
    c.bin_width = tr.bias.period();
    for (double p : peak) c.bins.push_back(p > threshold ? 1 : 0);
    return c;
}

/// Least-squares fit of V_2 on the in-phase and quadrature parts of the
/// source over a quiescent trace, giving the replica gain and delay that null
/// the difference signal.
inline ReadoutCalibration calibrate_readout(const SimTrace& quiet) {
    detail::require_gated_samples(quiet);
    const double w = 2.0 * std::numbers::pi * quiet.bias.frequency;
    const double i_dc = detail::dc_current(quiet);
    double ss = 0.0, sc = 0.0, cc = 0.0, ys = 0.0, yc = 0.0;
    for (std::size_t k = 0; k < quiet.t.size(); ++k) {
        const double ph = w * quiet.t[k] + quiet.bias.phase;
        const double s = std::sin(ph), c = std::cos(ph);
        const double y = quiet.circuit.R_sense * (quiet.i_L[k] - i_dc);
        ss += s * s;
        sc += s * c;
        cc += c * c;
        ys += y * s;
        yc += y * c;
    }
    const double det = ss * cc - sc * sc;
    if (std::abs(det) <= 1e-12 * ss * cc) throw SingularError("readout calibration needs at least a full period");
    // y ~ a s + b c = atten A sin(ph - w delay).
    const double a = (ys * cc - yc * sc) / det;
    const double b = (yc * ss - ys * sc) / det;
    ReadoutCalibration cal;
    cal.atten = std::hypot(a, b) / quiet.bias.amplitude;
    double lag = std::atan2(-b, a) / w;
    const double T = quiet.bias.period();
    lag = std::fmod(lag, T);
    if (lag < 0.0) lag += T;
    cal.delay = lag;
    return cal;
}

}  // namespace snspd::engine

#pragma once

// Bias-chain calibration: transconductance from source voltage to nanowire
// current, and input reflection of a lumped model netlist.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "snspd/circuit.hpp"
#include "snspd/errors.hpp"
#include "snspd/twoport.hpp"

namespace snspd::rfcal {

/// ABCD matrix of the linearised device load seen from the pad: shunt pad
/// capacitance and termination, series R_B + R_sense, shunt C_p, series L_k.
/// The output port is the nanowire's far end, shorted (R_hs = 0).
inline Mat2 device_load_abcd(const circuit::CircuitParams& p, double f) {
    const cplx jw{0.0, 2.0 * std::numbers::pi * f};
    Mat2 m = shunt_admittance(jw * p.pad_cap);
    if (p.R_term > 0.0) m = m * shunt_admittance(1.0 / p.R_term);
    m = m * series_impedance(p.R_B + p.R_sense);
    m = m * shunt_admittance(jw * p.C_p);
    m = m * series_impedance(jw * p.L_k);
    return m;
}

/// Nanowire current per volt of an ideal source driving the chain input.
/// The chain must cover f; a thru chain is used when `chain` is empty.
inline cplx transconductance(const TwoPortNetwork& chain, const circuit::CircuitParams& load, double f) {
    Mat2 m = Mat2::identity();
    if (chain.size() > 0) m = to_abcd(chain).at(f);
    m = m * device_load_abcd(load, f);
    // Shorted output: V1 = B * I2.
    const cplx b = m(0, 1);
    if (std::abs(b) == 0.0) throw SingularError("chain has zero transfer impedance");
    return 1.0 / b;
}

/// One-line netlist element in a ladder from the source port toward ground.
struct NetElement {
    enum class Kind { SeriesR, SeriesL, SeriesC, ShuntR, ShuntL, ShuntC };
    Kind kind = Kind::SeriesR;
    double value = 0.0;  // Ohm, H or F
};

enum class Termination { Short, Open, Load };

struct Netlist {
    std::vector<NetElement> elements;
    Termination termination = Termination::Short;
    double load_ohms = 50.0;  // used with Termination::Load

    Mat2 abcd(double f) const {
        const cplx jw{0.0, 2.0 * std::numbers::pi * f};
        Mat2 m = Mat2::identity();
        for (const auto& e : elements) {
            using K = NetElement::Kind;
            switch (e.kind) {
                case K::SeriesR: m = m * series_impedance(e.value); break;
                case K::SeriesL: m = m * series_impedance(jw * e.value); break;
                case K::SeriesC:
                    if (f == 0.0) throw SingularError("series capacitor at DC");
                    m = m * series_impedance(1.0 / (jw * e.value));
                    break;
                case K::ShuntR:
                    if (e.value == 0.0) throw SingularError("zero shunt resistance");
                    m = m * shunt_admittance(1.0 / e.value);
                    break;
                case K::ShuntL:
                    if (f == 0.0) throw SingularError("shunt inductor at DC");
                    m = m * shunt_admittance(1.0 / (jw * e.value));
                    break;
                case K::ShuntC: m = m * shunt_admittance(jw * e.value); break;
            }
        }
        return m;
    }
};

/// Reflection-validation model: pad capacitance, R_b plus the sense resistor,
/// C_p and L_k to a shorted nanowire end.
inline Netlist default_netlist(const circuit::CircuitParams& p, double R_b) {
    using K = NetElement::Kind;
    Netlist n;
    n.elements = {{K::ShuntC, p.pad_cap}, {K::SeriesR, R_b + p.R_sense}, {K::ShuntC, p.C_p}, {K::SeriesL, p.L_k}};
    n.termination = Termination::Short;
    return n;
}

inline cplx reflection(const Mat2& m, Termination term, double z_load, double z0) {
    const cplx A = m(0, 0), B = m(0, 1), C = m(1, 0), D = m(1, 1);
    cplx num, den;
    switch (term) {
        case Termination::Short: num = B - z0 * D; den = B + z0 * D; break;
        case Termination::Open: num = A - z0 * C; den = A + z0 * C; break;
        case Termination::Load:
            num = A * z_load + B - z0 * (C * z_load + D);
            den = A * z_load + B + z0 * (C * z_load + D);
            break;
    }
    if (std::abs(den) == 0.0) throw SingularError("input reflection undefined");
    return num / den;
}

inline std::vector<cplx> input_reflection(const Netlist& net, const std::vector<double>& freqs,
                                          double z0 = 50.0) {
    std::vector<cplx> out;
    out.reserve(freqs.size());
    for (double f : freqs) out.push_back(reflection(net.abcd(f), net.termination, net.load_ohms, z0));
    return out;
}

/// One-port reflection stored as a two-port with S11 only (S21 = S12 = 0,
/// S22 = 0), which is how single-port VNA data is carried through the
/// two-port reader.
inline TwoPortNetwork reflection_network(const std::vector<double>& freqs, const std::vector<cplx>& s11,
                                         double z0 = 50.0) {
    TwoPortNetwork net;
    net.form = NetworkForm::S;
    net.ref_impedance = z0;
    net.freqs = freqs;
    for (const cplx& s : s11) {
        Mat2 m;
        m(0, 0) = s;
        net.params.push_back(m);
    }
    return net;
}

struct ReflectionRow {
    double freq = 0.0;
    double model_mag = 0.0;
    double ref_mag = 0.0;
    double deviation = 0.0;  // |S11_model - S11_ref|
};

struct ReflectionReport {
    std::vector<ReflectionRow> rows;
    double rms = 0.0;
};

/// Compares the model's S11 with a reference network at the reference's
/// frequencies up to `cutoff` (inclusive).
inline ReflectionReport compare_reflection(const Netlist& net, const TwoPortNetwork& ref, double cutoff) {
    if (ref.form != NetworkForm::S) throw DomainError("reference must be in S form");
    ReflectionReport rep;
    double sum = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        const double f = ref.freqs[i];
        if (f > cutoff) break;
        const cplx model = reflection(net.abcd(f), net.termination, net.load_ohms, ref.ref_impedance);
        const cplx meas = ref.params[i](0, 0);
        const double d = std::abs(model - meas);
        rep.rows.push_back({f, std::abs(model), std::abs(meas), d});
        sum += d * d;
    }
    if (rep.rows.empty()) throw DomainError("no reference points below the cutoff");
    rep.rms = std::sqrt(sum / static_cast<double>(rep.rows.size()));
    return rep;
}

}  // namespace snspd::rfcal

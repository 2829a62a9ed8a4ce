#pragma once

// Frequency-sampled two-port networks in S or ABCD form.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "snspd/errors.hpp"

namespace snspd::rfcal {

using cplx = std::complex<double>;

/// Row-major 2x2 complex matrix: {m11, m12, m21, m22}.
struct Mat2 {
    std::array<cplx, 4> m{};

    cplx& operator()(int r, int c) { return m[static_cast<std::size_t>(2 * r + c)]; }
    const cplx& operator()(int r, int c) const { return m[static_cast<std::size_t>(2 * r + c)]; }

    friend Mat2 operator*(const Mat2& a, const Mat2& b) {
        Mat2 r;
        r(0, 0) = a(0, 0) * b(0, 0) + a(0, 1) * b(1, 0);
        r(0, 1) = a(0, 0) * b(0, 1) + a(0, 1) * b(1, 1);
        r(1, 0) = a(1, 0) * b(0, 0) + a(1, 1) * b(1, 0);
        r(1, 1) = a(1, 0) * b(0, 1) + a(1, 1) * b(1, 1);
        return r;
    }

    static Mat2 identity() { return {{cplx{1.0}, cplx{0.0}, cplx{0.0}, cplx{1.0}}}; }
};

inline double max_abs_diff(const Mat2& a, const Mat2& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < 4; ++i) d = std::max(d, std::abs(a.m[i] - b.m[i]));
    return d;
}

enum class NetworkForm { S, ABCD };

struct TwoPortNetwork {
    std::vector<double> freqs;  // Hz, strictly increasing
    std::vector<Mat2> params;
    NetworkForm form = NetworkForm::S;
    double ref_impedance = 50.0;

    std::size_t size() const { return freqs.size(); }

    void validate() const {
        if (freqs.size() != params.size()) throw DomainError("frequency and parameter counts differ");
        for (std::size_t i = 0; i < freqs.size(); ++i) {
            if (!std::isfinite(freqs[i])) throw DomainError("non-finite frequency");
            if (i > 0 && !(freqs[i] > freqs[i - 1])) {
                throw DomainError("frequencies must be strictly increasing");
            }
            for (const cplx& z : params[i].m) {
                if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
                    throw DomainError("non-finite network parameter");
                }
            }
        }
    }

    /// Parameters at f, linear in real and imaginary parts between samples.
    Mat2 at(double f) const {
        if (freqs.empty()) throw DomainError("empty network");
        const double tol = 1e-9 * std::max(1.0, std::abs(freqs.back()));
        if (f < freqs.front() - tol || f > freqs.back() + tol) {
            throw DomainError("frequency outside the network grid (no extrapolation)");
        }
        if (freqs.size() == 1 || f <= freqs.front()) return params.front();
        if (f >= freqs.back()) return params.back();
        const auto it = std::upper_bound(freqs.begin(), freqs.end(), f);
        const auto k = static_cast<std::size_t>(it - freqs.begin());
        const double w = (f - freqs[k - 1]) / (freqs[k] - freqs[k - 1]);
        Mat2 r;
        for (std::size_t i = 0; i < 4; ++i) r.m[i] = (1.0 - w) * params[k - 1].m[i] + w * params[k].m[i];
        return r;
    }
};

inline Mat2 s_to_abcd(const Mat2& s, double z0) {
    const cplx s11 = s(0, 0), s12 = s(0, 1), s21 = s(1, 0), s22 = s(1, 1);
    if (std::abs(s21) == 0.0) throw SingularError("S21 = 0: network has no ABCD form");
    const cplx den = 2.0 * s21;
    Mat2 a;
    a(0, 0) = ((1.0 + s11) * (1.0 - s22) + s12 * s21) / den;
    a(0, 1) = z0 * ((1.0 + s11) * (1.0 + s22) - s12 * s21) / den;
    a(1, 0) = ((1.0 - s11) * (1.0 - s22) - s12 * s21) / (z0 * den);
    a(1, 1) = ((1.0 - s11) * (1.0 + s22) + s12 * s21) / den;
    return a;
}

inline Mat2 abcd_to_s(const Mat2& t, double z0) {
    const cplx A = t(0, 0), B = t(0, 1), C = t(1, 0), D = t(1, 1);
    const cplx den = A + B / z0 + C * z0 + D;
    if (std::abs(den) == 0.0) throw SingularError("ABCD to S conversion is singular");
    Mat2 s;
    s(0, 0) = (A + B / z0 - C * z0 - D) / den;
    s(0, 1) = 2.0 * (A * D - B * C) / den;
    s(1, 0) = 2.0 / den;
    s(1, 1) = (-A + B / z0 - C * z0 + D) / den;
    return s;
}

inline TwoPortNetwork to_abcd(const TwoPortNetwork& net) {
    if (net.form == NetworkForm::ABCD) return net;
    TwoPortNetwork out = net;
    out.form = NetworkForm::ABCD;
    for (auto& m : out.params) m = s_to_abcd(m, net.ref_impedance);
    return out;
}

inline TwoPortNetwork to_s(const TwoPortNetwork& net, double z0 = 50.0) {
    if (net.form == NetworkForm::S && net.ref_impedance == z0) return net;
    const TwoPortNetwork abcd = to_abcd(net);
    TwoPortNetwork out = abcd;
    out.form = NetworkForm::S;
    out.ref_impedance = z0;
    for (auto& m : out.params) m = abcd_to_s(m, z0);
    return out;
}

/// Chain product a then b. Frequencies of b are resampled onto a's grid
/// when the grids differ.
inline TwoPortNetwork cascade(const TwoPortNetwork& a, const TwoPortNetwork& b) {
    const TwoPortNetwork ta = to_abcd(a);
    const TwoPortNetwork tb = to_abcd(b);
    TwoPortNetwork out = ta;
    const bool same_grid = ta.freqs == tb.freqs;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.params[i] = ta.params[i] * (same_grid ? tb.params[i] : tb.at(ta.freqs[i]));
    }
    return out;
}

// Textbook two-port elements in ABCD form.

inline Mat2 series_impedance(cplx z) { return {{cplx{1.0}, z, cplx{0.0}, cplx{1.0}}}; }
inline Mat2 shunt_admittance(cplx y) { return {{cplx{1.0}, cplx{0.0}, y, cplx{1.0}}}; }

/// Lossless matched line section with the given electrical delay.
inline Mat2 delay_line(double f, double delay, double z0) {
    const double th = 2.0 * std::numbers::pi * f * delay;
    return {{cplx{std::cos(th)}, cplx{0.0, z0 * std::sin(th)}, cplx{0.0, std::sin(th) / z0}, cplx{std::cos(th)}}};
}

/// Matched resistive attenuator (Pi pad) with the given loss in dB.
inline Mat2 attenuator(double loss_db, double z0) {
    const double k = std::pow(10.0, loss_db / 20.0);
    const double r_series = z0 * (k * k - 1.0) / (2.0 * k);
    const double r_shunt = z0 * (k + 1.0) / (k - 1.0);
    return shunt_admittance(1.0 / r_shunt) * series_impedance(r_series) * shunt_admittance(1.0 / r_shunt);
}

/// Samples an element factory over a frequency grid into an ABCD network.
template <class Element>
TwoPortNetwork sample(const std::vector<double>& freqs, Element&& element) {
    TwoPortNetwork net;
    net.form = NetworkForm::ABCD;
    net.freqs = freqs;
    net.params.reserve(freqs.size());
    for (double f : freqs) net.params.push_back(element(f));
    return net;
}

inline TwoPortNetwork thru(const std::vector<double>& freqs) {
    return sample(freqs, [](double) { return Mat2::identity(); });
}

}  // namespace snspd::rfcal

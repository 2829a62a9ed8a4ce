#pragma once

// 1-D electro-thermal model of the nanowire.
//
// Enthalpy form of
//   c(T) dT/dt = d/dx(kappa(T) dT/dx) + j^2 rho [normal] - (alpha/d)(T^n - T_sub^n)
// with c = c0 T/T_c and kappa = kappa0 T/T_c, insulated ends and explicit
// time stepping. Cells outside the profile's active window sit exactly at
// T_sub and are superconducting, so only the window is advanced.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "snspd/errors.hpp"

namespace snspd::thermal {

struct WireGeometry {
    double length = 500e-6;    // m
    double width = 120e-9;     // m
    double thickness = 4e-9;   // m
    std::size_t n_cells = 50000;

    double cell_len() const { return length / static_cast<double>(n_cells); }
    double cross_section() const { return width * thickness; }
};

struct ThermalParams {
    double T_sub = 4.2;           // K
    double T_c = 10.5;            // K
    double I_c0 = 20e-6;          // A, critical current at T_sub
    double R_sheet = 400.0;       // Ohm/sq
    double kappa0 = 0.1;          // W/(m K)
    double c0 = 1.0e4;            // J/(m^3 K)
    double alpha = 300.0;         // W/(m^2 K^n)
    double n_bnd = 3.0;
    double hotspot_len = 30e-9;   // m
    double hotspot_T = 21.0;      // K

    double kappa(double T) const { return kappa0 * T / T_c; }
    double heat_capacity(double T) const { return c0 * T / T_c; }
};

inline void validate(const WireGeometry& g, const ThermalParams& p) {
    if (!(g.length > 0.0 && g.width > 0.0 && g.thickness > 0.0)) {
        throw DomainError("wire geometry dimensions must be > 0");
    }
    if (g.n_cells < 50) throw DomainError("wire needs at least 50 cells");
    if (g.cell_len() * 3.0 > p.hotspot_len * (1.0 + 1e-9)) {
        throw DomainError("cell size must resolve the photon hotspot with >= 3 cells");
    }
    if (!(p.T_sub < p.T_c)) throw DomainError("T_sub must be below T_c");
    if (!(p.I_c0 > 0.0)) throw DomainError("I_c0 must be > 0");
    if (!(p.R_sheet > 0.0 && p.kappa0 > 0.0 && p.c0 > 0.0 && p.alpha >= 0.0 && p.n_bnd > 0.0)) {
        throw DomainError("material constants must be > 0");
    }
    if (!(p.hotspot_len > 0.0 && p.hotspot_T > 0.0)) throw DomainError("photon seed must be > 0");
}

/// Critical current at temperature T, quadratic in T and scaled so that
/// ic_of_T(T_sub) == I_c0. Zero at and above T_c.
inline double ic_of_T(double T, const ThermalParams& p) {
    const double x = T / p.T_c;
    const double x_sub = p.T_sub / p.T_c;
    if (x >= 1.0) return 0.0;
    return p.I_c0 * (1.0 - x * x) / (1.0 - x_sub * x_sub);
}

struct Span {
    std::size_t lo = 0;
    std::size_t hi = 0;
};

struct ThermalProfile {
    std::vector<double> T;
    std::vector<std::uint8_t> normal;
    // Sorted, disjoint active ranges [lo, hi). Cells outside every span are
    // exactly at T_sub and superconducting.
    std::vector<Span> spans;

    static ThermalProfile uniform(const WireGeometry& g, const ThermalParams& p) {
        ThermalProfile prof;
        prof.T.assign(g.n_cells, p.T_sub);
        prof.normal.assign(g.n_cells, 0);
        return prof;
    }

    std::size_t size() const { return T.size(); }
    bool quiescent() const { return spans.empty(); }

    /// Marks [lo, hi) active; call after editing T or normal by hand.
    void activate(std::size_t lo, std::size_t hi) {
        hi = std::min(hi, size());
        if (lo >= hi) return;
        std::vector<Span> out;
        out.reserve(spans.size() + 1);
        Span add{lo, hi};
        bool placed = false;
        for (const Span& s : spans) {
            if (s.hi < add.lo) {
                out.push_back(s);
            } else if (add.hi < s.lo) {
                if (!placed) out.push_back(add), placed = true;
                out.push_back(s);
            } else {
                add.lo = std::min(add.lo, s.lo);
                add.hi = std::max(add.hi, s.hi);
            }
        }
        if (!placed) out.push_back(add);
        spans = std::move(out);
    }

    std::size_t active_cells() const {
        std::size_t n = 0;
        for (const Span& s : spans) n += s.hi - s.lo;
        return n;
    }

    std::size_t normal_count() const {
        std::size_t n = 0;
        for (const Span& s : spans)
            for (std::size_t i = s.lo; i < s.hi; ++i) n += normal[i];
        return n;
    }

    double max_T() const {
        if (T.empty()) return 0.0;
        double m = T.front();
        if (quiescent()) return m;
        for (const Span& s : spans)
            for (std::size_t i = s.lo; i < s.hi; ++i) m = std::max(m, T[i]);
        return m;
    }
};

/// Resistance of a single cell in the normal state.
inline double cell_resistance(const WireGeometry& g, const ThermalParams& p) {
    return p.R_sheet * g.cell_len() / g.width;
}

inline double hotspot_resistance(const ThermalProfile& prof, const WireGeometry& g,
                                 const ThermalParams& p) {
    return cell_resistance(g, p) * static_cast<double>(prof.normal_count());
}

/// Total enthalpy relative to 0 K, in J: sum of c0 T^2/(2 T_c) * cell volume.
inline double thermal_energy(const ThermalProfile& prof, const WireGeometry& g,
                             const ThermalParams& p) {
    double sum = 0.0;
    for (double T : prof.T) sum += T * T;
    return sum * p.c0 / (2.0 * p.T_c) * g.cell_len() * g.cross_section();
}

namespace detail {

inline bool switching_normal(double T, double i_abs, const ThermalParams& p) {
    return T > p.T_c || i_abs > ic_of_T(T, p);
}

// Rebuilds the span list from the cells inside the current spans, dropping
// cells that are back at T_sub and superconducting.
inline void shrink_window(ThermalProfile& prof, double T_sub) {
    std::vector<Span> out;
    for (const Span& s : prof.spans) {
        bool open = false;
        for (std::size_t i = s.lo; i < s.hi; ++i) {
            const bool active = prof.T[i] != T_sub || prof.normal[i];
            if (active && !open) out.push_back({i, i + 1}), open = true;
            else if (active) out.back().hi = i + 1;
            else open = false;
        }
    }
    prof.spans = std::move(out);
}

[[noreturn]] inline void instability(std::size_t cell, double T, double t_local) {
    std::ostringstream os;
    os << "thermal step unstable: cell " << cell << " T=" << T << " K after " << t_local << " s";
    throw NumericalError(os.str());
}

}  // namespace detail

namespace detail {

inline double substep_for(double t_max, const WireGeometry& g, const ThermalParams& p) {
    const double dx = g.cell_len();
    double dt = 0.4 * dx * dx * p.c0 / p.kappa0;
    if (p.alpha > 0.0) {
        // d(loss)/d(T^2) in the T^2 variable
        const double rate = 2.0 * p.T_c / p.c0 * p.alpha / g.thickness * 0.5 * p.n_bnd *
                            std::pow(t_max, p.n_bnd - 2.0);
        dt = std::min(dt, 0.4 / rate);
    }
    return dt;
}

}  // namespace detail

/// Largest stable explicit sub-step for the current window contents.
/// Because kappa/c is constant, the scheme is linear diffusion in T^2 with
/// diffusivity kappa0/c0, so the conduction bound does not depend on T.
inline double stable_substep(const ThermalProfile& prof, const WireGeometry& g,
                             const ThermalParams& p) {
    return detail::substep_for(std::max(p.T_sub, prof.max_T()), g, p);
}

/// Applies the switching rule to every cell in the window; a current above
/// ic_of_T(T_sub) switches the whole wire.
inline void update_switching(ThermalProfile& prof, const ThermalParams& p, double i_wire) {
    const double i_abs = std::abs(i_wire);
    if (i_abs > ic_of_T(p.T_sub, p)) prof.spans.assign(1, Span{0, prof.size()});
    for (const Span& s : prof.spans)
        for (std::size_t i = s.lo; i < s.hi; ++i)
            prof.normal[i] = detail::switching_normal(prof.T[i], i_abs, p) ? 1 : 0;
    detail::shrink_window(prof, p.T_sub);
}

/// Advances the profile in place by dt at constant wire current.
inline void advance(ThermalProfile& prof, const WireGeometry& g, const ThermalParams& p,
                    double i_wire, double dt, std::vector<double>& scratch) {
    const double i_abs = std::abs(i_wire);
    if (i_abs > ic_of_T(p.T_sub, p)) update_switching(prof, p, i_wire);
    if (prof.quiescent() || dt <= 0.0) return;

    const std::size_t n = prof.size();
    const double dx = g.cell_len();
    const double j = i_wire / g.cross_section();
    const double joule = j * j * p.R_sheet * g.thickness;  // W/m^3
    const double loss_k = p.alpha / g.thickness;           // W/(m^3 K^n)
    const double t_sub_n = std::pow(p.T_sub, p.n_bnd);
    const double h_scale = 2.0 * p.T_c / p.c0;  // T^2 = h_scale * H
    const bool cubic = p.n_bnd == 3.0;
    const double u_sub = p.T_sub * p.T_sub;
    const double snap_u = 2e-6 * u_sub;
    // a cell is normal iff T^2 > u_switch (covers both T > T_c and i > ic(T))
    const double x_sub = p.T_sub / p.T_c;
    const double u_switch =
        p.T_c * p.T_c * (1.0 - i_abs * (1.0 - x_sub * x_sub) / p.I_c0);
    const double u_floor = (p.T_sub - 1e-6) * (p.T_sub - 1e-6);
    const double u_ceiling = std::numeric_limits<double>::max();

    std::vector<Span> grown;
    std::vector<Span> next;
    double t_max = std::max(p.T_sub, prof.max_T());
    double elapsed = 0.0;
    while (elapsed < dt && !prof.quiescent()) {
        const double step = std::min(dt - elapsed, detail::substep_for(t_max, g, p));
        double u_max = u_sub;
        const double r = p.kappa0 / p.c0 * step / (dx * dx);
        const double src = h_scale * step;
        // Each span plus one neighbour on either side; merged spans keep at
        // least one untouched T_sub cell between them.
        grown.clear();
        for (const Span& s : prof.spans) {
            const Span e{s.lo > 0 ? s.lo - 1 : 0, std::min(s.hi + 1, n)};
            if (!grown.empty() && e.lo <= grown.back().hi) grown.back().hi = std::max(grown.back().hi, e.hi);
            else grown.push_back(e);
        }
        next.clear();
        for (const Span& e : grown) {
            const std::size_t a = e.lo, b = e.hi;
            // rolling T^2 stencil, mirrored at the insulated ends; T[i+1] is
            // still the old value when cell i is updated
            double u = prof.T[a] * prof.T[a];
            double u_left = a > 0 ? prof.T[a - 1] * prof.T[a - 1] : u;
            bool open = false;
            for (std::size_t i = a; i < b; ++i) {
                const double u_right = i + 1 < n ? prof.T[i + 1] * prof.T[i + 1] : u;
                double rhs = prof.normal[i] ? joule : 0.0;
                if (loss_k > 0.0) {
                    const double Ti = prof.T[i];
                    const double tn = cubic ? u * Ti : std::pow(Ti, p.n_bnd);
                    rhs -= loss_k * (tn - t_sub_n);
                }
                double u_new = u + r * (u_left + u_right - 2.0 * u) + src * rhs;
                if (!(u_new >= u_floor && u_new < u_ceiling)) {
                    detail::instability(i, u_new > 0.0 ? std::sqrt(u_new) : u_new, elapsed);
                }
                if (std::abs(u_new - u_sub) < snap_u) u_new = u_sub;
                const bool normal = u_new > u_switch;
                u_max = std::max(u_max, u_new);
                prof.T[i] = u_new == u_sub ? p.T_sub : std::sqrt(u_new);
                prof.normal[i] = normal ? 1 : 0;
                const bool active = normal || u_new != u_sub;
                if (active && !open) next.push_back({i, i + 1}), open = true;
                else if (active) next.back().hi = i + 1;
                else open = false;
                u_left = u;
                u = u_right;
            }
        }
        prof.spans.swap(next);
        t_max = std::sqrt(u_max);
        elapsed += step;
    }
}

/// Value-semantics wrapper around advance().
inline ThermalProfile thermal_step(ThermalProfile prof, const WireGeometry& g,
                                   const ThermalParams& p, double i_wire, double dt) {
    std::vector<double> scratch;
    advance(prof, g, p, i_wire, dt, scratch);
    return prof;
}

/// Seeds a photon hotspot: cells whose centres fall within hotspot_len of
/// `position` (clipped at the wire ends) are set to hotspot_T and marked normal.
inline void inject_photon_in_place(ThermalProfile& prof, const WireGeometry& g,
                                   const ThermalParams& p, double position) {
    if (!(position >= 0.0 && position <= g.length)) {
        throw DomainError("photon position outside the wire");
    }
    const double dx = g.cell_len();
    const double n = static_cast<double>(g.n_cells);
    const double a = (position - 0.5 * p.hotspot_len) / dx - 0.5;
    const double b = (position + 0.5 * p.hotspot_len) / dx - 0.5;
    const double eps = 1e-9;
    double first = std::max(0.0, std::ceil(a - eps));
    double last = std::min(n - 1.0, std::floor(b + eps));
    if (last < first) {
        first = last = std::clamp(std::floor(position / dx), 0.0, n - 1.0);
    }
    const auto i0 = static_cast<std::size_t>(first);
    const auto i1 = static_cast<std::size_t>(last) + 1;
    for (std::size_t i = i0; i < i1; ++i) {
        prof.T[i] = p.hotspot_T;
        prof.normal[i] = 1;
    }
    prof.activate(i0, i1);
}

inline ThermalProfile inject_photon(ThermalProfile prof, const WireGeometry& g,
                                    const ThermalParams& p, double position) {
    inject_photon_in_place(prof, g, p, position);
    return prof;
}

/// Linearised substrate relaxation time at T_c, c(T_c) d / (alpha n T_c^(n-1)).
inline double cooling_time(const WireGeometry& g, const ThermalParams& p) {
    if (!(p.alpha > 0.0)) throw DomainError("cooling time needs alpha > 0");
    return p.heat_capacity(p.T_c) * g.thickness / (p.alpha * p.n_bnd * std::pow(p.T_c, p.n_bnd - 1.0));
}

/// Uniform normal-state temperature where Joule heating balances substrate loss.
/// Closed form; the tests check it against an independent root finder.
inline double uniform_equilibrium_T(const WireGeometry& g, const ThermalParams& p, double i_wire) {
    const double j = i_wire / g.cross_section();
    const double joule = j * j * p.R_sheet * g.thickness;
    return std::pow(std::pow(p.T_sub, p.n_bnd) + joule * g.thickness / p.alpha, 1.0 / p.n_bnd);
}

}  // namespace snspd::thermal

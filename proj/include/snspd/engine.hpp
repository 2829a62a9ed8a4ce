#pragma once

// Coupled electro-thermal simulation of a biased nanowire.
//
// Each step advances the thermal profile at the present wire current, then
// recomputes the hotspot resistance, then integrates the circuit with that
// resistance held constant. Gated runs label one gate per bias period, with
// the current minimum at the gate boundary and the maximum at its centre.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <utility>
#include <vector>

#include "snspd/circuit.hpp"
#include "snspd/clicktrain.hpp"
#include "snspd/detection.hpp"
#include "snspd/errors.hpp"
#include "snspd/thermal.hpp"

namespace snspd::engine {

enum class Mode { FM, GM };

struct PhotonEvent {
    double time = 0.0;      // s
    double position = 0.0;  // m along the wire
};

struct SimConfig {
    circuit::CircuitParams circuit;
    thermal::ThermalParams thermal;
    thermal::WireGeometry geom;
    circuit::BiasWaveform bias;
    Mode mode = Mode::GM;
    std::vector<PhotonEvent> events;
    double dark_rate = 0.0;  // Hz
    std::uint64_t seed = 1;
    double duration = 0.0;   // s

    // Absorption probability versus i_L / I_c0 applied to each event at its
    // arrival time. Unset means every event seeds a hotspot.
    std::optional<QeCurve> absorption;

    double latch_resistance = 150.0;  // Ohm
    double gate_latch_fraction = 0.25;
    double fm_latch_tau_multiple = 10.0;
    double fm_bin_width = 1e-9;  // s
    double center_window = 0.1;  // fraction of the gate period around its centre
    double sample_interval = 0.0;  // s; 0 records every step, < 0 disables samples
    double dt_override = 0.0;      // s; 0 uses circuit::base_step

    void validate() const {
        circuit.validate(mode == Mode::GM);
        thermal::validate(geom, thermal);
        bias.validate();
        if (!(duration > 0.0)) throw DomainError("duration must be > 0");
        if (mode == Mode::FM && bias.kind != circuit::WaveformKind::DC) {
            throw DomainError("free-running mode requires a DC bias");
        }
        if (mode == Mode::GM && bias.kind != circuit::WaveformKind::Sine) {
            throw DomainError("gated mode requires a sine bias");
        }
        if (dark_rate < 0.0) throw DomainError("dark_rate must be >= 0");
        for (const auto& e : events) {
            if (!(e.position >= 0.0 && e.position <= geom.length)) {
                throw DomainError("photon event position outside the wire");
            }
        }
        if (absorption) absorption->validate();
    }
};

struct GateRecord {
    std::size_t index = 0;
    double peak_current = 0.0;   // A
    double peak_time = 0.0;      // s
    bool latched = false;
    double max_T_center = 0.0;   // K, over cells and the centre window
    double latch_onset = -1.0;   // s, first crossing of the latch resistance; < 0 if none
    bool reset_before_next_peak = true;
    double time_above_latch = 0.0;  // s
};

struct SimTrace {
    std::vector<double> t, i_L, v_c, R_hs, T_max, source_v;
    std::vector<GateRecord> gates;
    std::vector<double> click_times;  // rising crossings of the latch resistance
    std::vector<double> injected;     // times of seeded hotspots
    ClickTrain clicks;
    std::optional<double> fm_latch_time;  // set when a free-running latch persists
    circuit::CircuitParams circuit;
    circuit::BiasWaveform bias;
    Mode mode = Mode::GM;
    double dt = 0.0;
    double duration = 0.0;
    double T_sub = 0.0;
};

/// Step-by-step driver; simulate() wraps it. Copyable, so callers can
/// snapshot a run and branch from it.
class Simulator {
public:
    explicit Simulator(SimConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        profile_ = thermal::ThermalProfile::uniform(cfg_.geom, cfg_.thermal);
        state_ = circuit::steady_state(cfg_.circuit, cfg_.bias, 0.0);
        if (cfg_.mode == Mode::FM) state_.v_c = cfg_.bias(0.0) - state_.i_L * cfg_.circuit.R_p;
        period_ = cfg_.mode == Mode::GM ? cfg_.bias.period() : 0.0;
        dt_ = cfg_.dt_override > 0.0 ? cfg_.dt_override : circuit::base_step(cfg_.circuit, period_);
        if (period_ > 0.0) {
            const double steps = std::ceil(period_ / dt_ - 1e-9);
            dt_ = period_ / steps;
        }
        events_ = cfg_.events;
        add_dark_counts();
        std::stable_sort(events_.begin(), events_.end(),
                         [](const PhotonEvent& a, const PhotonEvent& b) { return a.time < b.time; });
        rng_.seed(cfg_.seed ^ 0x9e3779b97f4a7c15ULL);
        trace_.circuit = cfg_.circuit;
        trace_.bias = cfg_.bias;
        trace_.mode = cfg_.mode;
        trace_.dt = dt_;
        trace_.T_sub = cfg_.thermal.T_sub;
        if (period_ > 0.0) {
            n_gates_ = static_cast<std::size_t>(std::floor(cfg_.duration / period_ + 1e-9));
            trace_.gates.reserve(n_gates_);
            open_gate(0);
        }
        record_sample(true);
    }

    const SimConfig& config() const { return cfg_; }
    const circuit::CircuitState& state() const { return state_; }
    const thermal::ThermalProfile& profile() const { return profile_; }
    double time() const { return state_.t; }
    double dt() const { return dt_; }
    double hotspot_resistance() const { return r_hs_; }

    /// Largest hotspot resistance seen since the last mark_window() call.
    double window_max_resistance() const { return window_max_rhs_; }
    void mark_window() { window_max_rhs_ = r_hs_; }

    /// Replaces the bias for the rest of the run (quasi-static sweeps).
    void set_bias(const circuit::BiasWaveform& b) {
        cfg_.bias = b;
        trace_.bias = b;
    }

    void inject(double position) {
        thermal::inject_photon_in_place(profile_, cfg_.geom, cfg_.thermal, position);
        r_hs_ = thermal::hotspot_resistance(profile_, cfg_.geom, cfg_.thermal);
        window_max_rhs_ = std::max(window_max_rhs_, r_hs_);
        trace_.injected.push_back(state_.t);
    }

    /// Advances to t_end (clamped to the configured duration when gated).
    void run_until(double t_end) {
        while (state_.t < t_end - 1e-3 * dt_) {
            double h = std::min(dt_, t_end - state_.t);
            if (next_event_ < events_.size()) {
                const double te = events_[next_event_].time;
                if (te <= state_.t) {
                    handle_event(events_[next_event_++]);
                    continue;
                }
                if (te < state_.t + h) h = te - state_.t;
            }
            step(h);
        }
        while (next_event_ < events_.size() && events_[next_event_].time <= state_.t) {
            handle_event(events_[next_event_++]);
        }
    }

    SimTrace finish() && {
        if (period_ > 0.0) {
            if (trace_.gates.size() < n_gates_ && gate_open_) close_gate();
            trace_.gates.resize(std::min(trace_.gates.size(), n_gates_));
            if (!trace_.gates.empty() && trace_.gates.back().latched) {
                trace_.gates.back().reset_before_next_peak = saw_reset_since_peak_;
            }
        }
        trace_.duration = cfg_.duration;
        build_clicks();
        return std::move(trace_);
    }

    SimTrace run() && {
        run_until(cfg_.duration);
        return std::move(*this).finish();
    }

private:
    void add_dark_counts() {
        if (cfg_.dark_rate <= 0.0) return;
        std::mt19937_64 rng(cfg_.seed);
        std::exponential_distribution<double> gap(cfg_.dark_rate);
        std::uniform_real_distribution<double> pos(0.0, cfg_.geom.length);
        double t = gap(rng);
        while (t < cfg_.duration) {
            events_.push_back({t, pos(rng)});
            t += gap(rng);
        }
    }

    void handle_event(const PhotonEvent& e) {
        if (cfg_.absorption) {
            const double p = (*cfg_.absorption)(std::abs(state_.i_L) / cfg_.thermal.I_c0);
            if (std::uniform_real_distribution<double>(0.0, 1.0)(rng_) >= p) return;
        }
        inject(e.position);
    }

    void step(double h) {
        const auto& p = cfg_.circuit;
        const double t0 = state_.t;
        thermal::advance(profile_, cfg_.geom, cfg_.thermal, state_.i_L, h, scratch_);
        r_hs_ = thermal::hotspot_resistance(profile_, cfg_.geom, cfg_.thermal);
        window_max_rhs_ = std::max(window_max_rhs_, r_hs_);

        // Keep RK4 well inside its stability region for the L_k / R_hs pole.
        const double rate = r_hs_ / p.L_k;
        const int m = rate > 0.0 ? std::max(1, static_cast<int>(std::ceil(h * rate / 0.5))) : 1;
        const double hs = h / m;
        auto src = [this](double t) { return cfg_.bias(t); };
        for (int k = 0; k < m; ++k) state_ = circuit::rk4_step(state_, p, src, r_hs_, hs);
        state_.t = t0 + h;
        if (!std::isfinite(state_.i_L) || !std::isfinite(state_.v_c)) {
            std::ostringstream os;
            os << "circuit state non-finite at t=" << state_.t << " s (R_hs=" << r_hs_ << " Ohm)";
            throw NumericalError(os.str());
        }
        observe(t0, h);
        record_sample(false);
    }

    void observe(double t0, double h) {
        const double t = state_.t;
        const bool above = r_hs_ > cfg_.latch_resistance;
        if (above && !was_above_) trace_.click_times.push_back(t);

        if (cfg_.mode == Mode::FM) {
            const double tau = circuit::time_constant(cfg_.circuit.L_k, cfg_.circuit.R_p);
            if (above) {
                if (!was_above_) above_since_ = t;
                if (!trace_.fm_latch_time && t - above_since_ > cfg_.fm_latch_tau_multiple * tau) {
                    trace_.fm_latch_time = above_since_;
                }
            }
            was_above_ = above;
            return;
        }
        was_above_ = above;

        // Gate bookkeeping. Steps never straddle a gate boundary except for
        // event-split steps, which are attributed to the gate they end in.
        while (gate_open_ && t > gate_end_ + 1e-6 * dt_) {
            close_gate();
            if (trace_.gates.size() < n_gates_) open_gate(trace_.gates.size());
        }
        if (!gate_open_) return;
        GateRecord& g = current_;
        if (state_.i_L > g.peak_current) {
            g.peak_current = state_.i_L;
            g.peak_time = t;
        }
        if (above) {
            g.time_above_latch += h;
            if (g.latch_onset < 0.0) g.latch_onset = t;
        }
        const double mid = gate_start_ + 0.5 * period_;
        const double half_win = 0.5 * cfg_.center_window * period_;
        if (std::abs(t - mid) <= half_win + 1e-9 * period_) {
            g.max_T_center = std::max(g.max_T_center, profile_.max_T());
        }
        // Reset tracking: R_hs must vanish between a latched gate's peak and
        // the following gate's peak.
        if (t >= mid && t - h < mid) {
            if (!trace_.gates.empty() && trace_.gates.back().latched) {
                trace_.gates.back().reset_before_next_peak = saw_reset_since_peak_;
            }
            saw_reset_since_peak_ = r_hs_ == 0.0;
        } else if (r_hs_ == 0.0) {
            saw_reset_since_peak_ = true;
        }
        (void)t0;
    }

    void open_gate(std::size_t index) {
        current_ = GateRecord{};
        current_.index = index;
        current_.peak_current = -std::numeric_limits<double>::infinity();
        current_.max_T_center = cfg_.thermal.T_sub;
        gate_start_ = static_cast<double>(index) * period_;
        gate_end_ = gate_start_ + period_;
        gate_open_ = true;
    }

    void close_gate() {
        current_.latched = current_.time_above_latch > cfg_.gate_latch_fraction * period_;
        trace_.gates.push_back(current_);
        gate_open_ = false;
    }

    void record_sample(bool force) {
        if (cfg_.sample_interval < 0.0) return;
        if (!force && cfg_.sample_interval > 0.0 && state_.t < next_sample_ - 1e-6 * dt_) return;
        trace_.t.push_back(state_.t);
        trace_.i_L.push_back(state_.i_L);
        trace_.v_c.push_back(state_.v_c);
        trace_.R_hs.push_back(r_hs_);
        trace_.T_max.push_back(profile_.max_T());
        trace_.source_v.push_back(cfg_.bias(state_.t));
        if (cfg_.sample_interval > 0.0) {
            next_sample_ = (std::floor(state_.t / cfg_.sample_interval + 1e-6) + 1.0) * cfg_.sample_interval;
        }
    }

    void build_clicks() {
        ClickTrain& c = trace_.clicks;
        if (cfg_.mode == Mode::GM) {
            c.mode = TrainMode::GM;
            c.bin_width = period_;
            c.bins.reserve(trace_.gates.size());
            std::vector<double> phases;
            for (const auto& g : trace_.gates) {
                c.bins.push_back(g.latched ? 1 : 0);
                phases.push_back(g.latched ? g.latch_onset - static_cast<double>(g.index) * period_ : -1.0);
            }
            c.phase_times = std::move(phases);
        } else {
            c.mode = TrainMode::FM;
            c.bin_width = cfg_.fm_bin_width;
            const auto n = static_cast<std::size_t>(std::floor(cfg_.duration / cfg_.fm_bin_width + 1e-9));
            c.bins.assign(n, 0);
            for (double tc : trace_.click_times) {
                const auto k = static_cast<std::size_t>(std::floor(tc / cfg_.fm_bin_width));
                if (k < n) c.bins[k] = 1;
            }
        }
    }

    SimConfig cfg_;
    thermal::ThermalProfile profile_;
    circuit::CircuitState state_;
    std::vector<double> scratch_;
    std::vector<PhotonEvent> events_;
    std::size_t next_event_ = 0;
    std::mt19937_64 rng_;
    double dt_ = 0.0;
    double period_ = 0.0;
    double r_hs_ = 0.0;
    double window_max_rhs_ = 0.0;
    SimTrace trace_;

    std::size_t n_gates_ = 0;
    GateRecord current_;
    bool gate_open_ = false;
    double gate_start_ = 0.0;
    double gate_end_ = 0.0;
    bool saw_reset_since_peak_ = true;
    bool was_above_ = false;
    double above_since_ = 0.0;
    double next_sample_ = 0.0;
};

inline SimTrace simulate(const SimConfig& cfg) { return Simulator(cfg).run(); }

/// Poisson photon arrivals at `rate` over [0, duration), uniformly spread
/// along the wire.
inline std::vector<PhotonEvent> poisson_events(double rate, double duration, double length, std::uint64_t seed) {
    if (!(rate >= 0.0)) throw DomainError("photon rate must be >= 0");
    std::vector<PhotonEvent> out;
    if (rate == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> gap(rate);
    std::uniform_real_distribution<double> pos(0.0, length);
    for (double t = gap(rng); t < duration; t += gap(rng)) out.push_back({t, pos(rng)});
    return out;
}

}  // namespace snspd::engine

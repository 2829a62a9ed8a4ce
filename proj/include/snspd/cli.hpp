#pragma once

// Command-line front end. run() parses arguments, executes one subcommand,
// writes its CSVs plus manifest.json into the output directory and maps
// failures to exit codes: 0 success, 2 configuration error, 3 numerical
// failure (1 for anything unexpected).

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "snspd/circuit.hpp"
#include "snspd/clickstats.hpp"
#include "snspd/clicktrain.hpp"
#include "snspd/config.hpp"
#include "snspd/csv.hpp"
#include "snspd/engine.hpp"
#include "snspd/errors.hpp"
#include "snspd/experiments.hpp"
#include "snspd/rfcal.hpp"
#include "snspd/sweep.hpp"
#include "snspd/touchstone.hpp"
#include "snspd/twoport.hpp"

namespace snspd::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

inline std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Output files of one run, kept in memory until the run succeeds.
struct Outputs {
    std::vector<std::pair<std::string, std::string>> files;  // name, contents

    std::ostringstream& open(const std::string& name) {
        streams_.emplace_back(name, std::make_unique<std::ostringstream>());
        return *streams_.back().second;
    }
    void close_all() {
        for (auto& [name, os] : streams_) files.emplace_back(name, os->str());
        streams_.clear();
    }

private:
    std::vector<std::pair<std::string, std::unique_ptr<std::ostringstream>>> streams_;
};

struct Context {
    config::Settings s;
    std::size_t workers = 1;
    bool verbose = false;
    std::ostream* log = &std::cerr;

    void note(const std::string& msg) const {
        if (verbose) *log << msg << '\n';
    }
};

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    if (n == 0) throw ConfigError("grid needs at least one point");
    if (n == 1) return {a};
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

/// Engine configuration for the configured mode, bias and photon events.
inline engine::SimConfig build_sim(const config::Settings& s) {
    engine::SimConfig cfg = s.sim;
    cfg.seed = s.seed;
    if (s.damping == "critical") cfg.circuit.R_p = circuit::critically_damped_rp(cfg.circuit.L_k, cfg.circuit.C_p);
    const double Ic = cfg.thermal.I_c0;
    if (s.mode == "GM") {
        cfg.mode = engine::Mode::GM;
        cfg.bias = engine::gated_bias(cfg.circuit, s.frequency, s.i_min, s.i_max_frac * Ic);
    } else {
        cfg.mode = engine::Mode::FM;
        cfg.circuit = circuit::free_running(cfg.circuit);
        cfg.bias = circuit::dc_drive(cfg.circuit, s.i_bias_frac * Ic);
    }
    cfg.events.clear();
    for (double t : s.photon_times) cfg.events.push_back({t, s.photon_position});
    if (s.photon_rate > 0.0) {
        // Photon arrivals use a stream separate from the dark counts.
        const auto extra = engine::poisson_events(s.photon_rate, cfg.duration, cfg.geom.length, s.seed + 0x5bd1e995ULL);
        cfg.events.insert(cfg.events.end(), extra.begin(), extra.end());
    }
    std::stable_sort(cfg.events.begin(), cfg.events.end(),
                     [](const auto& a, const auto& b) { return a.time < b.time; });
    if (s.absorption == "qe") {
        cfg.absorption = s.qe;
    } else {
        cfg.absorption.reset();
    }
    return cfg;
}

inline rfcal::Netlist parse_netlist(const std::string& text, const circuit::CircuitParams& p, double R_b) {
    if (config::trim(text).empty()) return rfcal::default_netlist(p, R_b);
    using K = rfcal::NetElement::Kind;
    static const std::map<std::string, std::pair<K, config::Dim>> kinds = {
        {"SeriesR", {K::SeriesR, config::Dim::Resistance}},   {"SeriesL", {K::SeriesL, config::Dim::Inductance}},
        {"SeriesC", {K::SeriesC, config::Dim::Capacitance}},  {"ShuntR", {K::ShuntR, config::Dim::Resistance}},
        {"ShuntL", {K::ShuntL, config::Dim::Inductance}},     {"ShuntC", {K::ShuntC, config::Dim::Capacitance}}};
    rfcal::Netlist net;
    std::stringstream items(text);
    std::string item;
    while (std::getline(items, item, ';')) {
        std::istringstream is{std::string(config::trim(item))};
        std::string kind, value;
        is >> kind;
        std::getline(is, value);
        if (kind.empty()) continue;
        if (kind == "short") {
            net.termination = rfcal::Termination::Short;
        } else if (kind == "open") {
            net.termination = rfcal::Termination::Open;
        } else if (kind == "load") {
            net.termination = rfcal::Termination::Load;
            net.load_ohms = config::parse_quantity(value, config::Dim::Resistance, "netlist load");
        } else {
            const auto it = kinds.find(kind);
            if (it == kinds.end()) throw ConfigError("netlist: unknown element '" + kind + "'");
            net.elements.push_back({it->second.first, config::parse_quantity(value, it->second.second, "netlist " + kind)});
        }
    }
    if (net.elements.empty()) throw ConfigError("netlist: no elements");
    return net;
}

namespace detail {

using csv::format_number;

inline void cmd_simulate(const Context& ctx, Outputs& out) {
    const engine::SimConfig cfg = build_sim(ctx.s);
    ctx.note("simulate: " + std::string(ctx.s.mode) + ", " + std::to_string(cfg.events.size()) + " photon events");
    const engine::SimTrace tr = engine::simulate(cfg);
    {
        csv::Writer w(out.open("trace.csv"), {"t", "i_L", "v_c", "R_hs", "T_max", "source_v"});
        for (std::size_t i = 0; i < tr.t.size(); ++i) {
            w.row({tr.t[i], tr.i_L[i], tr.v_c[i], tr.R_hs[i], tr.T_max[i], tr.source_v[i]});
        }
    }
    if (cfg.mode == engine::Mode::GM) {
        csv::Writer w(out.open("gates.csv"), {"index", "peak_current", "latched", "max_T_center", "latch_onset"});
        for (const auto& g : tr.gates) {
            w.row({static_cast<double>(g.index), g.peak_current, g.latched ? 1.0 : 0.0, g.max_T_center, g.latch_onset});
        }
    }
    write_clicktrain_csv(out.open("clicks.csv"), tr.clicks);
    csv::Writer w(out.open("summary.csv"), {"injected", "clicks", "persistent_latch_time"});
    w.row({static_cast<double>(tr.injected.size()), static_cast<double>(tr.clicks.count()),
           tr.fm_latch_time.value_or(-1.0)});
}

inline std::vector<double> fig4c_frequencies(const config::Settings& s) {
    if (!(s.sweep_step > 0.0) || !(s.sweep_start > 0.0) || s.sweep_stop < s.sweep_start) {
        throw ConfigError("fig4c: need 0 < sweep_start <= sweep_stop and sweep_step > 0");
    }
    const auto n = static_cast<std::size_t>(std::floor((s.sweep_stop - s.sweep_start) / s.sweep_step + 1e-9)) + 1;
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) f[i] = s.sweep_start + static_cast<double>(i) * s.sweep_step;
    return f;
}

inline void cmd_fig4c(const Context& ctx, Outputs& out) {
    if (ctx.s.mode != "GM") throw ConfigError("fig4c needs mode = GM");
    if (ctx.s.post_gates < 1) throw ConfigError("post_gates must be >= 1");
    const auto freqs = fig4c_frequencies(ctx.s);
    const auto n = static_cast<std::size_t>(ctx.s.post_gates);
    ctx.note("fig4c: " + std::to_string(freqs.size()) + " frequencies");
    const auto rows = parallel_map(freqs.size(), ctx.workers, [&](std::size_t i) {
        config::Settings s = ctx.s;
        s.frequency = freqs[i];
        return engine::detection_response(build_sim(s), n);
    });
    std::vector<std::string> head{"freq_MHz"}, detail_head{"freq_MHz", "detected", "quiescent_peak", "max_T_next"};
    for (std::size_t k = 1; k <= n; ++k) {
        head.push_back("gate" + std::to_string(k) + "_peak");
        detail_head.push_back("gate" + std::to_string(k) + "_relatched");
    }
    csv::Writer w(out.open("fig4c.csv"), head);
    csv::Writer d(out.open("fig4c_detail.csv"), detail_head);
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        std::vector<double> row{freqs[i] / 1e6};
        row.insert(row.end(), rows[i].peaks.begin(), rows[i].peaks.end());
        w.row(row);
        std::vector<double> drow{freqs[i] / 1e6, rows[i].detected ? 1.0 : 0.0, rows[i].quiescent_peak,
                                 rows[i].max_T_next};
        for (bool b : rows[i].relatched) drow.push_back(b ? 1.0 : 0.0);
        d.row(drow);
    }
}

inline void cmd_mcr_sweep(const Context& ctx, Outputs& out) {
    if (ctx.s.L_values.empty()) throw ConfigError("mcr-sweep: L_values is empty");
    engine::SimConfig base = build_sim(ctx.s);
    base.mode = engine::Mode::GM;
    engine::MaxFrequencyOptions opt;
    opt.f_start = ctx.s.mcr_f_start;
    opt.resolution = ctx.s.mcr_resolution;
    opt.post_gates = static_cast<std::size_t>(std::max(1L, ctx.s.post_gates));
    opt.i_min = ctx.s.i_min;
    opt.i_max_frac = ctx.s.i_max_frac;
    const auto& L = ctx.s.L_values;
    struct Row { double R_p, f_max, T_next; };
    const auto rows = parallel_map(L.size(), ctx.workers, [&](std::size_t i) {
        ctx.note("mcr-sweep: L_k = " + format_number(L[i]));
        const double f = engine::find_max_gating_frequency(L[i], ctx.s.mcr_C_p, base.thermal, base.geom, base, opt);
        engine::SimConfig at = base;
        at.circuit.L_k = L[i];
        at.circuit.C_p = ctx.s.mcr_C_p;
        at.circuit.R_p = circuit::critically_damped_rp(L[i], ctx.s.mcr_C_p);
        at.bias = engine::gated_bias(at.circuit, f, opt.i_min, opt.i_max_frac * at.thermal.I_c0);
        return Row{at.circuit.R_p, f, engine::max_temperature_next_gate(at)};
    });
    csv::Writer w(out.open("mcr.csv"), {"L_k_nH", "R_p", "max_freq_MHz", "max_T_next_norm"});
    for (std::size_t i = 0; i < L.size(); ++i) w.row({L[i] * 1e9, rows[i].R_p, rows[i].f_max / 1e6, rows[i].T_next});
}

inline void cmd_tau_e_min(const Context& ctx, Outputs& out) {
    engine::SimConfig base = build_sim(ctx.s);
    engine::ReturnCurrentOptions opt;
    opt.start_frac = ctx.s.start_frac;
    opt.step_frac = ctx.s.step_frac;
    opt.coarse_step_frac = ctx.s.coarse_step_frac;
    opt.settle_multiple = ctx.s.settle_multiple;
    ctx.note("tau-e-min: " + std::to_string(ctx.s.R_grid.size()) + " loads");
    const auto r = engine::find_tau_e_min(base, ctx.s.R_grid, opt, ctx.workers);
    const double Ic = base.thermal.I_c0;
    csv::Writer w(out.open("return_current.csv"), {"R_L", "return_current_frac", "refinement"});
    for (const auto& row : r.rows) w.row({row.R_L, row.return_current / Ic, row.refinement ? 1.0 : 0.0});
    csv::Writer t(out.open("tau_e_min.csv"), {"plateau_frac", "R_star", "tau_e_min_ns"});
    t.row({r.plateau / Ic, r.R_star, r.tau_e_min * 1e9});
}

inline clickstats::SourceModel source_model(const config::Settings& s) {
    clickstats::SourceModel m;
    m.kind = s.source == "pulsed" ? clickstats::SourceKind::Pulsed : clickstats::SourceKind::CW;
    m.mean_photons_per_gate = s.mu;
    if (s.pulse_divisor < 1) throw ConfigError("pulse_divisor must be >= 1");
    m.pulse_divisor = m.kind == clickstats::SourceKind::Pulsed ? static_cast<std::size_t>(s.pulse_divisor) : 1;
    m.qe_curve = s.qe;
    m.i_min_frac = s.i_min / s.sim.thermal.I_c0;
    m.i_max_frac = s.i_max_frac;
    m.dark_prob_per_gate = s.dark_prob;
    m.afterpulse_prob = s.afterpulse_prob;
    if (!(s.frequency > 0.0)) throw ConfigError("frequency must be > 0");
    m.gate_period = 1.0 / s.frequency;
    return m;
}

inline void cmd_stats(const Context& ctx, Outputs& out) {
    const auto& s = ctx.s;
    if (s.n_gates < 2) throw ConfigError("n_gates must be >= 2");
    if (s.max_lag < 1 || s.max_lag >= s.n_gates) throw ConfigError("max_lag must lie in [1, n_gates)");
    if (s.hist_bins < 1) throw ConfigError("hist_bins must be >= 1");
    const auto model = source_model(s);
    const auto n = static_cast<std::size_t>(s.n_gates);
    const ClickTrain lit = clickstats::generate_clicks(model, n, s.seed);
    clickstats::SourceModel dark_model = model;
    dark_model.mean_photons_per_gate = 0.0;
    dark_model.afterpulse_prob = 0.0;
    const ClickTrain dark = clickstats::generate_clicks(dark_model, n, s.seed + 1);
    ctx.note("stats: " + std::to_string(lit.count()) + " clicks in " + std::to_string(n) + " gates");
    write_clicktrain_csv(out.open("clicks.csv"), lit);

    auto& est = out.open("estimates.csv");
    est << "quantity,value,lo,hi\n";
    auto put = [&](const char* name, const clickstats::Estimate& e) {
        est << name << ',' << format_number(e.value) << ',' << format_number(e.lo) << ',' << format_number(e.hi) << '\n';
    };
    if (s.mu > 0.0) put("qe", clickstats::estimate_qe_dcr(lit, dark, s.mu, s.frequency).qe);
    put("dcr_hz", clickstats::estimate_dcr(dark, s.frequency));
    if (lit.count() == 0) return;

    const auto gamma = clickstats::autocorrelation(lit, static_cast<std::size_t>(s.max_lag));
    {
        csv::Writer w(out.open("gamma.csv"), {"lag", "gamma"});
        for (std::size_t k = 0; k < gamma.size(); ++k) w.row({static_cast<double>(k + 1), gamma[k]});
    }
    const auto h = clickstats::gate_phase_histogram(lit, static_cast<std::size_t>(s.hist_bins));
    {
        csv::Writer w(out.open("phase_histogram.csv"), {"phase_s", "value"});
        for (std::size_t k = 0; k < h.values.size(); ++k) w.row({h.centers[k], h.values[k]});
    }
    const double pw = clickstats::plateau_width(h);
    put("plateau_width_s", {pw, pw, pw});
    if (model.kind == clickstats::SourceKind::Pulsed && model.pulse_divisor >= 4 &&
        static_cast<std::size_t>(s.max_lag) >= model.pulse_divisor) {
        const auto ap = clickstats::afterpulse_from_train(lit, model.pulse_divisor);
        put("afterpulse_prob", {ap.probability, ap.probability, ap.probability});
    }
}

inline void cmd_calibrate(const Context& ctx, Outputs& out) {
    const auto& s = ctx.s;
    rfcal::TwoPortNetwork chain;
    std::vector<double> grid;
    if (!s.chain_file.empty()) {
        try {
            chain = rfcal::parse_touchstone(read_file(s.chain_file));
        } catch (const ParseError& e) {
            throw ConfigError(s.chain_file + ": " + e.what());
        }
        for (double f : chain.freqs) {
            if (f >= s.cal_f_start && f <= s.cal_f_stop) grid.push_back(f);
        }
        if (grid.empty()) throw ConfigError("chain file has no points in [cal_f_start, cal_f_stop]");
    } else {
        if (s.cal_points < 1) throw ConfigError("cal_points must be >= 1");
        grid = linspace(s.cal_f_start, s.cal_f_stop, static_cast<std::size_t>(s.cal_points));
    }
    const auto& load = s.sim.circuit;
    csv::Writer w(out.open("transconductance.csv"), {"freq_MHz", "g_re", "g_im", "g_mag", "g_phase_rad"});
    for (double f : grid) {
        const auto g = rfcal::transconductance(chain, load, f);
        w.row({f / 1e6, g.real(), g.imag(), std::abs(g), std::arg(g)});
    }
    // A measured chain has no DC point; its lowest frequency stands in.
    const double f_dc = chain.size() > 0 ? chain.freqs.front() : 0.0;
    const double g_dc = rfcal::transconductance(chain, load, f_dc).real();
    const auto g_f = rfcal::transconductance(chain, load, s.frequency);
    const auto drive = circuit::solve_drive(g_dc, g_f, s.frequency, s.i_min, s.i_max_frac * s.sim.thermal.I_c0);
    csv::Writer d(out.open("drive.csv"), {"freq_MHz", "g_dc", "g_mag", "offset_V", "amplitude_V", "phase_rad"});
    d.row({s.frequency / 1e6, g_dc, std::abs(g_f), drive.offset, drive.amplitude, drive.phase});
}

inline void cmd_validate_model(const Context& ctx, Outputs& out) {
    const auto& s = ctx.s;
    const rfcal::Netlist net = parse_netlist(s.netlist, s.sim.circuit, s.R_b_validation);
    rfcal::TwoPortNetwork ref;
    if (!s.reference_file.empty()) {
        try {
            ref = rfcal::parse_touchstone(read_file(s.reference_file));
        } catch (const ParseError& e) {
            throw ConfigError(s.reference_file + ": " + e.what());
        }
    } else {
        if (s.validation_points < 2) throw ConfigError("validation_points must be >= 2");
        const auto freqs = linspace(s.cutoff / static_cast<double>(s.validation_points - 1), s.cutoff,
                                    static_cast<std::size_t>(s.validation_points));
        const auto text = rfcal::serialize_touchstone(
            rfcal::from_network(rfcal::reflection_network(freqs, rfcal::input_reflection(net, freqs)),
                                rfcal::FreqUnit::MHz, rfcal::DataFormat::RI));
        out.open("reference_s11.s2p") << text;
        ref = rfcal::parse_touchstone(text);
    }
    const auto rep = rfcal::compare_reflection(net, ref, s.cutoff);
    csv::Writer w(out.open("reflection.csv"), {"freq_MHz", "model_mag", "ref_mag", "deviation"});
    for (const auto& r : rep.rows) w.row({r.freq / 1e6, r.model_mag, r.ref_mag, r.deviation});
    csv::Writer v(out.open("validation.csv"), {"points", "rms_deviation"});
    v.row({static_cast<double>(rep.rows.size()), rep.rms});
}

inline const std::map<std::string, void (*)(const Context&, Outputs&)>& commands() {
    static const std::map<std::string, void (*)(const Context&, Outputs&)> m = {
        {"simulate", cmd_simulate},   {"fig4c", cmd_fig4c},         {"mcr-sweep", cmd_mcr_sweep},
        {"tau-e-min", cmd_tau_e_min}, {"stats", cmd_stats},         {"calibrate", cmd_calibrate},
        {"validate-model", cmd_validate_model}};
    return m;
}

inline int classify(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
        dynamic_cast<const DomainError*>(&e) || dynamic_cast<const DegenerateTopologyError*>(&e)) {
        return kExitConfig;
    }
    if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const SingularError*>(&e)) return kExitNumerical;
    return 1;
}

}  // namespace detail

/// Executes `command` with the given config text and writes outputs plus
/// manifest.json to out_dir. Returns the manifest.
inline nlohmann::json execute(const std::string& command, const std::string& config_text,
                              const std::string& config_path, std::optional<std::uint64_t> seed,
                              const fs::path& out_dir, std::size_t workers, bool verbose, std::ostream& log) {
    const auto it = detail::commands().find(command);
    if (it == detail::commands().end()) throw ConfigError("unknown subcommand " + command);
    Context ctx;
    ctx.s = config::parse(config_text);
    if (seed) ctx.s.seed = *seed;
    ctx.workers = std::max<std::size_t>(1, workers);
    ctx.verbose = verbose;
    ctx.log = &log;
    Outputs out;
    it->second(ctx, out);
    out.close_all();

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create " + out_dir.string() + ": " + ec.message());
    nlohmann::json files = nlohmann::json::array();
    for (const auto& [name, contents] : out.files) {
        std::ofstream f(out_dir / name, std::ios::binary);
        f << contents;
        if (!f) throw ConfigError("cannot write " + (out_dir / name).string());
        files.push_back({{"file", name}, {"sha256", sha256_hex(contents)}, {"bytes", contents.size()}});
    }
    nlohmann::json manifest = {{"subcommand", command},     {"config_path", config_path},
                               {"config_text", config_text}, {"seed", ctx.s.seed},
                               {"outputs", files}};
    std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << '\n';
    return manifest;
}

/// Re-executes a manifest into out_dir and compares output checksums.
/// Returns the names of files whose contents differ or are missing.
inline std::vector<std::string> rerun(const fs::path& manifest_path, const fs::path& out_dir, std::size_t workers,
                                      bool verbose, std::ostream& log) {
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(read_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(manifest_path.string() + ": " + e.what());
    }
    if (!m.contains("subcommand") || !m.contains("config_text") || !m.contains("seed") || !m.contains("outputs")) {
        throw ConfigError(manifest_path.string() + ": incomplete manifest");
    }
    const auto fresh = execute(m["subcommand"].get<std::string>(), m["config_text"].get<std::string>(),
                               m.value("config_path", ""), m["seed"].get<std::uint64_t>(), out_dir, workers, verbose,
                               log);
    std::map<std::string, std::string> now;
    for (const auto& f : fresh["outputs"]) now[f["file"].get<std::string>()] = f["sha256"].get<std::string>();
    std::vector<std::string> diff;
    for (const auto& f : m["outputs"]) {
        const auto name = f["file"].get<std::string>();
        const auto it = now.find(name);
        if (it == now.end() || it->second != f["sha256"].get<std::string>()) diff.push_back(name);
        if (it != now.end()) now.erase(it);
    }
    for (const auto& [name, _] : now) diff.push_back(name);
    return diff;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Electro-thermal simulator for gated and free-running superconducting nanowire detectors"};
    app.footer("\n" + config::key_help());
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir = "out", manifest_path;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    bool verbose = false;
    app.add_option("--config", config_path, "config file (key = value lines)");
    app.add_option("--out-dir", out_dir, "output directory")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", seed, "random seed, overrides the config");
    app.add_option("--workers", workers, "parallel workers for sweeps")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_flag("--verbose", verbose, "progress on stderr");

    std::map<std::string, CLI::App*> subs;
    const std::map<std::string, std::string> help = {
        {"simulate", "run the coupled simulation and write the trace, gates and click train"},
        {"fig4c", "peak current of the gates after a detection versus gate frequency"},
        {"mcr-sweep", "maximum gating frequency versus kinetic inductance at critical damping"},
        {"tau-e-min", "free-running return current versus load and the minimum electrical time constant"},
        {"stats", "synthetic gated click train with autocorrelation, QE, DCR and phase histogram"},
        {"calibrate", "transconductance through a bias chain and the drive for the configured gate"},
        {"validate-model", "compare the device model's reflection with a reference"}};
    for (const auto& [name, text] : help) subs[name] = app.add_subcommand(name, text);
    auto* rerun_cmd = app.add_subcommand("rerun", "re-execute a manifest and verify identical outputs");
    rerun_cmd->add_option("--manifest", manifest_path, "manifest.json of an earlier run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (rerun_cmd->parsed()) {
            const auto diff = rerun(manifest_path, out_dir, workers, verbose, err);
            if (!diff.empty()) {
                err << "outputs differ from the manifest:";
                for (const auto& d : diff) err << ' ' << d;
                err << '\n';
                return kExitNumerical;
            }
            out << "all outputs match " << manifest_path << '\n';
            return kExitOk;
        }
        std::string command;
        for (const auto& [name, sub] : subs) {
            if (sub->parsed()) command = name;
        }
        const std::string text = config_path.empty() ? std::string() : read_file(config_path);
        std::optional<std::uint64_t> s;
        if (seed_opt->count() > 0) s = seed;
        const auto manifest = execute(command, text, config_path, s, out_dir, workers, verbose, err);
        for (const auto& f : manifest["outputs"]) out << (fs::path(out_dir) / f["file"].get<std::string>()).string() << '\n';
        return kExitOk;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return detail::classify(e);
    }
}

}  // namespace snspd::cli

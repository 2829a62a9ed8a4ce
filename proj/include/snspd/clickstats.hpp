#pragma once

// Click-train generation and the counting-statistics pipeline.
//
// Gamma is normalised by mean(x)^2, so independent bins give 1 at every lag.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "snspd/clicktrain.hpp"
#include "snspd/detection.hpp"
#include "snspd/errors.hpp"

namespace snspd::clickstats {

enum class SourceKind { CW, Pulsed };

struct SourceModel {
    SourceKind kind = SourceKind::CW;
    double mean_photons_per_gate = 0.1;
    std::size_t pulse_divisor = 1;  // pulsed: photons in every divisor-th gate
    QeCurve qe_curve;               // detection probability vs i / I_c0
    double i_min_frac = -0.1;       // gate current extremes, in units of I_c0
    double i_max_frac = 0.9;
    double dark_prob_per_gate = 0.0;
    double afterpulse_prob = 0.0;
    double gate_period = 1.0 / 625e6;  // s
    // Photons needed per click. 1 is the single-photon detector; 2 gives the
    // quadratic toy response used to exercise the linearity check.
    int photon_order = 1;

    void validate() const {
        auto prob = [](double p, const char* name) {
            if (!(p >= 0.0 && p <= 1.0)) throw DomainError(std::string(name) + " must lie in [0, 1]");
        };
        prob(dark_prob_per_gate, "dark_prob_per_gate");
        prob(afterpulse_prob, "afterpulse_prob");
        if (!(mean_photons_per_gate >= 0.0)) throw DomainError("mean_photons_per_gate must be >= 0");
        if (pulse_divisor < 1) throw DomainError("pulse_divisor must be >= 1");
        if (!(gate_period > 0.0)) throw DomainError("gate_period must be > 0");
        if (!(i_min_frac < i_max_frac)) throw DomainError("i_min_frac must be < i_max_frac");
        if (photon_order < 1) throw DomainError("photon_order must be >= 1");
        qe_curve.validate();
    }

    /// Gate current at intra-gate phase u in [0, 1): minimum at the edges,
    /// maximum at the centre.
    double current_at(double u) const {
        const double mid = 0.5 * (i_max_frac + i_min_frac);
        const double amp = 0.5 * (i_max_frac - i_min_frac);
        return mid - amp * std::cos(2.0 * std::numbers::pi * u);
    }

    /// Detection probability per photon. Pulsed light is locked to the gate
    /// maximum; CW light samples the whole gate.
    double effective_qe() const {
        if (kind == SourceKind::Pulsed) return qe_curve(i_max_frac);
        constexpr int n = 1000;
        double sum = 0.0;
        for (int k = 0; k < n; ++k) sum += qe_curve(current_at((k + 0.5) / n));
        return sum / n;
    }

    bool illuminated(std::size_t gate) const {
        return kind == SourceKind::CW || gate % pulse_divisor == 0;
    }

    double photon_click_prob() const {
        const double x = mean_photons_per_gate * effective_qe();
        return 1.0 - std::exp(-std::pow(x, photon_order));
    }
};

namespace detail {

/// Inverse-CDF sampler of the detection phase, density proportional to
/// QE(i(u)) over the gate.
class PhaseSampler {
public:
    explicit PhaseSampler(const SourceModel& m, int n = 2048) : cdf_(static_cast<std::size_t>(n) + 1, 0.0) {
        for (int k = 0; k < n; ++k) {
            cdf_[static_cast<std::size_t>(k) + 1] =
                cdf_[static_cast<std::size_t>(k)] + m.qe_curve(m.current_at((k + 0.5) / n));
        }
        total_ = cdf_.back();
    }

    double operator()(double u) const {
        const std::size_t n = cdf_.size() - 1;
        if (total_ <= 0.0) return u;
        const double target = u * total_;
        const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
        const std::size_t k = std::min<std::size_t>(n - 1, static_cast<std::size_t>(it - cdf_.begin()) - 1);
        const double w = cdf_[k + 1] - cdf_[k];
        const double frac = w > 0.0 ? (target - cdf_[k]) / w : 0.5;
        return (static_cast<double>(k) + frac) / static_cast<double>(n);
    }

private:
    std::vector<double> cdf_;
    double total_ = 0.0;
};

}  // namespace detail

/// Gated click train. Per gate: photon click with probability
/// 1 - exp(-(mu QE)^order) when illuminated, OR a dark click, OR an
/// afterpulse if the previous gate clicked. Phase times are drawn from the
/// QE-weighted gate profile (pulsed photon clicks sit at the maximum).
inline ClickTrain generate_clicks(const SourceModel& model, std::size_t n_gates, std::uint64_t seed) {
    model.validate();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double p_photon = model.photon_click_prob();
    const detail::PhaseSampler phase(model);

    ClickTrain train;
    train.mode = TrainMode::GM;
    train.bin_width = model.gate_period;
    train.bins.assign(n_gates, 0);
    std::vector<double> phases(n_gates, -1.0);
    bool prev = false;
    for (std::size_t g = 0; g < n_gates; ++g) {
        const double u_photon = uni(rng), u_dark = uni(rng), u_ap = uni(rng);
        const bool photon = model.illuminated(g) && u_photon < p_photon;
        const bool dark = u_dark < model.dark_prob_per_gate;
        const bool ap = prev && u_ap < model.afterpulse_prob;
        const bool click = photon || dark || ap;
        if (click) {
            const double u_phase = uni(rng);
            const double ph = photon && model.kind == SourceKind::Pulsed ? 0.5 : phase(u_phase);
            phases[g] = ph * model.gate_period;
            train.bins[g] = 1;
        }
        prev = click;
    }
    train.phase_times = std::move(phases);
    return train;
}

/// Gamma_norm(tau) = mean(x_t x_{t+tau}) / mean(x)^2 for tau = 1..max_lag;
/// element k holds lag k + 1.
inline std::vector<double> autocorrelation(const ClickTrain& train, std::size_t max_lag) {
    const std::size_t n = train.size();
    if (max_lag == 0 || max_lag >= n) throw DomainError("max_lag must lie in [1, train length)");
    std::vector<std::size_t> ones;
    for (std::size_t i = 0; i < n; ++i) {
        if (train.bins[i]) ones.push_back(i);
    }
    if (ones.empty()) throw DomainError("autocorrelation of an all-zero train is undefined");
    const double mean = static_cast<double>(ones.size()) / static_cast<double>(n);
    std::vector<std::size_t> pairs(max_lag, 0);
    for (std::size_t i : ones) {
        const std::size_t last = std::min(n - 1, i + max_lag);
        for (std::size_t j = i + 1; j <= last; ++j) pairs[j - i - 1] += train.bins[j];
    }
    std::vector<double> gamma(max_lag);
    for (std::size_t k = 0; k < max_lag; ++k) {
        const double denom = static_cast<double>(n - (k + 1));
        gamma[k] = static_cast<double>(pairs[k]) / denom / (mean * mean);
    }
    return gamma;
}

/// First lag (1-based) at which gamma reaches the band [1 - band, 1 + band]
/// from below; nullopt if it never does.
inline std::optional<std::size_t> band_entry_lag(const std::vector<double>& gamma, double band = 0.1) {
    for (std::size_t k = 0; k < gamma.size(); ++k) {
        if (gamma[k] >= 1.0 - band) return k + 1;
    }
    return std::nullopt;
}

/// Renewal-model gamma after a click at tau = 0: the detector current
/// recovers as I_b (1 - exp(-tau / tau_e)) and gamma is the QE ratio.
inline double renewal_gamma(const QeCurve& qe, double bias_frac, double tau_e, double tau) {
    const double q0 = qe(bias_frac);
    if (!(q0 > 0.0)) throw DomainError("renewal oracle needs QE(I_b) > 0");
    return qe(bias_frac * (1.0 - std::exp(-tau / tau_e))) / q0;
}

struct RecoveryFit {
    double shift = 0.0;      // lags; positive means the data recovers later
    double amplitude = 1.0;
    double rms = 0.0;
    std::size_t first_lag = 0;
    std::size_t last_lag = 0;
};

/// Least-squares alignment of a measured gamma (element k is lag k+1) to
/// model(lag) on the rising edge, lags where the model lies in [floor, 1-band).
/// A free scale absorbs the dead-time inflation of the mean(x)^2 normaliser at
/// finite rate; the shift is scanned on a fixed grid so the result is
/// deterministic.
inline RecoveryFit fit_recovery(const std::vector<double>& gamma,
                                const std::function<double(double)>& model, double band = 0.1,
                                double floor = 0.02, double max_shift = 5.0,
                                double resolution = 0.01) {
    RecoveryFit fit;
    for (std::size_t k = 1; k <= gamma.size(); ++k) {
        const double m = model(static_cast<double>(k));
        if (m >= 1.0 - band) break;
        if (m >= floor) {
            if (fit.first_lag == 0) fit.first_lag = k;
            fit.last_lag = k;
        }
    }
    if (fit.first_lag == 0 || fit.last_lag < fit.first_lag + 2) {
        throw DomainError("model has fewer than 3 lags on its rising edge");
    }
    const auto steps = static_cast<long>(std::ceil(max_shift / resolution));
    double best = std::numeric_limits<double>::infinity();
    for (long j = -steps; j <= steps; ++j) {
        const double s = static_cast<double>(j) * resolution;
        double fy = 0.0, ff = 0.0;
        for (std::size_t k = fit.first_lag; k <= fit.last_lag; ++k) {
            const double f = model(static_cast<double>(k) - s);
            fy += f * gamma[k - 1];
            ff += f * f;
        }
        if (!(ff > 0.0)) continue;
        const double a = fy / ff;
        double sse = 0.0;
        for (std::size_t k = fit.first_lag; k <= fit.last_lag; ++k) {
            const double r = gamma[k - 1] - a * model(static_cast<double>(k) - s);
            sse += r * r;
        }
        if (sse < best) {
            best = sse;
            fit.shift = s;
            fit.amplitude = a;
        }
    }
    fit.rms = std::sqrt(best / static_cast<double>(fit.last_lag - fit.first_lag + 1));
    return fit;
}

/// Band-entry lag of model(lag - shift), searched up to max_lag.
inline std::optional<std::size_t> shifted_entry_lag(const std::function<double(double)>& model,
                                                    double shift, std::size_t max_lag,
                                                    double band = 0.1) {
    for (std::size_t k = 1; k <= max_lag; ++k) {
        if (model(static_cast<double>(k) - shift) >= 1.0 - band) return k;
    }
    return std::nullopt;
}

struct PhaseHistogram {
    std::vector<double> centers;  // s
    std::vector<double> values;   // normalised to peak 1
    double bin_width = 0.0;       // s
};

inline PhaseHistogram gate_phase_histogram(const ClickTrain& train, std::size_t n_bins) {
    if (train.mode != TrainMode::GM) throw DomainError("phase histogram needs a gated train");
    if (!train.phase_times) throw DomainError("phase histogram needs phase_times");
    if (n_bins == 0) throw DomainError("n_bins must be > 0");
    if (!(train.bin_width > 0.0)) throw DomainError("gate period must be > 0");
    PhaseHistogram h;
    h.bin_width = train.bin_width / static_cast<double>(n_bins);
    h.values.assign(n_bins, 0.0);
    for (std::size_t i = 0; i < train.size(); ++i) {
        const double ph = (*train.phase_times)[i];
        if (!train.bins[i] || ph < 0.0) continue;
        auto k = static_cast<std::size_t>(std::floor(ph / h.bin_width));
        h.values[std::min(k, n_bins - 1)] += 1.0;
    }
    const double peak = *std::max_element(h.values.begin(), h.values.end());
    if (peak > 0.0) {
        for (double& v : h.values) v /= peak;
    }
    for (std::size_t k = 0; k < n_bins; ++k) h.centers.push_back((static_cast<double>(k) + 0.5) * h.bin_width);
    return h;
}

/// Width of the contiguous run of bins around the peak that stay within
/// `drop` of it (0.05 = the top-5% plateau), in seconds.
inline double plateau_width(const PhaseHistogram& h, double drop = 0.05) {
    if (h.values.empty()) return 0.0;
    const auto peak_it = std::max_element(h.values.begin(), h.values.end());
    if (*peak_it <= 0.0) return 0.0;
    const double level = (1.0 - drop) * *peak_it;
    std::size_t lo = static_cast<std::size_t>(peak_it - h.values.begin());
    std::size_t hi = lo;
    while (lo > 0 && h.values[lo - 1] >= level) --lo;
    while (hi + 1 < h.values.size() && h.values[hi + 1] >= level) ++hi;
    return static_cast<double>(hi - lo + 1) * h.bin_width;
}

struct Estimate {
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;

    bool covers(double x) const { return lo <= x && x <= hi; }
};

/// Wilson score interval for k successes in n trials.
inline Estimate wilson_interval(std::size_t k, std::size_t n, double z = 1.959963984540054) {
    if (n == 0) throw DomainError("Wilson interval needs n > 0");
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(k) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    return {p, std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

/// Average QE from a gated train: the no-click probability exp(-mu QE)(1 - d)
/// is inverted, which reduces to (p - d) / mu when mu QE is small. The
/// interval maps the Wilson bounds of the click probability.
inline Estimate estimate_qe(const ClickTrain& train, double mu, double dark_prob = 0.0) {
    if (!(mu > 0.0)) throw DomainError("QE estimate needs mu > 0");
    if (!(dark_prob >= 0.0 && dark_prob < 1.0)) throw DomainError("dark probability must lie in [0, 1)");
    const Estimate p = wilson_interval(train.count(), train.size());
    auto invert = [&](double q) {
        const double surv = (1.0 - q) / (1.0 - dark_prob);
        if (surv <= 0.0) return std::numeric_limits<double>::infinity();
        return -std::log(std::min(1.0, surv)) / mu;
    };
    auto signed_invert = [&](double q) { return q < dark_prob ? (q - dark_prob) / mu : invert(q); };
    return {signed_invert(p.value), signed_invert(p.lo), signed_invert(p.hi)};
}

/// Dark count rate in Hz from a dark-only gated train: dark probability per
/// gate times the gate frequency, saturating at the gate frequency.
inline Estimate estimate_dcr(const ClickTrain& train, double gate_frequency) {
    if (!(gate_frequency > 0.0)) throw DomainError("gate frequency must be > 0");
    const Estimate p = wilson_interval(train.count(), train.size());
    return {p.value * gate_frequency, p.lo * gate_frequency, p.hi * gate_frequency};
}

struct QeDcr {
    Estimate qe;
    Estimate dcr;
    double dark_prob = 0.0;
};

/// QE from an illuminated train corrected by the dark probability measured
/// on a dark-only train of the same gating. The dark estimate is itself
/// uncertain; its Wilson half-widths, scaled by |dQE/dd| = 1 / (mu (1 - d)),
/// are added in quadrature to the QE interval.
inline QeDcr estimate_qe_dcr(const ClickTrain& lit, const ClickTrain& dark, double mu, double gate_frequency) {
    QeDcr r;
    r.dcr = estimate_dcr(dark, gate_frequency);
    r.dark_prob = r.dcr.value / gate_frequency;
    const Estimate q = estimate_qe(lit, mu, r.dark_prob);
    const double d = r.dark_prob;
    const double slope = 1.0 / (mu * (1.0 - d));
    const double d_up = (r.dcr.hi / gate_frequency - d) * slope;  // lowers QE
    const double d_dn = (d - r.dcr.lo / gate_frequency) * slope;  // raises QE
    r.qe.value = q.value;
    r.qe.lo = q.value - std::hypot(q.value - q.lo, d_up);
    r.qe.hi = q.value + std::hypot(q.hi - q.value, d_dn);
    return r;
}

struct AfterpulseEstimate {
    double probability = 0.0;
    double baseline = 0.0;       // flat gamma level between pulse lags
    bool baseline_flat = true;   // false when the baseline trend exceeds 3 sigma
    double trend_sigma = 0.0;    // trend / its standard error
};

/// Afterpulse probability from a pulsed-illumination gamma (element k is lag
/// k + 1, at least `divisor` lags). Lag divisor-1 pairs the same gate classes
/// as lag 1 without the one-gate memory, so the excess
///   cov = divisor * m^2 * (gamma(1) - gamma(divisor - 1))
/// equals p_s a (1 - d)(1 - p_s) for signal-gate click probability p_s,
/// dark probability d and afterpulse probability a.
inline AfterpulseEstimate afterpulse_probability(const std::vector<double>& gamma, std::size_t divisor,
                                                 double mean_click, double dark_prob) {
    if (divisor < 4) throw DomainError("afterpulse extraction needs a pulse divisor >= 4");
    if (gamma.size() < divisor) throw DomainError("gamma must extend to the pulse divisor");
    if (!(mean_click > 0.0)) throw DomainError("mean click probability must be > 0");
    const double D = static_cast<double>(divisor);
    const double p_s = std::clamp(D * mean_click - (D - 1.0) * dark_prob, 0.0, 1.0);
    AfterpulseEstimate r;
    const double denom = p_s * (1.0 - dark_prob) * (1.0 - p_s);
    if (denom <= 0.0) throw DomainError("signal click probability must lie strictly in (0, 1)");
    const double cov = D * mean_click * mean_click * (gamma[0] - gamma[divisor - 2]);
    r.probability = cov / denom;

    // Flatness of the inter-pulse baseline: least-squares trend over lags
    // 3..divisor-3, whose pair classes are all dark-dark or signal-dark.
    std::vector<double> xs, ys;
    for (std::size_t lag = 3; lag + 3 <= divisor; ++lag) {
        xs.push_back(static_cast<double>(lag));
        ys.push_back(gamma[lag - 1]);
    }
    double sum = 0.0;
    for (double y : ys) sum += y;
    r.baseline = ys.empty() ? gamma[1] : sum / static_cast<double>(ys.size());
    if (xs.size() >= 3) {
        const double n = static_cast<double>(xs.size());
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i];
            my += ys[i];
        }
        mx /= n;
        my /= n;
        double sxx = 0.0, sxy = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxx += (xs[i] - mx) * (xs[i] - mx);
            sxy += (xs[i] - mx) * (ys[i] - my);
        }
        const double slope = sxy / sxx;
        double sse = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double e = ys[i] - (my + slope * (xs[i] - mx));
            sse += e * e;
        }
        const double se = std::sqrt(sse / (n - 2.0) / sxx);
        r.trend_sigma = se > 0.0 ? std::abs(slope) / se : 0.0;
        r.baseline_flat = r.trend_sigma <= 3.0;
    }
    return r;
}

/// Convenience wrapper on a pulsed gated train. The signal phase is the
/// residue class with the most clicks; the dark probability is measured on
/// gates at least two after a signal gate.
inline AfterpulseEstimate afterpulse_from_train(const ClickTrain& train, std::size_t divisor) {
    if (divisor < 4) throw DomainError("afterpulse extraction needs a pulse divisor >= 4");
    std::vector<std::size_t> per_phase(divisor, 0), per_phase_n(divisor, 0);
    for (std::size_t i = 0; i < train.size(); ++i) {
        per_phase[i % divisor] += train.bins[i];
        ++per_phase_n[i % divisor];
    }
    const std::size_t sig = static_cast<std::size_t>(
        std::max_element(per_phase.begin(), per_phase.end()) - per_phase.begin());
    std::size_t dk = 0, dn = 0;
    for (std::size_t ph = 0; ph < divisor; ++ph) {
        const std::size_t rel = (ph + divisor - sig) % divisor;
        if (rel >= 2) {
            dk += per_phase[ph];
            dn += per_phase_n[ph];
        }
    }
    const double d = dn > 0 ? static_cast<double>(dk) / static_cast<double>(dn) : 0.0;
    const auto gamma = autocorrelation(train, divisor + 1);
    const double m = static_cast<double>(train.count()) / static_cast<double>(train.size());
    return afterpulse_probability(gamma, divisor, m, d);
}

struct LinearityResult {
    double slope = 0.0;
    double stderr_slope = 0.0;
    bool single_photon = false;  // slope consistent with 1
    bool saturated = false;      // slope significantly below 1
};

/// Least-squares slope of log(count rate) against log(intensity).
inline LinearityResult linearity_check(const std::vector<std::pair<double, double>>& rates) {
    if (rates.size() < 3) throw DomainError("linearity check needs at least 3 points");
    std::vector<double> x, y;
    for (const auto& [intensity, rate] : rates) {
        if (!(intensity > 0.0) || !(rate > 0.0)) throw DomainError("intensities and rates must be > 0");
        x.push_back(std::log(intensity));
        y.push_back(std::log(rate));
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0) throw DomainError("linearity check needs distinct intensities");
    LinearityResult r;
    r.slope = sxy / sxx;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double e = y[i] - (my + r.slope * (x[i] - mx));
        sse += e * e;
    }
    r.stderr_slope = x.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
    // The interval never shrinks below 0.05 so that near-exact fits still
    // classify sensibly.
    const double tol = std::max(0.05, 2.0 * r.stderr_slope);
    r.single_photon = std::abs(r.slope - 1.0) <= tol;
    r.saturated = r.slope < 1.0 - tol;
    return r;
}

}  // namespace snspd::clickstats

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "oracles.hpp"
#include "snspd/clickstats.hpp"
#include "snspd/errors.hpp"

using namespace snspd;
using namespace snspd::clickstats;

namespace {

QeCurve flat_qe(double q) {
    QeCurve c;
    c.table = {{-2.0, q}, {2.0, q}};
    return c;
}

SourceModel cw(double mu, double qe) {
    SourceModel m;
    m.mean_photons_per_gate = mu;
    m.qe_curve = flat_qe(qe);
    return m;
}

ClickTrain from_bits(const std::vector<int>& bits) {
    ClickTrain t;
    t.bin_width = 1e-9;
    for (int b : bits) t.bins.push_back(static_cast<std::uint8_t>(b));
    return t;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double sd_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / (v.size() - 1));
}

}  // namespace

TEST(Autocorrelation, IndependentGatesGiveOne) {
    const std::size_t n = 1000000;
    for (double p : {0.01, 0.1, 0.5}) {
        SourceModel m = cw(0.0, 0.0);
        m.dark_prob_per_gate = p;
        const ClickTrain t = generate_clicks(m, n, 11);
        const auto g = autocorrelation(t, 50);
        // pair counts are binomial(n, p^2): sigma(gamma) ~ sqrt((1 - p^2) / (n p^2))
        const double sigma = std::sqrt((1.0 - p * p) / (n * p * p));
        for (std::size_t k = 0; k < g.size(); ++k) EXPECT_NEAR(g[k], 1.0, 5.0 * sigma) << "p=" << p << " lag " << k + 1;
    }
}

TEST(Autocorrelation, AlternatingSequenceExact) {
    std::vector<int> bits;
    for (int i = 0; i < 1000; ++i) bits.push_back(i % 2 == 0);
    const auto g = autocorrelation(from_bits(bits), 10);
    for (std::size_t k = 0; k < g.size(); ++k) {
        const std::size_t lag = k + 1;
        EXPECT_DOUBLE_EQ(g[k], lag % 2 ? 0.0 : 2.0) << lag;
    }
}

TEST(Autocorrelation, DegenerateInputsRejected) {
    const ClickTrain zeros = from_bits(std::vector<int>(100, 0));
    EXPECT_THROW(autocorrelation(zeros, 5), DomainError);
    const ClickTrain some = from_bits({1, 0, 1, 1});
    EXPECT_THROW(autocorrelation(some, 0), DomainError);
    EXPECT_THROW(autocorrelation(some, 4), DomainError);
}

TEST(Autocorrelation, BandEntry) {
    EXPECT_EQ(band_entry_lag({0.0, 0.5, 0.89, 0.9, 1.0}), 4u);
    EXPECT_EQ(band_entry_lag({0.0, 0.5}), std::nullopt);
}

TEST(Generate, NoLightNoDarkIsSilent) {
    SourceModel m = cw(0.0, 0.05);
    const ClickTrain t = generate_clicks(m, 100000, 3);
    EXPECT_EQ(t.count(), 0u);
    EXPECT_EQ(estimate_qe(t, 0.1).value, 0.0);
}

TEST(Generate, ClickProbabilityLinearInMu) {
    const SourceModel m = cw(0.1, 0.05);
    EXPECT_NEAR(m.photon_click_prob() / (0.1 * 0.05), 1.0, 0.01);
    const std::size_t n = 2000000;
    const ClickTrain t = generate_clicks(m, n, 5);
    const double p = static_cast<double>(t.count()) / n;
    EXPECT_NEAR(p, m.photon_click_prob(), 4.0 * std::sqrt(p / n));
}

TEST(Generate, PulsedClicksOnlyOnPulseGates) {
    SourceModel m = cw(0.5, 0.5);
    m.kind = SourceKind::Pulsed;
    m.pulse_divisor = 20;
    const ClickTrain t = generate_clicks(m, 200000, 9);
    ASSERT_GT(t.count(), 0u);
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t.bins[i]) EXPECT_EQ(i % 20, 0u) << i;
    }
}

TEST(Generate, SameSeedSameTrain) {
    SourceModel m = cw(0.3, 0.05);
    m.dark_prob_per_gate = 1e-3;
    m.afterpulse_prob = 0.01;
    const ClickTrain a = generate_clicks(m, 50000, 42), b = generate_clicks(m, 50000, 42);
    EXPECT_EQ(a.bins, b.bins);
    EXPECT_EQ(*a.phase_times, *b.phase_times);
    EXPECT_EQ(autocorrelation(a, 20), autocorrelation(b, 20));
}

TEST(Generate, ModelValidation) {
    SourceModel m;
    m.dark_prob_per_gate = 1.5;
    EXPECT_THROW(generate_clicks(m, 10, 1), DomainError);
    m = SourceModel{};
    m.pulse_divisor = 0;
    EXPECT_THROW(generate_clicks(m, 10, 1), DomainError);
    m = SourceModel{};
    m.mean_photons_per_gate = -1.0;
    EXPECT_THROW(generate_clicks(m, 10, 1), DomainError);
}

TEST(QeEstimate, RecoversInjectedValue) {
    const ClickTrain t = generate_clicks(cw(0.1, 0.05), 1000000, 21);
    const Estimate e = estimate_qe(t, 0.1);
    EXPECT_TRUE(e.covers(0.05)) << e.lo << " " << e.value << " " << e.hi;
    EXPECT_LT(e.hi - e.lo, 0.01);
}

TEST(QeEstimate, IntervalCoverage) {
    const SourceModel m = cw(0.1, 0.05);
    int covered = 0;
    for (int r = 0; r < 100; ++r) {
        if (estimate_qe(generate_clicks(m, 100000, 1000 + r), 0.1).covers(m.effective_qe())) ++covered;
    }
    EXPECT_GE(covered, 90);
    EXPECT_LE(covered, 99);
}

TEST(QeEstimate, ZeroClicksIntervalContainsZero) {
    const ClickTrain t = from_bits(std::vector<int>(5000, 0));
    const Estimate e = estimate_qe(t, 0.1);
    EXPECT_EQ(e.value, 0.0);
    EXPECT_TRUE(e.covers(0.0));
    EXPECT_GT(e.hi, 0.0);
    EXPECT_THROW(estimate_qe(t, 0.0), DomainError);
}

TEST(QeEstimate, DarkCorrection) {
    SourceModel lit = cw(0.1, 0.05);
    lit.dark_prob_per_gate = 2e-3;
    SourceModel dark = cw(0.0, 0.05);
    dark.dark_prob_per_gate = 2e-3;
    const double f = 1.0 / lit.gate_period;
    const QeDcr r = estimate_qe_dcr(generate_clicks(lit, 2000000, 7), generate_clicks(dark, 2000000, 8), 0.1, f);
    EXPECT_TRUE(r.dcr.covers(2e-3 * f));
    EXPECT_NEAR(r.qe.value, 0.05, 0.05 * 0.1);
    // without the correction the dark clicks inflate the estimate
    EXPECT_GT(estimate_qe(generate_clicks(lit, 2000000, 7), 0.1).value, 0.06);
}

TEST(DcrEstimate, SaturatesAtGateFrequency) {
    const ClickTrain all = from_bits(std::vector<int>(1000, 1));
    const Estimate e = estimate_dcr(all, 625e6);
    EXPECT_DOUBLE_EQ(e.value, 625e6);
    EXPECT_LE(e.hi, 625e6);
    EXPECT_THROW(estimate_dcr(all, 0.0), DomainError);
}

TEST(Wilson, KnownValues) {
    const Estimate e = wilson_interval(5, 100);
    EXPECT_DOUBLE_EQ(e.value, 0.05);
    // standard 95% Wilson bounds for 5/100
    EXPECT_NEAR(e.lo, 0.02154, 1e-4);
    EXPECT_NEAR(e.hi, 0.11175, 1e-4);
    EXPECT_THROW(wilson_interval(0, 0), DomainError);
}

TEST(Afterpulse, RecoversInjectedProbability) {
    SourceModel m;
    m.kind = SourceKind::Pulsed;
    m.pulse_divisor = 20;
    m.mean_photons_per_gate = 10.0;
    m.dark_prob_per_gate = 1e-4;
    m.afterpulse_prob = 0.003;
    const ClickTrain t = generate_clicks(m, 10000000, 77);
    const AfterpulseEstimate a = afterpulse_from_train(t, 20);
    EXPECT_NEAR(a.probability, 0.003, 0.2 * 0.003);
    EXPECT_TRUE(a.baseline_flat);
}

TEST(Afterpulse, UnbiasedAndZeroConsistentWithZero) {
    for (double ap : {0.0, 0.003}) {
        SourceModel m;
        m.kind = SourceKind::Pulsed;
        m.pulse_divisor = 20;
        m.mean_photons_per_gate = 10.0;
        m.dark_prob_per_gate = 1e-4;
        m.afterpulse_prob = ap;
        std::vector<double> est;
        for (int r = 0; r < 12; ++r) est.push_back(afterpulse_from_train(generate_clicks(m, 1000000, 500 + r), 20).probability);
        const double se = sd_of(est) / std::sqrt(static_cast<double>(est.size()));
        EXPECT_NEAR(mean_of(est), ap, 3.0 * se) << "ap=" << ap;
    }
}

TEST(Afterpulse, GammaPeaksAtPulseLags) {
    SourceModel m;
    m.kind = SourceKind::Pulsed;
    m.pulse_divisor = 10;
    m.mean_photons_per_gate = 10.0;
    m.dark_prob_per_gate = 1e-3;
    const auto g = autocorrelation(generate_clicks(m, 1000000, 4), 30);
    for (std::size_t lag = 1; lag <= 30; ++lag) {
        if (lag % 10 == 0) EXPECT_GT(g[lag - 1], 5.0) << lag;
        else EXPECT_LT(g[lag - 1], 1.0) << lag;
    }
}

TEST(Afterpulse, Preconditions) {
    std::vector<double> g(30, 1.0);
    EXPECT_THROW(afterpulse_probability(g, 3, 0.1, 0.0), DomainError);
    EXPECT_THROW(afterpulse_probability(std::vector<double>(5, 1.0), 20, 0.1, 0.0), DomainError);
    EXPECT_THROW(afterpulse_probability(g, 20, 0.0, 0.0), DomainError);
}

TEST(Linearity, SlopeOneForSinglePhotons) {
    std::vector<std::pair<double, double>> rates;
    for (double mu : {0.01, 0.02, 0.05, 0.1}) {
        const ClickTrain t = generate_clicks(cw(mu, 0.05), 2000000, 31);
        rates.emplace_back(mu, static_cast<double>(t.count()) / t.size());
    }
    const LinearityResult r = linearity_check(rates);
    EXPECT_NEAR(r.slope, 1.0, 0.05);
    EXPECT_TRUE(r.single_photon);
    EXPECT_FALSE(r.saturated);
}

TEST(Linearity, QuadraticToyGivesSlopeTwo) {
    std::vector<std::pair<double, double>> rates;
    for (double mu : {2.0, 3.0, 4.0, 6.0}) {
        SourceModel m = cw(mu, 0.05);
        m.photon_order = 2;
        const ClickTrain t = generate_clicks(m, 4000000, 32);
        rates.emplace_back(mu, static_cast<double>(t.count()) / t.size());
    }
    const LinearityResult r = linearity_check(rates);
    EXPECT_NEAR(r.slope, 2.0, 0.1);
    EXPECT_FALSE(r.single_photon);
}

TEST(Linearity, SaturationFlagged) {
    std::vector<std::pair<double, double>> rates;
    for (double mu : {50.0, 100.0, 200.0, 400.0}) {
        const ClickTrain t = generate_clicks(cw(mu, 0.05), 200000, 33);
        rates.emplace_back(mu, static_cast<double>(t.count()) / t.size());
    }
    const LinearityResult r = linearity_check(rates);
    EXPECT_TRUE(r.saturated);
    EXPECT_FALSE(r.single_photon);
    EXPECT_THROW(linearity_check({{1.0, 0.1}, {2.0, 0.0}, {3.0, 0.3}}), DomainError);
    EXPECT_THROW(linearity_check({{1.0, 0.1}, {2.0, 0.2}}), DomainError);
}

TEST(PhaseHistogram, PulsedLightIsOneBin) {
    SourceModel m = cw(1.0, 0.5);
    m.kind = SourceKind::Pulsed;
    m.pulse_divisor = 4;
    const PhaseHistogram h = gate_phase_histogram(generate_clicks(m, 100000, 2), 100);
    std::size_t nonzero = 0;
    for (double v : h.values) nonzero += v > 0.0;
    EXPECT_EQ(nonzero, 1u);
    EXPECT_DOUBLE_EQ(h.values[50], 1.0);
    EXPECT_DOUBLE_EQ(plateau_width(h), h.bin_width);
}

TEST(PhaseHistogram, FlatQeGivesFlatHistogram) {
    const std::size_t bins = 50;
    const ClickTrain t = generate_clicks(cw(1.0, 0.2), 2000000, 6);
    const PhaseHistogram h = gate_phase_histogram(t, bins);
    // raw counts per bin are multinomial around count / bins
    const double peak_count = static_cast<double>(t.count()) / bins /
                              (std::accumulate(h.values.begin(), h.values.end(), 0.0) / bins);
    const double expect = static_cast<double>(t.count()) / bins;
    for (double v : h.values) EXPECT_NEAR(v * peak_count, expect, 4.0 * std::sqrt(expect));
}

TEST(PhaseHistogram, LogisticQeConcentratesAtGateCentre) {
    SourceModel m;
    m.mean_photons_per_gate = 1.0;
    const PhaseHistogram h = gate_phase_histogram(generate_clicks(m, 500000, 8), 100);
    const auto peak = std::max_element(h.values.begin(), h.values.end()) - h.values.begin();
    EXPECT_NEAR(static_cast<double>(peak), 50.0, 10.0);
    EXPECT_LT(h.values.front(), 0.05);
    EXPECT_GT(plateau_width(h), 0.0);
    EXPECT_LT(plateau_width(h), 0.5 * m.gate_period);
}

TEST(PhaseHistogram, RejectsUnsuitableTrains) {
    ClickTrain t = from_bits({1, 0, 1});
    EXPECT_THROW(gate_phase_histogram(t, 10), DomainError);
    t.phase_times = std::vector<double>{0.1e-9, -1.0, 0.2e-9};
    EXPECT_THROW(gate_phase_histogram(t, 0), DomainError);
    t.mode = TrainMode::FM;
    EXPECT_THROW(gate_phase_histogram(t, 10), DomainError);
}

TEST(PlateauWidth, KnownHistogram) {
    PhaseHistogram h;
    h.bin_width = 1e-10;
    h.values = {0.1, 0.5, 0.96, 1.0, 0.97, 0.8, 0.99};
    EXPECT_DOUBLE_EQ(plateau_width(h), 3e-10);
    EXPECT_DOUBLE_EQ(plateau_width(h, 0.25), 5e-10);
}

TEST(ClickTrainCsv, RoundTrip) {
    SourceModel m = cw(0.5, 0.1);
    const ClickTrain t = generate_clicks(m, 2000, 12);
    std::stringstream ss;
    write_clicktrain_csv(ss, t);
    const ClickTrain back = read_clicktrain_csv(ss);
    EXPECT_EQ(back.bins, t.bins);
    EXPECT_EQ(back.mode, t.mode);
    EXPECT_NEAR(back.bin_width, t.bin_width, 1e-8 * t.bin_width);
    ASSERT_TRUE(back.phase_times.has_value());
    for (std::size_t i = 0; i < t.size(); ++i) {
        const double a = (*t.phase_times)[i], b = (*back.phase_times)[i];
        if (a < 0.0) EXPECT_LT(b, 0.0);
        else EXPECT_NEAR(b, a, 1e-8 * t.bin_width);
    }
}

TEST(ClickTrainCsv, MalformedRejected) {
    std::stringstream bad("index,clicks\n0,1\n");
    EXPECT_THROW(read_clicktrain_csv(bad), ParseError);
    std::stringstream mode("# mode=XX bin_width=1e-9\nindex,click\n0,1\n");
    EXPECT_THROW(read_clicktrain_csv(mode), ParseError);
}

TEST(RenewalModel, MatchesIndependentFormula) {
    const QeCurve qe;
    for (double tau : {0.5e-9, 2e-9, 5e-9, 20e-9}) {
        EXPECT_NEAR(renewal_gamma(qe, 0.9, 4.9e-9, tau),
                    oracle::renewal_ratio(qe.qe_max, qe.x_half, qe.width, 0.9, 4.9e-9, tau), 1e-14);
    }
    EXPECT_THROW(renewal_gamma(flat_qe(0.0), 0.9, 1e-9, 1e-9), DomainError);
}

TEST(RecoveryFit, RecoversKnownShiftAndScale) {
    const QeCurve qe;
    auto model = [&](double lag) { return lag <= 0.0 ? 0.0 : renewal_gamma(qe, 0.9, 4.9e-9, lag * 1e-9); };
    std::vector<double> g;
    for (int k = 1; k <= 50; ++k) g.push_back(1.03 * model(k - 1.37));
    const RecoveryFit fit = fit_recovery(g, model);
    EXPECT_NEAR(fit.shift, 1.37, 0.011);
    EXPECT_NEAR(fit.amplitude, 1.03, 1e-3);
    EXPECT_LT(fit.rms, 1e-3);
    const auto base = shifted_entry_lag(model, 0.0, 50), shifted = shifted_entry_lag(model, fit.shift, 50);
    ASSERT_TRUE(base && shifted);
    EXPECT_GE(*shifted, *base + 1);
    EXPECT_LE(*shifted, *base + 2);
}

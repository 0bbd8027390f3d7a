#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <random>

#include "owclab/modem.hpp"

using owc::Complex;
using owc::OfdmConfig;
using namespace owc::modem;

namespace {

std::vector<Complex> random_payload(const OfdmConfig& cfg, unsigned seed)
{
    std::mt19937_64 rng(seed);
    const owc::dsp::Constellation c(16);
    std::vector<Complex> s(cfg.n_sc());
    for (auto& v : s)
        v = c.point(static_cast<unsigned>(rng() % 16));
    return s;
}

double rms(const std::vector<double>& x)
{
    double s = 0.0;
    for (double v : x)
        s += v * v;
    return std::sqrt(s / static_cast<double>(x.size()));
}

} // namespace

TEST(OfdmConfig, Defaults)
{
    const OfdmConfig cfg;
    EXPECT_EQ(cfg.n_sc(), 511u);
    EXPECT_DOUBLE_EQ(cfg.bandwidth(), 16e9);
    EXPECT_DOUBLE_EQ(cfg.bandwidth() * 2.0 * cfg.n_sps, cfg.sample_rate);
    EXPECT_EQ(cfg.frame_length(), 1039u);
    EXPECT_DOUBLE_EQ(cfg.subcarrier_spacing(), 31.25e6);
}

TEST(OfdmConfig, RejectsBadValues)
{
    OfdmConfig c;
    c.n_fft = 1000;
    EXPECT_THROW(c.validate(), std::invalid_argument);
    c = {};
    c.n_sps = 0;
    EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(BuildFrame, ZeroPayloadGivesZeroWaveform)
{
    const OfdmConfig cfg;
    const auto w = build_frame({std::vector<Complex>(cfg.n_sc(), Complex{}), FrameKind::data}, cfg);
    EXPECT_EQ(w.samples.size(), cfg.frame_length());
    for (const auto& v : w.samples)
        EXPECT_EQ(v, Complex{});
}

TEST(BuildFrame, OutputIsReal)
{
    const OfdmConfig cfg;
    for (unsigned seed = 1; seed <= 5; ++seed) {
        const auto w = build_frame({random_payload(cfg, seed), FrameKind::data}, cfg);
        double max_imag = 0.0;
        for (const auto& v : w.samples)
            max_imag = std::max(max_imag, std::abs(v.imag()));
        EXPECT_LE(max_imag / rms(real_samples(w)), 1e-12);
    }
}

TEST(BuildFrame, CyclicPrefixCopiesTail)
{
    const OfdmConfig cfg;
    const auto w = build_frame({random_payload(cfg, 7), FrameKind::data}, cfg);
    for (std::size_t i = 0; i < cfg.n_cp; ++i)
        EXPECT_EQ(w.samples[i], w.samples[cfg.n_fft + i]);
}

TEST(BuildFrame, ParsevalThroughFramer)
{
    const OfdmConfig cfg;
    const auto s = random_payload(cfg, 8);
    const auto w = real_samples(build_frame({s, FrameKind::data}, cfg));
    double payload = 0.0;
    for (const auto& v : s)
        payload += std::norm(v);
    double body = 0.0;
    for (std::size_t i = cfg.n_cp; i < w.size(); ++i)
        body += w[i] * w[i];
    const double n = static_cast<double>(cfg.n_fft);
    EXPECT_NEAR(body, 2.0 * payload / n, 1e-9 * body);
}

TEST(BuildFrame, RejectsWrongLength)
{
    const OfdmConfig cfg;
    EXPECT_THROW(build_frame({std::vector<Complex>(10), FrameKind::data}, cfg), std::invalid_argument);
}

TEST(PulseShape, OneSamplePerSymbolPassesThrough)
{
    const OfdmConfig cfg;
    std::vector<double> x(2000);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> d;
    for (auto& v : x)
        v = d(rng);
    const auto y = pulse_shape(x, cfg);
    ASSERT_EQ(y.samples.size(), x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        EXPECT_NEAR(y.samples[i + y.group_delay], x[i], 1e-9);
}

TEST(PulseShape, ImpulseGivesTaps)
{
    OfdmConfig cfg;
    cfg.n_sps = 4;
    const std::vector<double> x{1.0};
    const auto y = pulse_shape(x, cfg);
    const auto taps = owc::dsp::rrc_taps(cfg.rolloff, 4, cfg.rrc_span);
    ASSERT_GE(y.samples.size(), taps.size());
    for (std::size_t i = 0; i < taps.size(); ++i)
        EXPECT_DOUBLE_EQ(y.samples[i], taps[i]);
    EXPECT_EQ(y.group_delay, taps.size() / 2);
}

TEST(PulseShape, WhiteInputIsBandLimited)
{
    OfdmConfig cfg;
    cfg.n_sps = 4;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> d;
    std::vector<double> x(4096);
    for (auto& v : x)
        v = d(rng);
    const auto y = pulse_shape(x, cfg).samples;
    std::vector<double> padded(std::bit_ceil(y.size()), 0.0);
    std::copy(y.begin(), y.end(), padded.begin());
    const auto spec = owc::dsp::fft_real(padded);
    const double n = static_cast<double>(padded.size());
    const double edge = 0.55 * cfg.sample_rate / cfg.n_sps;
    double in_band = 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k < padded.size(); ++k) {
        const double f = std::min<double>(k, n - k) / n * cfg.sample_rate;
        const double p = std::norm(spec[k]);
        total += p;
        if (f <= edge)
            in_band += p;
    }
    EXPECT_GE(in_band / total, 0.99);
}

TEST(MatchedFilter, RecoversSymbolsAtFourSps)
{
    OfdmConfig cfg;
    cfg.n_sps = 4;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> d;
    std::vector<double> x(3000);
    for (auto& v : x)
        v = d(rng);
    const auto y = pulse_shape(x, cfg);
    const auto z = matched_filter(y.samples, x.size(), cfg);
    double err = 0.0;
    double ref = 0.0;
    for (std::size_t i = 100; i + 100 < x.size(); ++i) {
        err += (z[i] - x[i]) * (z[i] - x[i]);
        ref += x[i] * x[i];
    }
    EXPECT_LT(10.0 * std::log10(err / ref), -35.0);
}

TEST(Synchronize, IdentityAndDelay)
{
    std::mt19937_64 rng(4);
    std::normal_distribution<double> d;
    std::vector<double> ref(1039);
    for (auto& v : ref)
        v = d(rng);
    EXPECT_EQ(synchronize(ref, ref), 0u);

    std::vector<double> rx(37, 0.0);
    rx.insert(rx.end(), ref.begin(), ref.end());
    rx.resize(rx.size() + 100, 0.0);
    EXPECT_EQ(synchronize(rx, ref), 37u);
}

TEST(Synchronize, ShiftEquivariant)
{
    std::mt19937_64 rng(5);
    std::normal_distribution<double> d;
    std::vector<double> ref(256);
    for (auto& v : ref)
        v = d(rng);
    std::vector<double> rx(1200);
    for (auto& v : rx)
        v = 0.3 * d(rng);
    for (std::size_t i = 0; i < ref.size(); ++i)
        rx[400 + i] += ref[i];
    const auto base = synchronize(rx, ref);
    for (std::size_t shift : {1u, 13u, 200u}) {
        std::vector<double> delayed(shift, 0.0);
        delayed.insert(delayed.end(), rx.begin(), rx.end());
        EXPECT_EQ(synchronize(delayed, ref), base + shift);
    }
}

TEST(Synchronize, NoisyDelayMonteCarlo)
{
    std::mt19937_64 rng(6);
    std::normal_distribution<double> d;
    std::uniform_int_distribution<std::size_t> delay(0, 150);
    const double noise = std::sqrt(0.1); // 10 dB below unit-power reference
    int correct = 0;
    const int trials = 1000;
    for (int t = 0; t < trials; ++t) {
        std::vector<double> ref(1039);
        for (auto& v : ref)
            v = d(rng);
        const std::size_t dly = delay(rng);
        std::vector<double> rx(ref.size() + 160, 0.0);
        for (std::size_t i = 0; i < ref.size(); ++i)
            rx[dly + i] = ref[i];
        for (auto& v : rx)
            v += noise * d(rng);
        correct += synchronize(rx, ref) == dly;
    }
    EXPECT_GE(correct, 999);
}

TEST(Synchronize, RejectsEmpty)
{
    const std::vector<double> empty;
    const std::vector<double> one{1.0};
    EXPECT_THROW(synchronize(empty, one), std::invalid_argument);
    EXPECT_THROW(synchronize(one, empty), std::invalid_argument);
}

TEST(Demodulate, RoundTripAndScale)
{
    const OfdmConfig cfg;
    const auto s = random_payload(cfg, 9);
    const auto w = real_samples(build_frame({s, FrameKind::data}, cfg));
    const std::vector<Complex> ones(cfg.n_sc(), 1.0);
    const auto r = demodulate_frame(w, ones, cfg);
    for (std::size_t k = 0; k < s.size(); ++k)
        EXPECT_NEAR(std::abs(r[k] - s[k]), 0.0, 1e-9);

    auto half = w;
    for (auto& v : half)
        v *= 0.5;
    const std::vector<Complex> g(cfg.n_sc(), 0.5);
    const auto r2 = demodulate_frame(half, g, cfg);
    for (std::size_t k = 0; k < s.size(); ++k)
        EXPECT_NEAR(std::abs(r2[k] - s[k]), 0.0, 1e-9);
}

TEST(Demodulate, RejectsZeroGain)
{
    const OfdmConfig cfg;
    std::vector<Complex> g(cfg.n_sc(), 1.0);
    g[17] = 0.0;
    const std::vector<double> block(cfg.frame_length(), 0.0);
    EXPECT_THROW(demodulate_frame(block, g, cfg), std::invalid_argument);
}

TEST(Pilots, UnitVarianceFourQam)
{
    const OfdmConfig cfg;
    const auto p = pilot_symbols(cfg);
    ASSERT_EQ(p.size(), cfg.n_sc());
    for (const auto& v : p)
        EXPECT_NEAR(std::norm(v), 1.0, 1e-12);
    EXPECT_EQ(p, pilot_symbols(cfg));
}

TEST(RunStream, NoiselessUniformTwoBits)
{
    const OfdmConfig cfg;
    const owc::channel::VcselModel m;
    const auto preset = owc::channel::ideal(owc::channel::config_one());
    const auto plan = owc::loading::uniform_plan(cfg, 2);
    const auto bits = random_bits(data_bits_required(plan), 1);
    const auto r = run_stream(bits, plan, preset, m, cfg, 1);
    EXPECT_EQ(r.ber, 0.0);
    EXPECT_EQ(r.bits, 300u * 2u * 511u);
    EXPECT_NEAR(r.rate, owc::loading::data_rate(1022, cfg), 1e-3);
}

TEST(RunStream, NoiselessWithPulseShaping)
{
    OfdmConfig cfg;
    cfg.n_sps = 4;
    const owc::channel::VcselModel m;
    const auto preset = owc::channel::ideal(owc::channel::config_one());
    const auto plan = owc::loading::uniform_plan(cfg, 4);
    const auto bits = random_bits(data_bits_required(plan), 2);
    EXPECT_EQ(run_stream(bits, plan, preset, m, cfg, 1).ber, 0.0);
}

TEST(RunStream, DeterministicPerSeed)
{
    const OfdmConfig cfg;
    const owc::channel::VcselModel m;
    auto preset = owc::channel::config_one();
    preset.noise_std = 2e-4;
    const auto plan = owc::loading::uniform_plan(cfg, 4);
    const auto bits = random_bits(data_bits_required(plan), 3);
    const auto a = run_stream(bits, plan, preset, m, cfg, 42);
    const auto b = run_stream(bits, plan, preset, m, cfg, 42);
    EXPECT_EQ(a.rx_bits, b.rx_bits);
    EXPECT_EQ(a.snr_profile.snr_linear, b.snr_profile.snr_linear);
    const auto c = run_stream(bits, plan, preset, m, cfg, 43);
    EXPECT_NE(a.snr_profile.snr_linear, c.snr_profile.snr_linear);
}

TEST(RunStream, RejectsBitCountMismatch)
{
    const OfdmConfig cfg;
    const owc::channel::VcselModel m;
    const auto plan = owc::loading::uniform_plan(cfg, 2);
    const owc::Bits bits(10, 0);
    EXPECT_THROW(run_stream(bits, plan, owc::channel::config_one(), m, cfg, 1), std::invalid_argument);
}

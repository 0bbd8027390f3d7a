#pragma once

// DCO-OFDM transmitter and receiver.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "owclab/analysis.hpp"
#include "owclab/channel.hpp"
#include "owclab/dsp.hpp"
#include "owclab/loading.hpp"
#include "owclab/ofdm_config.hpp"

namespace owc::modem {

inline constexpr std::size_t kPilotFrames = 150;
inline constexpr std::size_t kDataFrames = 300;
inline constexpr std::uint64_t kPilotSeed = 0x9e3779b97f4a7c15ull;

enum class FrameKind { pilot, data };

struct OfdmFrame {
    std::vector<Complex> payload_symbols;
    FrameKind kind = FrameKind::data;
};

/// Hermitian-symmetric IFFT frame with cyclic prefix; output is real.
inline dsp::ComplexWaveform build_frame(const OfdmFrame& frame, const OfdmConfig& cfg)
{
    const std::size_t n = cfg.n_fft;
    if (frame.payload_symbols.size() != cfg.n_sc())
        throw std::invalid_argument("frame carries " + std::to_string(frame.payload_symbols.size()) +
                                    " symbols, expected " + std::to_string(cfg.n_sc()));
    std::vector<Complex> spectrum(n, Complex{});
    for (std::size_t k = 1; k <= cfg.n_sc(); ++k) {
        spectrum[k] = frame.payload_symbols[k - 1];
        spectrum[n - k] = std::conj(spectrum[k]);
    }
    const auto body = dsp::ifft(spectrum);

    dsp::ComplexWaveform out;
    out.sample_rate = cfg.symbol_rate();
    out.samples.reserve(n + cfg.n_cp);
    out.samples.insert(out.samples.end(), body.end() - static_cast<std::ptrdiff_t>(cfg.n_cp), body.end());
    out.samples.insert(out.samples.end(), body.begin(), body.end());
    return out;
}

/// Real part of a built frame.
inline std::vector<double> real_samples(const dsp::ComplexWaveform& w)
{
    std::vector<double> out(w.samples.size());
    std::transform(w.samples.begin(), w.samples.end(), out.begin(), [](const Complex& c) { return c.real(); });
    return out;
}

struct ShapedSignal {
    std::vector<double> samples;
    std::size_t group_delay = 0; // samples at the output rate
};

/// Upsample by n_sps and filter with the RRC. With one sample per symbol
/// the RRC collapses to a single significant tap and the signal passes
/// through unchanged.
inline ShapedSignal pulse_shape(std::span<const double> x, const OfdmConfig& cfg)
{
    ShapedSignal out;
    if (cfg.n_sps == 1) {
        out.samples.assign(x.begin(), x.end());
        return out;
    }
    const auto taps = dsp::rrc_taps(cfg.rolloff, cfg.n_sps, cfg.rrc_span);
    std::vector<double> up(x.size() * cfg.n_sps, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i)
        up[i * cfg.n_sps] = x[i];
    out.samples = dsp::convolve(up, taps);
    out.group_delay = taps.size() / 2;
    return out;
}

/// Matched RRC filter and symbol-rate decimation; returns `symbols`
/// samples aligned with the original pre-shaping sequence.
inline std::vector<double> matched_filter(std::span<const double> rx, std::size_t symbols, const OfdmConfig& cfg)
{
    if (cfg.n_sps == 1)
        return {rx.begin(), rx.begin() + static_cast<std::ptrdiff_t>(std::min(symbols, rx.size()))};
    const auto taps = dsp::rrc_taps(cfg.rolloff, cfg.n_sps, cfg.rrc_span);
    const auto y = dsp::convolve(rx, taps);
    const std::size_t delay = 2 * (taps.size() / 2);
    std::vector<double> out(symbols, 0.0);
    for (std::size_t i = 0; i < symbols; ++i) {
        const std::size_t idx = delay + i * cfg.n_sps;
        if (idx < y.size())
            out[i] = y[idx];
    }
    return out;
}

/// Offset of `reference` inside `rx` maximizing the normalized
/// cross-correlation.
inline std::size_t synchronize(std::span<const double> rx, std::span<const double> reference)
{
    if (rx.empty() || reference.empty())
        throw std::invalid_argument("synchronize: empty input");
    if (reference.size() > rx.size())
        throw std::invalid_argument("synchronize: reference longer than received signal");
    double ref_energy = 0.0;
    for (double v : reference)
        ref_energy += v * v;
    if (ref_energy <= 0.0)
        throw std::invalid_argument("synchronize: reference has zero energy");

    const std::size_t len = reference.size();
    double win_energy = 0.0;
    for (std::size_t i = 0; i < len; ++i)
        win_energy += rx[i] * rx[i];

    std::size_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t d = 0; d + len <= rx.size(); ++d) {
        if (d > 0) {
            win_energy += rx[d + len - 1] * rx[d + len - 1] - rx[d - 1] * rx[d - 1];
            win_energy = std::max(win_energy, 0.0);
        }
        double dot = 0.0;
        for (std::size_t i = 0; i < len; ++i)
            dot += rx[d + i] * reference[i];
        const double denom = std::sqrt(ref_energy * win_energy);
        const double score = denom > 0.0 ? dot / denom : 0.0;
        if (score > best_score) {
            best_score = score;
            best = d;
        }
    }
    return best;
}

/// CP removal, FFT and one-tap zero-forcing equalization.
inline std::vector<Complex> demodulate_frame(std::span<const double> rx_block, std::span<const Complex> gains,
                                             const OfdmConfig& cfg)
{
    if (rx_block.size() != cfg.frame_length())
        throw std::invalid_argument("demodulate_frame: block length " + std::to_string(rx_block.size()) +
                                    ", expected " + std::to_string(cfg.frame_length()));
    if (gains.size() != cfg.n_sc())
        throw std::invalid_argument("demodulate_frame: gain vector length mismatch");
    for (std::size_t k = 0; k < gains.size(); ++k)
        if (gains[k] == Complex{})
            throw std::invalid_argument("demodulate_frame: zero gain on subcarrier " + std::to_string(k));
    const auto spectrum = dsp::fft_real(rx_block.subspan(cfg.n_cp, cfg.n_fft));
    std::vector<Complex> out(cfg.n_sc());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = spectrum[k + 1] / gains[k];
    return out;
}

/// Fixed pseudo-random unit-variance 4-QAM pilot, one symbol per subcarrier.
inline std::vector<Complex> pilot_symbols(const OfdmConfig& cfg)
{
    std::mt19937_64 rng(kPilotSeed);
    const dsp::Constellation qpsk(4);
    std::vector<Complex> out(cfg.n_sc());
    for (auto& s : out)
        s = qpsk.point(static_cast<unsigned>(rng() & 3u));
    return out;
}

/// Scale that gives a stream of unit-power-per-subcarrier frames unit
/// standard deviation after pulse shaping.
inline double drive_normalization(const OfdmConfig& cfg)
{
    return static_cast<double>(cfg.n_fft) * std::sqrt(static_cast<double>(cfg.n_sps)) /
           std::sqrt(2.0 * static_cast<double>(cfg.n_sc()));
}

/// Shared constellation for 1..10 bits per symbol.
inline const dsp::Constellation& constellation_for(unsigned bits)
{
    static const std::vector<dsp::Constellation> table = [] {
        std::vector<dsp::Constellation> t;
        for (unsigned b = 1; b <= 10; ++b)
            t.emplace_back(1u << b);
        return t;
    }();
    if (bits < 1 || bits > 10)
        throw std::invalid_argument("no constellation for " + std::to_string(bits) + " bits");
    return table[bits - 1];
}

/// Frame payloads of the data section, bits taken frame-major and
/// subcarrier-ascending with b_k bits per subcarrier.
inline std::vector<std::vector<Complex>> map_data_frames(std::span<const std::uint8_t> bits,
                                                         const loading::LoadingPlan& plan, std::size_t frames)
{
    const std::size_t n = plan.n_sc();
    std::vector<double> amplitude(n, 0.0);
    for (std::size_t k = 0; k < n; ++k)
        amplitude[k] = std::sqrt(plan.power_scales[k]);

    std::vector<std::vector<Complex>> out(frames, std::vector<Complex>(n, Complex{}));
    std::size_t pos = 0;
    for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t k = 0; k < n; ++k) {
            const unsigned b = plan.bits[k];
            if (b == 0)
                continue;
            const auto& c = constellation_for(b);
            unsigned label = 0;
            for (unsigned j = 0; j < b; ++j)
                label = (label << 1) | (bits[pos++] & 1u);
            out[f][k] = c.point(label) * amplitude[k];
        }
    }
    return out;
}

struct TransmitStream {
    std::vector<double> drive;     // unit-std drive waveform at F_s
    std::vector<double> reference; // first pilot frame at the OFDM rate, for synchronization
    std::size_t ofdm_samples = 0;  // pre-shaping length
};

inline TransmitStream assemble_stream(const std::vector<std::vector<Complex>>& payloads, const OfdmConfig& cfg)
{
    TransmitStream tx;
    std::vector<double> ofdm;
    ofdm.reserve(payloads.size() * cfg.frame_length());
    const double norm = drive_normalization(cfg);
    for (const auto& p : payloads) {
        const auto frame = real_samples(build_frame({p, FrameKind::data}, cfg));
        for (double v : frame)
            ofdm.push_back(v * norm);
    }
    tx.reference.assign(ofdm.begin(), ofdm.begin() + static_cast<std::ptrdiff_t>(cfg.frame_length()));
    tx.ofdm_samples = ofdm.size();
    auto shaped = pulse_shape(ofdm, cfg);
    tx.drive = std::move(shaped.samples);
    return tx;
}

/// Receiver front end: DC removal, matched filter, synchronization against
/// the first pilot frame within one frame of slack, frame slicing and FFT.
/// Returns unequalized subcarrier values per frame.
inline analysis::FrameMatrix receive_frames(std::span<const double> rx, const TransmitStream& tx, std::size_t frames,
                                            const OfdmConfig& cfg)
{
    double mean = 0.0;
    for (double v : rx)
        mean += v;
    mean /= static_cast<double>(rx.size());
    std::vector<double> centred(rx.begin(), rx.end());
    for (auto& v : centred)
        v -= mean;

    const std::size_t slack = cfg.frame_length() / 2;
    auto sym = matched_filter(centred, tx.ofdm_samples + slack, cfg);
    const std::size_t search = std::min(sym.size(), cfg.frame_length() + slack);
    const std::size_t offset = synchronize(std::span<const double>(sym).first(search), tx.reference);

    const std::vector<Complex> unity(cfg.n_sc(), Complex{1.0, 0.0});
    const double norm = drive_normalization(cfg);
    analysis::FrameMatrix out;
    out.reserve(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t start = offset + f * cfg.frame_length();
        std::vector<double> block(cfg.frame_length(), 0.0);
        for (std::size_t i = 0; i < block.size() && start + i < sym.size(); ++i)
            block[i] = sym[start + i] / norm;
        out.push_back(demodulate_frame(block, unity, cfg));
    }
    return out;
}

struct ProbeResult {
    analysis::ChannelEstimate estimate;
    bool clipping = false;
};

/// Sends pilot frames only and estimates the channel.
inline ProbeResult probe_link(const channel::LinkPreset& preset, const channel::VcselModel& model,
                              const OfdmConfig& cfg, std::uint64_t seed, std::size_t frames = kPilotFrames)
{
    cfg.validate();
    const auto pilot = pilot_symbols(cfg);
    const std::vector<std::vector<Complex>> payloads(frames, pilot);
    const auto tx = assemble_stream(payloads, cfg);
    const auto link = channel::apply_link(tx.drive, cfg.sample_rate, preset, model, seed);
    const auto rx = receive_frames(link.samples, tx, frames, cfg);
    ProbeResult r;
    r.estimate = analysis::estimate_channel(payloads, rx, cfg.subcarrier_frequencies());
    r.clipping = link.clipping;
    return r;
}

struct StreamResult {
    double ber = 0.0;
    double rate = 0.0; // bit/s
    SnrProfile snr_profile;
    std::size_t bit_errors = 0;
    std::size_t bits = 0;
    bool clipping = false;
    Bits rx_bits;
    std::vector<double> tx_waveform;
    std::vector<double> rx_waveform;
};

struct StreamOptions {
    bool keep_waveforms = false;
};

/// 150 pilot frames followed by 300 data frames through the link; the
/// channel is estimated from the pilots and used to equalize the data.
inline StreamResult run_stream(std::span<const std::uint8_t> tx_bits, const loading::LoadingPlan& plan,
                               const channel::LinkPreset& preset, const channel::VcselModel& model,
                               const OfdmConfig& cfg, std::uint64_t seed, const StreamOptions& opts = {})
{
    cfg.validate();
    if (plan.n_sc() != cfg.n_sc() || plan.power_scales.size() != cfg.n_sc())
        throw std::invalid_argument("loading plan does not match the subcarrier count");
    std::size_t per_frame = 0;
    for (unsigned b : plan.bits) {
        if (b > 10)
            throw std::invalid_argument("loading plan exceeds 10 bits on a subcarrier");
        per_frame += b;
    }
    if (tx_bits.size() != kDataFrames * per_frame)
        throw std::invalid_argument("expected " + std::to_string(kDataFrames * per_frame) + " data bits, got " +
                                    std::to_string(tx_bits.size()));

    const auto pilot = pilot_symbols(cfg);
    std::vector<std::vector<Complex>> payloads(kPilotFrames, pilot);
    auto data = map_data_frames(tx_bits, plan, kDataFrames);
    payloads.insert(payloads.end(), std::make_move_iterator(data.begin()), std::make_move_iterator(data.end()));

    const auto tx = assemble_stream(payloads, cfg);
    auto link = channel::apply_link(tx.drive, cfg.sample_rate, preset, model, seed);
    const auto rx = receive_frames(link.samples, tx, payloads.size(), cfg);

    const analysis::FrameMatrix pilot_tx(payloads.begin(), payloads.begin() + kPilotFrames);
    const analysis::FrameMatrix pilot_rx(rx.begin(), rx.begin() + kPilotFrames);
    const auto est = analysis::estimate_channel(pilot_tx, pilot_rx, cfg.subcarrier_frequencies());

    StreamResult result;
    result.snr_profile = est.snr;
    result.clipping = link.clipping;
    result.rate = loading::data_rate(per_frame, cfg);
    result.rx_bits.reserve(tx_bits.size());

    for (std::size_t f = 0; f < kDataFrames; ++f) {
        const auto& y = rx[kPilotFrames + f];
        for (std::size_t k = 0; k < cfg.n_sc(); ++k) {
            const unsigned b = plan.bits[k];
            if (b == 0)
                continue;
            Complex g = est.gains[k] * std::sqrt(plan.power_scales[k]);
            if (g == Complex{})
                g = Complex{1e-300, 0.0};
            const Complex sym = y[k] / g;
            const unsigned label = constellation_for(b).nearest_label(sym);
            for (unsigned j = b; j-- > 0;)
                result.rx_bits.push_back(static_cast<std::uint8_t>((label >> j) & 1u));
        }
    }
    result.bits = tx_bits.size();
    if (result.bits > 0) {
        for (std::size_t i = 0; i < result.bits; ++i)
            result.bit_errors += (tx_bits[i] & 1u) != result.rx_bits[i];
        result.ber = static_cast<double>(result.bit_errors) / static_cast<double>(result.bits);
    }
    if (opts.keep_waveforms) {
        result.tx_waveform = tx.drive;
        result.rx_waveform = std::move(link.samples);
    }
    return result;
}

/// Uniformly random bits from a seeded generator.
inline Bits random_bits(std::size_t n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    Bits bits(n);
    for (std::size_t i = 0; i < n; i += 64) {
        const std::uint64_t word = rng();
        for (std::size_t j = 0; j < 64 && i + j < n; ++j)
            bits[i + j] = static_cast<std::uint8_t>((word >> j) & 1u);
    }
    return bits;
}

inline std::size_t data_bits_required(const loading::LoadingPlan& plan)
{
    std::size_t per_frame = 0;
    for (unsigned b : plan.bits)
        per_frame += b;
    return kDataFrames * per_frame;
}

} // namespace owc::modem

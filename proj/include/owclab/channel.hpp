#pragma once

// Parametric end-to-end link: drive mapping, VCSEL LIV curve, cascaded
// zero-phase frequency responses, photodetection and AWGN.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "owclab/dsp.hpp"
#include "owclab/ofdm_config.hpp"

namespace owc::channel {

struct VcselModel {
    double i_threshold = 1.5;      // mA
    double slope_efficiency = 0.6; // W/A == mW/mA
    double i_rollover = 30.0;      // mA
    double p_max = 14.0;           // mW
    double linear_low = 5.0;       // mA
    double linear_high = 20.0;     // mA

    void validate() const
    {
        if (!(i_threshold > 0.0 && i_threshold < linear_low && linear_low < linear_high && linear_high < i_rollover))
            throw std::invalid_argument("vcsel: need 0 < i_threshold < linear_low < linear_high < i_rollover");
        if (!(slope_efficiency > 0.0))
            throw std::invalid_argument("vcsel.slope_efficiency must be positive");
        if (!(p_max >= slope_efficiency * (linear_high - i_threshold)))
            throw std::invalid_argument("vcsel.p_max must not be below the power at linear_high");
    }
};

/// Optical output power in mW for a forward current in mA.
///
/// Zero up to threshold, linear with the slope efficiency up to
/// linear_high, then a cubic Hermite ease that leaves with the linear slope
/// and arrives at (i_rollover, p_max) with zero slope. Flat beyond.
inline double vcsel_power(double i, const VcselModel& m)
{
    if (!(i >= 0.0))
        throw std::invalid_argument("VCSEL drive current must be non-negative");
    if (i <= m.i_threshold)
        return 0.0;
    if (i <= m.linear_high)
        return m.slope_efficiency * (i - m.i_threshold);
    if (i >= m.i_rollover)
        return m.p_max;
    const double span = m.i_rollover - m.linear_high;
    const double t = (i - m.linear_high) / span;
    const double p0 = m.slope_efficiency * (m.linear_high - m.i_threshold);
    const double m0 = m.slope_efficiency * span;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * m.p_max;
}

// Response stages. Every stage is zero-phase (real, non-negative gain).

struct SecondOrderLowpass {
    double resonance_hz = 18e9;
    double damping = std::numbers::sqrt2 / 2.0; // 3 dB point at resonance
    double gain(double f) const
    {
        const double x = f / resonance_hz;
        return 1.0 / std::sqrt((1.0 - x * x) * (1.0 - x * x) + (2.0 * damping * x) * (2.0 * damping * x));
    }
};

struct FirstOrderLowpass {
    double corner_hz = 12e9;
    double gain(double f) const
    {
        const double x = f / corner_hz;
        return 1.0 / std::sqrt(1.0 + x * x);
    }
};

struct Brickwall {
    double cutoff_hz = 11e9;
    double gain(double f) const { return f < cutoff_hz ? 1.0 : 0.0; }
};

/// Sinusoidal gain ripple in dB, zero at DC. Off unless configured.
struct Ripple {
    double amplitude_db = 1.0;
    double period_hz = 1e9;
    double gain(double f) const
    {
        return std::pow(10.0, amplitude_db * std::sin(2.0 * std::numbers::pi * f / period_hz) / 20.0);
    }
};

/// Piecewise-linear gain table, clamped at the ends. Produced by noise
/// calibration to shape the received SNR.
struct Tabulated {
    std::vector<double> frequencies;
    std::vector<double> gains;
    double gain(double f) const
    {
        if (frequencies.empty())
            return 1.0;
        if (f <= frequencies.front())
            return gains.front();
        if (f >= frequencies.back())
            return gains.back();
        const auto it = std::upper_bound(frequencies.begin(), frequencies.end(), f);
        const auto i = static_cast<std::size_t>(it - frequencies.begin());
        const double t = (f - frequencies[i - 1]) / (frequencies[i] - frequencies[i - 1]);
        return gains[i - 1] + t * (gains[i] - gains[i - 1]);
    }
};

using ResponseStage = std::variant<SecondOrderLowpass, FirstOrderLowpass, Brickwall, Ripple, Tabulated>;

inline double stage_gain(const ResponseStage& stage, double f)
{
    return std::visit([f](const auto& s) { return s.gain(f); }, stage);
}

struct LinkPreset {
    std::string name = "Config-I";
    double v_dc = 2.40;          // V
    double i_dc = 8.42;          // mA
    double p_t = 4.26;           // mW
    double p_r = 445.0;          // uW
    double drive_scale = 1.1;    // mA per unit signal std
    std::vector<ResponseStage> stages;
    double noise_std = 0.0;      // output units (mA) per sample
    double responsivity = 0.6;   // A/W

    /// Free-space plus fibre coupling, P_r / P_t.
    double coupling() const { return p_r * 1e-3 / p_t; }

    void validate(const VcselModel& m) const
    {
        if (!(i_dc >= m.linear_low && i_dc <= m.linear_high))
            throw std::invalid_argument("preset.i_dc must lie inside the VCSEL linear range");
        if (!(drive_scale >= 0.0))
            throw std::invalid_argument("preset.drive_scale must be non-negative");
        if (!(noise_std >= 0.0))
            throw std::invalid_argument("preset.noise_std must be non-negative");
        if (!(responsivity > 0.0))
            throw std::invalid_argument("preset.responsivity must be positive");
        if (!(p_t > 0.0 && p_r > 0.0))
            throw std::invalid_argument("preset.p_t and preset.p_r must be positive");
    }
};

/// VCSEL 18 GHz second-order response, 12 GHz bias-tee roll-off and the
/// 11 GHz oscilloscope cutoff.
inline std::vector<ResponseStage> default_stages()
{
    return {SecondOrderLowpass{18e9, std::numbers::sqrt2 / 2.0}, FirstOrderLowpass{12e9}, Brickwall{11e9}};
}

inline LinkPreset config_one()
{
    LinkPreset p;
    p.name = "Config-I";
    p.v_dc = 2.40;
    p.i_dc = 8.42;
    p.p_t = 4.26;
    p.p_r = 445.0;
    p.stages = default_stages();
    return p;
}

inline LinkPreset config_two()
{
    LinkPreset p;
    p.name = "Config-II";
    p.v_dc = 2.44;
    p.i_dc = 9.46;
    p.p_t = 4.95;
    p.p_r = 510.0;
    p.stages = default_stages();
    return p;
}

/// Preset with no response stages and no noise: an affine link.
inline LinkPreset ideal(LinkPreset p)
{
    p.stages.clear();
    p.noise_std = 0.0;
    return p;
}

inline std::complex<double> frequency_response(const LinkPreset& preset, double f)
{
    if (!(f >= 0.0))
        throw std::invalid_argument("frequency must be non-negative");
    double g = 1.0;
    for (const auto& s : preset.stages)
        g *= stage_gain(s, f);
    return {g, 0.0};
}

/// Output current per unit of normalized drive in the linear region (mA).
inline double small_signal_gain(const LinkPreset& preset, const VcselModel& m)
{
    return preset.responsivity * preset.coupling() * m.slope_efficiency * preset.drive_scale;
}

/// Photocurrent for a given optical power at the transmitter (mA).
inline double detected_current(const LinkPreset& preset, double p_tx_mw)
{
    return preset.responsivity * preset.coupling() * p_tx_mw;
}

struct LinkOutput {
    std::vector<double> samples;
    double clipped_fraction = 0.0; // drive samples outside [0, i_rollover]
    bool clipping = false;         // clipped_fraction > 1 %
};

inline constexpr double kClippingWarnFraction = 0.01;

/// Zero-phase filtering of a real sequence by the preset's stage cascade,
/// on a power-of-two FFT grid at least twice the input length.
inline std::vector<double> filter_zero_phase(std::span<const double> x, double sample_rate, const LinkPreset& preset)
{
    if (preset.stages.empty() || x.empty())
        return {x.begin(), x.end()};
    const std::size_t n = x.size();
    const std::size_t nfft = std::bit_ceil(2 * n);
    double mean = 0.0;
    for (double v : x)
        mean += v;
    mean /= static_cast<double>(n);

    std::vector<Complex> buf(nfft, Complex{});
    for (std::size_t i = 0; i < n; ++i)
        buf[i] = x[i] - mean;
    dsp::detail::fft_in_place(buf, -1);
    const double df = sample_rate / static_cast<double>(nfft);
    for (std::size_t k = 0; k <= nfft / 2; ++k) {
        const double g = frequency_response(preset, static_cast<double>(k) * df).real();
        buf[k] *= g;
        if (k != 0 && k != nfft / 2)
            buf[nfft - k] *= g;
    }
    dsp::detail::fft_in_place(buf, +1);
    const double dc = mean * frequency_response(preset, 0.0).real();
    std::vector<double> y(n);
    const double scale = 1.0 / static_cast<double>(nfft);
    for (std::size_t i = 0; i < n; ++i)
        y[i] = buf[i].real() * scale + dc;
    return y;
}

/// Pushes a unit-std drive waveform through the link.
inline LinkOutput apply_link(std::span<const double> tx, double sample_rate, const LinkPreset& preset,
                             const VcselModel& model, std::uint64_t seed)
{
    model.validate();
    preset.validate(model);
    LinkOutput out;
    std::vector<double> optical(tx.size());
    std::size_t clipped = 0;
    for (std::size_t i = 0; i < tx.size(); ++i) {
        double current = preset.i_dc + preset.drive_scale * tx[i];
        if (current < 0.0 || current > model.i_rollover)
            ++clipped;
        current = std::max(current, 0.0);
        optical[i] = vcsel_power(current, model);
    }
    out.clipped_fraction = tx.empty() ? 0.0 : static_cast<double>(clipped) / static_cast<double>(tx.size());
    out.clipping = out.clipped_fraction > kClippingWarnFraction;

    out.samples = filter_zero_phase(optical, sample_rate, preset);
    const double to_current = detected_current(preset, 1.0);
    for (auto& v : out.samples)
        v *= to_current;

    if (preset.noise_std > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, preset.noise_std);
        for (auto& v : out.samples)
            v += noise(rng);
    }
    return out;
}

} // namespace owc::channel

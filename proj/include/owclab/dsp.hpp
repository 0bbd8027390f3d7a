#pragma once

// Signal primitives shared by the transmitter and receiver: radix-2 FFT,
// Gray-labelled QAM constellations and root-raised-cosine taps.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace owc {

using Complex = std::complex<double>;
using Bits = std::vector<std::uint8_t>;

namespace dsp {

struct ComplexWaveform {
    std::vector<Complex> samples;
    double sample_rate = 1.0; // Hz

    void validate() const
    {
        if (!(sample_rate > 0.0) || !std::isfinite(sample_rate))
            throw std::invalid_argument("waveform sample rate must be positive");
        for (const auto& s : samples)
            if (!std::isfinite(s.real()) || !std::isfinite(s.imag()))
                throw std::invalid_argument("waveform contains non-finite samples");
    }
};

inline bool is_power_of_two(std::size_t n) { return n != 0 && std::has_single_bit(n); }

namespace detail {

// In-place iterative Cooley-Tukey. sign = -1 forward, +1 inverse (unscaled).
inline void fft_in_place(std::vector<Complex>& a, int sign)
{
    const std::size_t n = a.size();
    if (!is_power_of_two(n))
        throw std::invalid_argument("FFT length " + std::to_string(n) + " is not a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1)
            j ^= bit;
        j ^= bit;
        if (i < j)
            std::swap(a[i], a[j]);
    }

    // Twiddles are computed directly per stage to keep round-off at the
    // 1e-15 level even for long transforms.
    std::vector<Complex> w(n / 2);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const double theta = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
        for (std::size_t k = 0; k < half; ++k)
            w[k] = std::polar(1.0, theta * static_cast<double>(k));
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const Complex u = a[i + k];
                const Complex v = a[i + k + half] * w[k];
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

} // namespace detail

/// Forward DFT without scaling. Length must be a power of two.
inline std::vector<Complex> fft(std::span<const Complex> x)
{
    std::vector<Complex> a(x.begin(), x.end());
    detail::fft_in_place(a, -1);
    return a;
}

/// Inverse DFT with 1/N scaling, so that ifft(fft(x)) == x.
inline std::vector<Complex> ifft(std::span<const Complex> x)
{
    std::vector<Complex> a(x.begin(), x.end());
    detail::fft_in_place(a, +1);
    const double scale = 1.0 / static_cast<double>(a.size());
    for (auto& v : a)
        v *= scale;
    return a;
}

inline std::vector<Complex> fft_real(std::span<const double> x)
{
    std::vector<Complex> a(x.begin(), x.end());
    detail::fft_in_place(a, -1);
    return a;
}

/// Gray-labelled rectangular QAM with unit average symbol energy.
///
/// log2(M) bits split into ceil(b/2) in-phase bits (most significant) and
/// floor(b/2) quadrature bits; each axis is an independent Gray-coded PAM.
/// Square orders (4, 16, ..., 1024) are the usual square QAM; odd bit
/// counts give a 2:1 rectangle (M = 2 is BPSK).
class Constellation {
public:
    explicit Constellation(unsigned order)
        : order_(order)
    {
        if (order < 2 || order > 1024 || !is_power_of_two(order))
            throw std::invalid_argument("constellation order must be a power of two in [2, 1024], got " +
                                        std::to_string(order));
        bits_ = static_cast<unsigned>(std::countr_zero(order));
        i_bits_ = (bits_ + 1) / 2;
        q_bits_ = bits_ / 2;
        i_levels_ = 1u << i_bits_;
        q_levels_ = 1u << q_bits_;

        // Mean energy of a PAM with levels 2m-(L-1) is (L^2-1)/3.
        const double energy = (static_cast<double>(i_levels_) * i_levels_ - 1.0) / 3.0 +
                              (static_cast<double>(q_levels_) * q_levels_ - 1.0) / 3.0;
        scale_ = 1.0 / std::sqrt(energy);

        points_.resize(order_);
        for (unsigned label = 0; label < order_; ++label) {
            const unsigned i_pos = gray_to_index(label >> q_bits_);
            const unsigned q_pos = gray_to_index(label & (q_levels_ - 1));
            points_[label] = Complex(level(i_pos, i_levels_), level(q_pos, q_levels_)) * scale_;
        }
    }

    unsigned order() const { return order_; }
    unsigned bits_per_symbol() const { return bits_; }
    unsigned in_phase_levels() const { return i_levels_; }
    unsigned quadrature_levels() const { return q_levels_; }
    /// Distance between adjacent points.
    double min_distance() const { return 2.0 * scale_; }

    /// Point for a label whose bits are read MSB first.
    const Complex& point(unsigned label) const { return points_.at(label); }
    std::span<const Complex> points() const { return points_; }

    /// Label of the point nearest to s (per-axis slicing is exact
    /// minimum-distance detection on a rectangular grid).
    unsigned nearest_label(Complex s) const
    {
        const unsigned i_pos = slice(s.real() / scale_, i_levels_);
        const unsigned q_pos = q_levels_ == 1 ? 0u : slice(s.imag() / scale_, q_levels_);
        return (index_to_gray(i_pos) << q_bits_) | index_to_gray(q_pos);
    }

    /// Position of label along each axis, used for adjacency checks.
    std::pair<unsigned, unsigned> grid_position(unsigned label) const
    {
        return {gray_to_index(label >> q_bits_), gray_to_index(label & (q_levels_ - 1))};
    }

private:
    static double level(unsigned pos, unsigned levels)
    {
        return 2.0 * static_cast<double>(pos) - static_cast<double>(levels - 1);
    }

    static unsigned slice(double x, unsigned levels)
    {
        const double pos = std::round((x + static_cast<double>(levels - 1)) / 2.0);
        return static_cast<unsigned>(std::clamp(pos, 0.0, static_cast<double>(levels - 1)));
    }

    static unsigned index_to_gray(unsigned i) { return i ^ (i >> 1); }

    static unsigned gray_to_index(unsigned g)
    {
        unsigned i = g;
        for (unsigned shift = 1; shift < 32; shift <<= 1)
            i ^= i >> shift;
        return i;
    }

    unsigned order_ = 0;
    unsigned bits_ = 0;
    unsigned i_bits_ = 0;
    unsigned q_bits_ = 0;
    unsigned i_levels_ = 0;
    unsigned q_levels_ = 0;
    double scale_ = 1.0;
    std::vector<Complex> points_;
};

inline std::vector<Complex> qam_map(std::span<const std::uint8_t> bits, const Constellation& c)
{
    const unsigned b = c.bits_per_symbol();
    if (bits.size() % b != 0)
        throw std::invalid_argument("bit count " + std::to_string(bits.size()) +
                                    " is not a multiple of " + std::to_string(b));
    std::vector<Complex> symbols;
    symbols.reserve(bits.size() / b);
    for (std::size_t i = 0; i < bits.size(); i += b) {
        unsigned label = 0;
        for (unsigned j = 0; j < b; ++j)
            label = (label << 1) | (bits[i + j] & 1u);
        symbols.push_back(c.point(label));
    }
    return symbols;
}

/// Hard-decision demapping.
inline Bits qam_demap(std::span<const Complex> symbols, const Constellation& c)
{
    const unsigned b = c.bits_per_symbol();
    Bits bits;
    bits.reserve(symbols.size() * b);
    for (const auto& s : symbols) {
        const unsigned label = c.nearest_label(s);
        for (unsigned j = b; j-- > 0;)
            bits.push_back(static_cast<std::uint8_t>((label >> j) & 1u));
    }
    return bits;
}

/// Root-raised-cosine taps, span*sps+1 long, unit energy.
inline std::vector<double> rrc_taps(double rolloff, unsigned sps, unsigned span)
{
    if (!(rolloff >= 0.0 && rolloff <= 1.0))
        throw std::invalid_argument("RRC roll-off must lie in [0, 1]");
    if (sps < 1)
        throw std::invalid_argument("RRC needs at least one sample per symbol");
    if (span < 2 || span % 2 != 0)
        throw std::invalid_argument("RRC span must be an even number of symbols >= 2");

    constexpr double pi = std::numbers::pi;
    const double beta = rolloff;
    const std::size_t n = static_cast<std::size_t>(span) * sps + 1;
    const auto half = static_cast<long>(n / 2);
    std::vector<double> taps(n);

    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(static_cast<long>(i) - half) / sps; // in symbols
        double h;
        if (t == 0.0) {
            h = 1.0 - beta + 4.0 * beta / pi;
        } else if (beta > 0.0 && std::abs(std::abs(t) - 1.0 / (4.0 * beta)) < 1e-12) {
            h = beta / std::numbers::sqrt2 *
                ((1.0 + 2.0 / pi) * std::sin(pi / (4.0 * beta)) + (1.0 - 2.0 / pi) * std::cos(pi / (4.0 * beta)));
        } else {
            const double x = 4.0 * beta * t;
            h = (std::sin(pi * t * (1.0 - beta)) + x * std::cos(pi * t * (1.0 + beta))) / (pi * t * (1.0 - x * x));
        }
        taps[i] = h;
    }

    const double energy = std::inner_product(taps.begin(), taps.end(), taps.begin(), 0.0);
    const double norm = 1.0 / std::sqrt(energy);
    for (auto& v : taps)
        v *= norm;
    // Mirror to make symmetry exact.
    for (std::size_t i = 0; i < n / 2; ++i)
        taps[n - 1 - i] = taps[i];
    return taps;
}

/// Full linear convolution.
inline std::vector<double> convolve(std::span<const double> x, std::span<const double> h)
{
    if (x.empty() || h.empty())
        return {};
    std::vector<double> y(x.size() + h.size() - 1, 0.0);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double xi = x[i];
        if (xi == 0.0)
            continue;
        for (std::size_t j = 0; j < h.size(); ++j)
            y[i + j] += xi * h[j];
    }
    return y;
}

} // namespace dsp
} // namespace owc

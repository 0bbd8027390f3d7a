#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "owclab/dsp.hpp"

namespace owc {

/// Framing and sampling constants of the DCO-OFDM link.
struct OfdmConfig {
    std::size_t n_fft = 1024;
    std::size_t n_cp = 15;
    double rolloff = 0.1;
    double sample_rate = 32e9; // converter rate F_s, Sa/s
    unsigned n_sps = 1;
    unsigned rrc_span = 32; // symbols

    /// Data-carrying subcarriers (DC and Nyquist bins are empty).
    std::size_t n_sc() const { return n_fft / 2 - 1; }
    /// Signal bandwidth B = (F_s / 2) / N_SPS.
    double bandwidth() const { return sample_rate / 2.0 / n_sps; }
    /// OFDM sample rate before pulse shaping.
    double symbol_rate() const { return sample_rate / n_sps; }
    double subcarrier_spacing() const { return symbol_rate() / static_cast<double>(n_fft); }
    std::size_t frame_length() const { return n_fft + n_cp; }

    /// Centre frequency of data subcarrier k (0-based, bin k+1).
    double subcarrier_frequency(std::size_t k) const { return static_cast<double>(k + 1) * subcarrier_spacing(); }

    std::vector<double> subcarrier_frequencies() const
    {
        std::vector<double> f(n_sc());
        for (std::size_t k = 0; k < f.size(); ++k)
            f[k] = subcarrier_frequency(k);
        return f;
    }

    void validate() const
    {
        if (n_fft < 4 || !dsp::is_power_of_two(n_fft))
            throw std::invalid_argument("ofdm.n_fft must be a power of two >= 4");
        if (n_cp > n_fft)
            throw std::invalid_argument("ofdm.n_cp must not exceed n_fft");
        if (!(rolloff >= 0.0 && rolloff <= 1.0))
            throw std::invalid_argument("ofdm.rolloff must lie in [0, 1]");
        if (!(sample_rate > 0.0))
            throw std::invalid_argument("ofdm.sample_rate must be positive");
        if (n_sps < 1)
            throw std::invalid_argument("ofdm.n_sps must be >= 1");
        if (rrc_span < 2 || rrc_span % 2 != 0)
            throw std::invalid_argument("ofdm.rrc_span must be an even number >= 2");
    }
};

} // namespace owc

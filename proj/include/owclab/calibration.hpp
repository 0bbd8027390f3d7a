#pragma once

// Synthesizes link noise and spectral shaping that reproduce a target SNR
// profile, measured the same way the receiver measures it (pilot frames).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

#include "owclab/channel.hpp"
#include "owclab/modem.hpp"

namespace owc::channel {

/// Noise std giving a linear per-subcarrier SNR `snr` on a subcarrier with
/// unit frequency response, for unit-power loading in the linear LIV
/// region. Accounts for the frame normalization and the matched filter.
inline double noise_std_for_snr(const LinkPreset& preset, const VcselModel& model, const OfdmConfig& cfg, double snr)
{
    if (!(snr > 0.0))
        throw std::invalid_argument("target SNR must be positive");
    const double a = small_signal_gain(preset, model);
    // Per-bin signal power a^2 c^2 against noise power N sigma^2 in the FFT
    // of the matched-filter output, with c the drive normalization.
    const double c = modem::drive_normalization(cfg);
    const double n = static_cast<double>(cfg.n_fft);
    return a * c / std::sqrt(n * snr);
}

struct CalibrationResult {
    LinkPreset preset;
    SnrProfile achieved; // pilot estimate averaged in dB over the calibration probes
    double mean_abs_error_db = 0.0; // over calibrated subcarriers
    std::size_t calibrated_subcarriers = 0;
    bool reachable = false;
};

inline constexpr double kCalibrationToleranceDb = 1.0;
inline constexpr int kCalibrationProbes = 4; // independent noise seeds averaged per closed-loop step
inline constexpr std::size_t kSmoothHalf = 1;


/// Returns `preset` with noise_std and a tabulated shaping stage chosen so
/// that the pilot-estimated SNR matches `target` on every subcarrier whose
/// target is above 0 dB and whose response is non-zero. Starts from the
/// analytic small-signal solution and refines it in closed loop against
/// the simulated estimate.
inline CalibrationResult calibrate_noise(const LinkPreset& preset, const VcselModel& model, const SnrProfile& target,
                                         const OfdmConfig& cfg, std::uint64_t seed = 1, int iterations = 4)
{
    cfg.validate();
    target.validate();
    if (target.size() != cfg.n_sc())
        throw std::invalid_argument("calibration target must be defined on the subcarrier grid");

    LinkPreset base = preset;
    std::erase_if(base.stages, [](const ResponseStage& s) { return std::holds_alternative<Tabulated>(s); });

    const std::size_t n = cfg.n_sc();
    const auto freqs = cfg.subcarrier_frequencies();
    std::vector<double> response(n);
    std::vector<bool> active(n, false);
    for (std::size_t k = 0; k < n; ++k) {
        response[k] = frequency_response(base, freqs[k]).real();
        active[k] = target.snr_linear[k] > 1.0 && response[k] > 0.0;
    }

    // Unit-response SNR per unit noise variance.
    const double sigma_unit = noise_std_for_snr(base, model, cfg, 1.0);
    double ceiling = 0.0; // largest target/|H|^2 over active subcarriers
    for (std::size_t k = 0; k < n; ++k)
        if (active[k])
            ceiling = std::max(ceiling, target.snr_linear[k] / (response[k] * response[k]));

    CalibrationResult result;
    result.calibrated_subcarriers = static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
    if (result.calibrated_subcarriers == 0) {
        result.preset = base;
        result.achieved = modem::probe_link(base, model, cfg, seed).estimate.snr;
        result.reachable = false;
        return result;
    }

    // Shaping gains are at most one: noise is set by the most demanding
    // subcarrier, everything else is attenuated down to its target.
    const double sigma = sigma_unit / std::sqrt(ceiling);
    std::vector<double> shaping(n, 1.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double h2 = response[k] * response[k];
        if (h2 > 0.0) {
            const double want = std::max(target.snr_linear[k], 0.0);
            shaping[k] = std::sqrt(want / (ceiling * h2));
        }
    }

    auto make_preset = [&](const std::vector<double>& g) {
        LinkPreset p = base;
        Tabulated table;
        table.frequencies.push_back(0.0);
        table.gains.push_back(g.front());
        for (std::size_t k = 0; k < n; ++k) {
            table.frequencies.push_back(freqs[k]);
            table.gains.push_back(g[k]);
        }
        p.stages.push_back(std::move(table));
        p.noise_std = sigma;
        return p;
    };

    auto error_db = [&](const SnrProfile& est) {
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k)
            if (active[k])
                sum += std::abs(to_db(est.snr_linear[k]) - to_db(target.snr_linear[k]));
        return sum / static_cast<double>(result.calibrated_subcarriers);
    };

    // Per-subcarrier SNR averaged in dB over several noise seeds.
    auto measure = [&](const LinkPreset& p) {
        SnrProfile avg = modem::probe_link(p, model, cfg, seed).estimate.snr;
        for (auto& v : avg.snr_linear)
            v = to_db(v) / kCalibrationProbes;
        for (int i = 1; i < kCalibrationProbes; ++i) {
            const auto est = modem::probe_link(p, model, cfg, seed + static_cast<std::uint64_t>(i)).estimate.snr;
            for (std::size_t k = 0; k < n; ++k)
                avg.snr_linear[k] += to_db(est.snr_linear[k]) / kCalibrationProbes;
        }
        for (auto& v : avg.snr_linear)
            v = from_db(v);
        return avg;
    };

    LinkPreset best_preset = make_preset(shaping);
    SnrProfile best_est = measure(best_preset);
    double best_err = error_db(best_est);

    for (int it = 0; it < iterations && best_err > 0.05; ++it) {
        // Corrections are averaged over active neighbours: a jagged shaping
        // table has a long impulse response and adds inter-frame ISI.
        std::vector<double> correction_db(n, 0.0);
        for (std::size_t k = 0; k < n; ++k)
            if (active[k] && best_est.snr_linear[k] > 0.0)
                correction_db[k] = std::clamp(to_db(target.snr_linear[k] / best_est.snr_linear[k]), -6.0, 6.0);
        std::vector<double> next = shaping;
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k])
                continue;
            double sum = 0.0;
            std::size_t count = 0;
            for (std::size_t j = k >= 4 ? k - 4 : 0; j <= std::min(n - 1, k + 4); ++j) {
                if (active[j]) {
                    sum += correction_db[j];
                    ++count;
                }
            }
            next[k] = shaping[k] * std::pow(10.0, sum / static_cast<double>(count) / 20.0);
        }
        const LinkPreset candidate = make_preset(next);
        const SnrProfile est = measure(candidate);
        const double err = error_db(est);
        if (err >= best_err)
            break;
        shaping = std::move(next);
        best_preset = candidate;
        best_est = est;
        best_err = err;
    }

    result.preset = std::move(best_preset);
    result.achieved = std::move(best_est);
    result.mean_abs_error_db = best_err;
    result.reachable = best_err <= kCalibrationToleranceDb;
    return result;
}

} // namespace owc::channel

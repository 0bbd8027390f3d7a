#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "owclab/channel.hpp"
#include "owclab/loading.hpp"
#include "owclab/modem.hpp"

namespace owc::analysis {

struct SweepRow {
    double target_ber = 0.0;
    double gamma = 0.0;
    std::size_t total_bits = 0; // per OFDM frame
    double rate_bps = 0.0;
    double measured_ber = 0.0;  // mean over seeds
    std::size_t seed_count = 0;
};

struct SweepSettings {
    double power_budget = 0.0; // <= 0 selects one unit per subcarrier
    unsigned b_max = loading::kDefaultMaxBits;
};

/// BER against achievable rate. The channel is estimated once with the
/// first seed; each target gets its own Hughes-Hartogs plan, streamed once
/// per seed. Rows come back sorted by target BER.
inline std::vector<SweepRow> ber_rate_sweep(const channel::LinkPreset& preset, const channel::VcselModel& model,
                                            const OfdmConfig& cfg, std::vector<double> targets,
                                            const std::vector<std::uint64_t>& seeds, const SweepSettings& settings = {})
{
    if (targets.empty())
        throw std::invalid_argument("sweep needs at least one target BER");
    if (seeds.empty())
        throw std::invalid_argument("sweep needs at least one seed");
    std::sort(targets.begin(), targets.end());
    const double budget = settings.power_budget > 0.0 ? settings.power_budget : static_cast<double>(cfg.n_sc());

    const auto probe = modem::probe_link(preset, model, cfg, seeds.front());
    std::vector<SweepRow> rows;
    rows.reserve(targets.size());
    for (double target : targets) {
        try {
            const auto gap = loading::snr_gap(target);
            const auto plan = loading::hughes_hartogs(probe.estimate.snr, gap, budget, settings.b_max, cfg);
            SweepRow row;
            row.target_ber = target;
            row.gamma = gap.gamma;
            row.total_bits = plan.total_bits;
            row.rate_bps = plan.rate;
            row.seed_count = seeds.size();
            const std::size_t nbits = modem::data_bits_required(plan);
            double ber_sum = 0.0;
            for (auto seed : seeds) {
                if (nbits == 0)
                    continue;
                const auto bits = modem::random_bits(nbits, seed ^ 0xb17500d5ull);
                ber_sum += modem::run_stream(bits, plan, preset, model, cfg, seed).ber;
            }
            row.measured_ber = ber_sum / static_cast<double>(seeds.size());
            rows.push_back(row);
        } catch (const std::exception& e) {
            throw std::runtime_error("sweep failed at target BER " + std::to_string(target) + ": " + e.what());
        }
    }
    return rows;
}

} // namespace owc::analysis

#pragma once

// SNR-gap analysis and adaptive bit/power allocation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "owclab/ofdm_config.hpp"

namespace owc {

/// Linear SNR sampled on a uniform, strictly increasing frequency grid.
struct SnrProfile {
    std::vector<double> frequencies; // Hz
    std::vector<double> snr_linear;

    std::size_t size() const { return snr_linear.size(); }

    void validate() const
    {
        if (frequencies.size() != snr_linear.size())
            throw std::invalid_argument("SNR profile frequency/value lengths differ");
        for (std::size_t i = 1; i < frequencies.size(); ++i)
            if (!(frequencies[i] > frequencies[i - 1]))
                throw std::invalid_argument("SNR profile frequencies must be strictly increasing");
        for (double s : snr_linear)
            if (!(s >= 0.0))
                throw std::invalid_argument("SNR profile contains a negative or NaN value");
    }

    /// Linear interpolation in linear SNR; clamps to the end values.
    double at(double f) const
    {
        if (snr_linear.empty())
            throw std::invalid_argument("empty SNR profile");
        if (f <= frequencies.front())
            return snr_linear.front();
        if (f >= frequencies.back())
            return snr_linear.back();
        const auto it = std::upper_bound(frequencies.begin(), frequencies.end(), f);
        const auto i = static_cast<std::size_t>(it - frequencies.begin());
        const double t = (f - frequencies[i - 1]) / (frequencies[i] - frequencies[i - 1]);
        return snr_linear[i - 1] + t * (snr_linear[i] - snr_linear[i - 1]);
    }
};

inline double to_db(double linear) { return 10.0 * std::log10(linear); }
inline double from_db(double db) { return std::pow(10.0, db / 10.0); }

namespace loading {

inline constexpr unsigned kDefaultMaxBits = 10;

struct GapParams {
    double target_ber = 0.0;
    double gamma = 1.0; // linear
};

/// Gamma = -ln(5 BER) / 1.5.
inline GapParams snr_gap(double target_ber)
{
    if (!(target_ber > 0.0 && target_ber < 0.2))
        throw std::invalid_argument("target BER must lie in (0, 0.2), got " + std::to_string(target_ber));
    return {target_ber, -std::log(5.0 * target_ber) / 1.5};
}

/// Largest b with 2^b <= 1 + snr/gamma, capped at b_max.
inline unsigned max_bits(double snr, const GapParams& gap, unsigned b_max = kDefaultMaxBits)
{
    if (!(snr >= 0.0))
        throw std::invalid_argument("subcarrier SNR must be non-negative");
    const double ratio = 1.0 + snr / gap.gamma;
    unsigned b = 0;
    while (b < b_max && std::ldexp(1.0, static_cast<int>(b + 1)) <= ratio)
        ++b;
    return b;
}

struct LoadingPlan {
    std::vector<unsigned> bits;
    std::vector<double> power_scales;
    std::size_t total_bits = 0;
    double rate = 0.0; // bit/s

    std::size_t n_sc() const { return bits.size(); }
    unsigned order(std::size_t k) const { return 1u << bits[k]; }
    double total_power() const
    {
        double p = 0.0;
        for (double v : power_scales)
            p += v;
        return p;
    }
};

/// R = 2B / (N_FFT + N_CP) * total_bits.
inline double data_rate(std::size_t total_bits, const OfdmConfig& cfg)
{
    return 2.0 * cfg.bandwidth() / static_cast<double>(cfg.frame_length()) * static_cast<double>(total_bits);
}

/// Equal bits and unit power on every subcarrier.
inline LoadingPlan uniform_plan(const OfdmConfig& cfg, unsigned bits)
{
    LoadingPlan plan;
    plan.bits.assign(cfg.n_sc(), bits);
    plan.power_scales.assign(cfg.n_sc(), bits > 0 ? 1.0 : 0.0);
    plan.total_bits = cfg.n_sc() * bits;
    plan.rate = data_rate(plan.total_bits, cfg);
    return plan;
}

/// Greedy Hughes-Hartogs loading. Each step adds one bit to the subcarrier
/// whose next bit costs the least power, 2^b * gamma / g_k, where g_k is the
/// SNR the subcarrier achieves at unit power. Stops when the cheapest next
/// bit no longer fits the budget or every subcarrier is at b_max. Ties go
/// to the lowest index.
inline LoadingPlan hughes_hartogs(const SnrProfile& profile, const GapParams& gap, double power_budget,
                                  unsigned b_max = kDefaultMaxBits)
{
    const std::size_t n = profile.size();
    if (n == 0)
        throw std::invalid_argument("Hughes-Hartogs needs a non-empty profile");
    if (!(power_budget > 0.0))
        throw std::invalid_argument("power budget must be positive");
    profile.validate();

    struct Candidate {
        double cost;
        std::size_t k;
        bool operator>(const Candidate& o) const { return cost != o.cost ? cost > o.cost : k > o.k; }
    };
    std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> heap;

    LoadingPlan plan;
    plan.bits.assign(n, 0);
    plan.power_scales.assign(n, 0.0);

    auto cost = [&](std::size_t k) {
        return std::ldexp(1.0, static_cast<int>(plan.bits[k])) * gap.gamma / profile.snr_linear[k];
    };
    for (std::size_t k = 0; k < n; ++k)
        if (profile.snr_linear[k] > 0.0 && b_max > 0)
            heap.push({cost(k), k});

    double used = 0.0;
    while (!heap.empty()) {
        const Candidate c = heap.top();
        if (used + c.cost > power_budget * (1.0 + 1e-12))
            break;
        heap.pop();
        used += c.cost;
        plan.power_scales[c.k] += c.cost;
        if (++plan.bits[c.k] < b_max)
            heap.push({cost(c.k), c.k});
    }

    // Power for b bits is (2^b - 1) gamma / g; recompute from the closed
    // form so the meets-with-equality property is exact.
    for (std::size_t k = 0; k < n; ++k) {
        if (plan.bits[k] > 0)
            plan.power_scales[k] =
                (std::ldexp(1.0, static_cast<int>(plan.bits[k])) - 1.0) * gap.gamma / profile.snr_linear[k];
        plan.total_bits += plan.bits[k];
    }
    return plan;
}

inline LoadingPlan hughes_hartogs(const SnrProfile& profile, const GapParams& gap, double power_budget,
                                  unsigned b_max, const OfdmConfig& cfg)
{
    LoadingPlan plan = hughes_hartogs(profile, gap, power_budget, b_max);
    plan.rate = data_rate(plan.total_bits, cfg);
    return plan;
}

/// Real-valued upper bound 2B/(N_FFT+N_CP) * sum log2(1 + SNR_k / gamma).
inline double rate_bound_discrete(const SnrProfile& profile, const GapParams& gap, const OfdmConfig& cfg)
{
    if (profile.size() != cfg.n_sc())
        throw std::invalid_argument("profile length does not match the subcarrier count");
    double sum = 0.0;
    for (double s : profile.snr_linear) {
        if (!(s >= 0.0))
            throw std::invalid_argument("negative SNR in profile");
        sum += std::log2(1.0 + s / gap.gamma);
    }
    return 2.0 * cfg.bandwidth() / static_cast<double>(cfg.frame_length()) * sum;
}

namespace detail {

template <typename SnrFn>
double trapezoid_log_rate(const SnrFn& snr, double f_max, std::size_t steps, double gamma)
{
    const double h = f_max / static_cast<double>(steps);
    auto integrand = [&](double f) {
        const double s = snr(f);
        if (!(s >= 0.0))
            throw std::invalid_argument("SNR function returned a negative value at f = " + std::to_string(f));
        return std::log2(1.0 + s / gamma);
    };
    double sum = 0.5 * (integrand(0.0) + integrand(f_max));
    for (std::size_t i = 1; i < steps; ++i)
        sum += integrand(h * static_cast<double>(i));
    return sum * h;
}

} // namespace detail

inline constexpr double kQuadratureMaxStep = 1e6;  // Hz
inline constexpr double kQuadratureRelTol = 1e-4;

/// Integral bound  int_0^f_max log2(1 + SNR(f)/gamma) df  by composite
/// trapezoid, step at most 1 MHz, refined by halving until two successive
/// estimates agree to kQuadratureRelTol.
template <typename SnrFn>
double rate_bound_integral(const SnrFn& snr, double f_max, const GapParams& gap)
{
    if (!(f_max >= 0.0))
        throw std::invalid_argument("f_max must be non-negative");
    if (f_max == 0.0)
        return 0.0;
    auto steps = static_cast<std::size_t>(std::ceil(f_max / kQuadratureMaxStep));
    steps = std::max<std::size_t>(steps, 16);
    double coarse = detail::trapezoid_log_rate(snr, f_max, steps, gap.gamma);
    for (int iter = 0; iter < 8; ++iter) {
        steps *= 2;
        const double fine = detail::trapezoid_log_rate(snr, f_max, steps, gap.gamma);
        const bool converged = std::abs(fine - coarse) <= kQuadratureRelTol * std::abs(fine);
        coarse = fine;
        if (converged || fine == 0.0)
            break;
    }
    return coarse;
}

inline double rate_bound_integral(const SnrProfile& profile, double f_max, const GapParams& gap)
{
    profile.validate();
    if (f_max > profile.frequencies.back() * (1.0 + 1e-12))
        throw std::invalid_argument("f_max lies beyond the SNR profile");
    return rate_bound_integral([&](double f) { return profile.at(f); }, f_max, gap);
}

} // namespace loading
} // namespace owc

#pragma once

// Multi-mode fibre bandwidth and reach under chromatic plus modal
// dispersion, assuming Gaussian impulse responses for both.

#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace owc::fiber {

struct SpectrumRecord {
    std::vector<double> wavelengths; // nm, increasing
    std::vector<double> power;       // linear, >= 0
};

struct SpectralWidth {
    double mean_nm = 0.0;
    double rms_nm = 0.0;
};

/// Power-weighted mean and standard deviation of wavelength. Integrals use
/// trapezoid node weights on the sampled grid; a single sample is a line.
inline SpectralWidth rms_spectral_width(const SpectrumRecord& s)
{
    const std::size_t n = s.wavelengths.size();
    if (n == 0 || s.power.size() != n)
        throw std::invalid_argument("spectrum needs matching, non-empty wavelength and power columns");
    for (std::size_t i = 1; i < n; ++i)
        if (!(s.wavelengths[i] > s.wavelengths[i - 1]))
            throw std::invalid_argument("spectrum wavelengths must be strictly increasing");

    std::vector<double> w(n, 1.0);
    if (n > 1) {
        w[0] = 0.5 * (s.wavelengths[1] - s.wavelengths[0]);
        w[n - 1] = 0.5 * (s.wavelengths[n - 1] - s.wavelengths[n - 2]);
        for (std::size_t i = 1; i + 1 < n; ++i)
            w[i] = 0.5 * (s.wavelengths[i + 1] - s.wavelengths[i - 1]);
    }
    double total = 0.0;
    double first = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(s.power[i] >= 0.0))
            throw std::invalid_argument("spectrum power must be non-negative");
        total += w[i] * s.power[i];
        first += w[i] * s.power[i] * s.wavelengths[i];
    }
    if (!(total > 0.0))
        throw std::invalid_argument("spectrum has no power");
    const double mean = first / total;
    double second = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = s.wavelengths[i] - mean;
        second += w[i] * s.power[i] * d * d;
    }
    return {mean, std::sqrt(second / total)};
}

/// Two whitespace- or comma-separated columns (wavelength_nm, power);
/// '#' starts a comment line.
inline SpectrumRecord parse_spectrum(std::istream& in)
{
    SpectrumRecord s;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#')
            continue;
        for (auto& c : line)
            if (c == ',' || c == ';')
                c = ' ';
        std::istringstream row(line);
        double wl = 0.0;
        double p = 0.0;
        if (!(row >> wl >> p))
            throw std::invalid_argument("spectrum line " + std::to_string(lineno) + ": expected two numbers");
        s.wavelengths.push_back(wl);
        s.power.push_back(p);
    }
    return s;
}

struct FiberParams {
    double d_coeff = 65.0;      // ps/(nm km)
    double sigma_lambda = 0.351; // nm
    double emb = 4700.0;        // MHz km
    double alpha = 2.3;         // dB/km
    double length = 0.001;      // km

    void validate() const
    {
        if (!(emb > 0.0))
            throw std::invalid_argument("fiber EMB must be positive");
        if (!(length > 0.0))
            throw std::invalid_argument("fiber length must be positive");
        if (!(alpha >= 0.0))
            throw std::invalid_argument("fiber attenuation must be non-negative");
        if (!(sigma_lambda >= 0.0))
            throw std::invalid_argument("RMS spectral width must be non-negative");
    }
};

struct DispersionReport {
    double sigma_cd_ps = 0.0;
    double sigma_md_ps = 0.0;
    double sigma_total_ps = 0.0;
    double f3db_cd_hz = 0.0; // +inf when there is no chromatic spread
    double f3db_md_hz = 0.0;
    double f3db_hz = 0.0;
    double attenuation_db = 0.0;
    double l_max_km = 0.0;
};

inline const double kSqrtLn2 = std::sqrt(std::numbers::ln2);

/// Per-km delay spread terms in s/km: chromatic 2 pi |D| sigma / sqrt(ln 2)
/// expressed as a bandwidth-distance reciprocal, and modal 1 / EMB.
inline double bandwidth_distance_reciprocal(double d_coeff, double sigma_lambda, double emb)
{
    const double cd = 2.0 * std::numbers::pi * std::abs(d_coeff) * sigma_lambda * 1e-12; // s/km
    const double md = 1.0 / (emb * 1e6);                                                 // s/km
    return std::sqrt(cd * cd / std::numbers::ln2 + md * md);
}

/// Maximum length (km) with f_3dB >= B.
inline double max_reach(double d_coeff, double sigma_lambda, double emb, double signal_bandwidth)
{
    if (!(signal_bandwidth > 0.0))
        throw std::invalid_argument("signal bandwidth must be positive");
    if (!(emb > 0.0))
        throw std::invalid_argument("fiber EMB must be positive");
    return 1.0 / (signal_bandwidth * bandwidth_distance_reciprocal(d_coeff, sigma_lambda, emb));
}

inline double max_reach(const FiberParams& p, double signal_bandwidth)
{
    return max_reach(p.d_coeff, p.sigma_lambda, p.emb, signal_bandwidth);
}

/// Closed-form f_3dB = 1 / (L sqrt((2 pi |D| sigma)^2 / ln2 + 1/EMB^2)).
inline double f3db_direct(const FiberParams& p)
{
    return 1.0 / (p.length * bandwidth_distance_reciprocal(p.d_coeff, p.sigma_lambda, p.emb));
}

namespace detail {

inline DispersionReport spread_terms(const FiberParams& p)
{
    p.validate();
    DispersionReport r;
    const double two_pi = 2.0 * std::numbers::pi;
    r.sigma_cd_ps = std::abs(p.d_coeff) * p.sigma_lambda * p.length;
    r.f3db_cd_hz = r.sigma_cd_ps > 0.0 ? kSqrtLn2 / (two_pi * r.sigma_cd_ps * 1e-12)
                                       : std::numeric_limits<double>::infinity();
    r.f3db_md_hz = p.emb * 1e6 / p.length;
    r.sigma_md_ps = kSqrtLn2 / (two_pi * r.f3db_md_hz) * 1e12;
    r.sigma_total_ps = std::hypot(r.sigma_cd_ps, r.sigma_md_ps);
    // Pure modal limit is returned as is so sigma = 0 gives EMB/L exactly.
    r.f3db_hz = r.sigma_cd_ps > 0.0 ? f3db_direct(p) : r.f3db_md_hz;
    r.attenuation_db = p.alpha * p.length;
    r.l_max_km = std::numeric_limits<double>::quiet_NaN();
    return r;
}

} // namespace detail

inline DispersionReport dispersion_report(const FiberParams& p, double signal_bandwidth)
{
    auto r = detail::spread_terms(p);
    r.l_max_km = max_reach(p, signal_bandwidth);
    return r;
}

/// Reciprocal-square combination of the two individual cutoffs.
inline double combine_cutoffs(double f3db_cd, double f3db_md)
{
    const double inv_cd = std::isinf(f3db_cd) ? 0.0 : 1.0 / (f3db_cd * f3db_cd);
    return 1.0 / std::sqrt(inv_cd + 1.0 / (f3db_md * f3db_md));
}

// Measured VCSEL spectra at three bias currents. The raw traces are not
// available, so these are display constants only.
struct SpectrumReference {
    double bias_ma;
    double peak_nm;
    double rms_width_nm;
};

inline constexpr SpectrumReference kMeasuredSpectra[] = {
    {5.0, 939.2, 0.22},
    {10.0, 0.0, 0.351}, // peak not reported for this trace
    {15.0, 941.2, 0.591},
};

// Datasheet EMB and loss are specified at 850 nm; at 940 nm EMB is higher
// and loss lower, so using them is conservative.
inline constexpr double kOm4Emb = 4700.0;  // MHz km
inline constexpr double kOm4Alpha = 2.3;   // dB/km
inline constexpr double kWidebandD = 65.0; // ps/(nm km)

} // namespace owc::fiber

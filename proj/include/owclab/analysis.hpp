#pragma once

// Receiver-side measurement: pilot channel/SNR estimation, smoothing,
// piecewise-linear SNR regression and extrapolation, BER counting.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "owclab/dsp.hpp"
#include "owclab/loading.hpp"

namespace owc::analysis {

using FrameMatrix = std::vector<std::vector<Complex>>; // [frame][subcarrier]

/// Stand-in for infinite SNR (60 dB).
inline constexpr double kSnrCap = 1e6;

struct ChannelEstimate {
    std::vector<Complex> gains;
    std::vector<double> noise_var;
    SnrProfile snr;
};

/// Per-subcarrier least-squares gain (mean of rx/tx over frames), residual
/// variance (unbiased, F-1 degrees of freedom) and SNR = |g|^2 / var for
/// unit-energy pilots.
inline ChannelEstimate estimate_channel(const FrameMatrix& pilot_tx, const FrameMatrix& pilot_rx,
                                        std::span<const double> frequencies)
{
    if (pilot_tx.size() != pilot_rx.size())
        throw std::invalid_argument("pilot tx/rx frame counts differ");
    const std::size_t frames = pilot_tx.size();
    if (frames < 2)
        throw std::invalid_argument("channel estimation needs at least 2 pilot frames");
    const std::size_t n = pilot_tx.front().size();
    if (frequencies.size() != n)
        throw std::invalid_argument("frequency grid does not match the pilot width");
    for (std::size_t f = 0; f < frames; ++f)
        if (pilot_tx[f].size() != n || pilot_rx[f].size() != n)
            throw std::invalid_argument("pilot frames have inconsistent widths");

    ChannelEstimate est;
    est.gains.assign(n, Complex{});
    est.noise_var.assign(n, 0.0);
    est.snr.frequencies.assign(frequencies.begin(), frequencies.end());
    est.snr.snr_linear.assign(n, 0.0);

    for (std::size_t k = 0; k < n; ++k) {
        Complex sum{};
        for (std::size_t f = 0; f < frames; ++f) {
            if (pilot_tx[f][k] == Complex{})
                throw std::invalid_argument("zero pilot symbol on subcarrier " + std::to_string(k));
            sum += pilot_rx[f][k] / pilot_tx[f][k];
        }
        const Complex g = sum / static_cast<double>(frames);
        double ss = 0.0;
        for (std::size_t f = 0; f < frames; ++f)
            ss += std::norm(pilot_rx[f][k] - g * pilot_tx[f][k]);
        const double var = ss / static_cast<double>(frames - 1);
        est.gains[k] = g;
        est.noise_var[k] = var;
        const double power = std::norm(g);
        est.snr.snr_linear[k] = (var <= 0.0 || power >= kSnrCap * var) ? kSnrCap : power / var;
    }
    return est;
}

/// Centred moving mean with windows that shrink at the edges. Even windows
/// cover w/2 samples before and w/2-1 after the centre.
inline std::vector<double> moving_average(std::span<const double> values, std::size_t window)
{
    if (values.empty())
        throw std::invalid_argument("moving average of an empty sequence");
    if (window < 1 || window > values.size())
        throw std::invalid_argument("moving-average window must lie in [1, length]");
    const std::size_t back = window / 2;
    const std::size_t fwd = window - 1 - back;
    std::vector<double> prefix(values.size() + 1, 0.0);
    for (std::size_t i = 0; i < values.size(); ++i)
        prefix[i + 1] = prefix[i] + values[i];
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const std::size_t lo = i >= back ? i - back : 0;
        const std::size_t hi = std::min(values.size() - 1, i + fwd);
        out[i] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
    }
    return out;
}

inline double measure_ber(std::span<const std::uint8_t> tx, std::span<const std::uint8_t> rx)
{
    if (tx.size() != rx.size())
        throw std::invalid_argument("BER: sequence lengths differ");
    if (tx.empty())
        throw std::invalid_argument("BER: empty sequences");
    std::size_t errors = 0;
    for (std::size_t i = 0; i < tx.size(); ++i)
        errors += (tx[i] & 1u) != (rx[i] & 1u);
    return static_cast<double>(errors) / static_cast<double>(tx.size());
}

struct Line {
    double intercept_db = 0.0; // value at f = 0
    double slope_db_per_hz = 0.0;
    double at(double f) const { return intercept_db + slope_db_per_hz * f; }
};

/// Two connected segments over [0, f1) and [f1, f2]; past f2 the measured
/// SNR falls linearly (in dB) to 0 dB at f_cutoff.
struct PwlModel {
    double f1 = 0.0;
    double f2 = 0.0;
    double f_cutoff = 0.0;
    Line seg1;
    Line seg2;
    std::optional<double> f_ext;
    bool f2_at_cutoff = false;   // best fit has no drop before f_cutoff
    bool extrapolatable = false; // segment 2 slope is negative
    double residual = 0.0;       // sum of squared errors of the fit, dB^2

    /// Approximated SNR in dB, -inf past f_cutoff.
    double approximated_db(double f) const
    {
        if (f < f1)
            return seg1.at(f);
        if (f <= f2)
            return seg2.at(f);
        if (f <= f_cutoff) {
            if (f_cutoff <= f2)
                return seg2.at(f);
            return seg2.at(f2) * (f_cutoff - f) / (f_cutoff - f2);
        }
        return -std::numeric_limits<double>::infinity();
    }

    /// Extrapolated SNR in dB: segment 2 carried on until it reaches 0 dB.
    double extrapolated_db(double f) const
    {
        if (!f_ext)
            throw std::logic_error("model has not been extrapolated");
        if (f < f1)
            return seg1.at(f);
        if (f <= *f_ext)
            return std::max(0.0, seg2.at(f));
        return -std::numeric_limits<double>::infinity();
    }

    double approximated(double f) const { return db_to_linear(approximated_db(f)); }
    double extrapolated(double f) const { return db_to_linear(extrapolated_db(f)); }

private:
    static double db_to_linear(double db) { return std::isinf(db) && db < 0 ? 0.0 : from_db(db); }
};

inline constexpr std::size_t kDefaultSmoothingWindow = 10;
inline constexpr double kUsableSnrDb = 1.0;
inline constexpr double kDbFloor = 0.0; // the model is never below 0 dB inside the band
inline constexpr double kFlatSlope = 1e-12; // dB/Hz, i.e. 1e-3 dB/GHz

namespace detail {

// Solve a small symmetric system in place; returns false if singular.
template <std::size_t N>
bool solve(std::array<std::array<double, N>, N> a, std::array<double, N> b, std::array<double, N>& x)
{
    for (std::size_t c = 0; c < N; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < N; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c]))
                piv = r;
        if (std::abs(a[piv][c]) < 1e-300)
            return false;
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < N; ++r) {
            const double m = a[r][c] / a[c][c];
            for (std::size_t k = c; k < N; ++k)
                a[r][k] -= m * a[c][k];
            b[r] -= m * b[c];
        }
    }
    for (std::size_t c = N; c-- > 0;) {
        double s = b[c];
        for (std::size_t k = c + 1; k < N; ++k)
            s -= a[c][k] * x[k];
        x[c] = s / a[c][c];
    }
    return true;
}

// Continuous three-parameter model (a, b, c) in normalized frequency x:
//   x <  x1 : a + b x
//   x <= x2 : a + b x + c (x - x1)
//   x >  x2 : value at x2 scaled by (xc - x) / (xc - x2)
struct Basis {
    double x1, x2, xc;
    bool drop; // false: no third piece
    std::array<double, 3> operator()(double x) const
    {
        if (x < x1)
            return {1.0, x, 0.0};
        if (!drop || x <= x2)
            return {1.0, x, x - x1};
        const double w = (xc - x) / (xc - x2);
        return {w, w * x2, w * (x2 - x1)};
    }
};

struct Fit {
    std::array<double, 3> coef{};
    double sse = std::numeric_limits<double>::infinity();
};

inline Fit least_squares(std::span<const double> x, std::span<const double> y, const Basis& basis)
{
    std::array<std::array<double, 3>, 3> ata{};
    std::array<double, 3> aty{};
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto row = basis(x[i]);
        for (std::size_t r = 0; r < 3; ++r) {
            aty[r] += row[r] * y[i];
            for (std::size_t c = 0; c < 3; ++c)
                ata[r][c] += row[r] * row[c];
        }
    }
    Fit fit;
    if (!solve<3>(ata, aty, fit.coef))
        return fit;
    double sse = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const auto row = basis(x[i]);
        const double e = y[i] - (row[0] * fit.coef[0] + row[1] * fit.coef[1] + row[2] * fit.coef[2]);
        sse += e * e;
    }
    fit.sse = sse;
    return fit;
}

} // namespace detail

/// Two-breakpoint piecewise-linear regression of SNR in dB.
///
/// Points at or above f_cutoff are ignored, and values below 0 dB are
/// raised to 0 dB before fitting. The moving-average curve marks the
/// usable band: the last smoothed point at or above 1 dB bounds f2 from
/// above. f1 and f2 are then grid-searched over the profile frequencies,
/// each candidate solved by least squares on the raw dB values with the
/// segments joined at f1 and the cutoff drop joined at f2. When a fit
/// without any drop wins, f2 is pinned to f_cutoff and flagged.
inline PwlModel pwl_fit(const SnrProfile& profile, double f_cutoff, std::size_t window = kDefaultSmoothingWindow)
{
    profile.validate();
    std::vector<double> f;
    std::vector<double> y;
    for (std::size_t i = 0; i < profile.size(); ++i) {
        if (profile.frequencies[i] >= f_cutoff * (1.0 - 1e-12))
            break;
        const double s = profile.snr_linear[i];
        f.push_back(profile.frequencies[i]);
        y.push_back(s > 0.0 ? std::max(kDbFloor, to_db(s)) : kDbFloor);
    }
    const std::size_t n = f.size();
    if (n < 20)
        throw std::invalid_argument("PWL fit needs at least 20 points below f_cutoff, got " + std::to_string(n));

    const auto smooth = moving_average(y, std::min(window, n));
    std::size_t usable_end = n - 1;
    while (usable_end > 0 && smooth[usable_end] < kUsableSnrDb)
        --usable_end;

    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = f[i] / f_cutoff;
    const double xc = 1.0;

    struct Best {
        detail::Fit fit;
        std::size_t i1 = 0, i2 = 0;
        bool drop = false;
    } best;

    auto consider = [&](std::size_t i1, std::size_t i2, bool drop) {
        const detail::Basis basis{x[i1], drop ? x[i2] : xc, xc, drop};
        const auto fit = detail::least_squares(x, y, basis);
        // Ties keep the earlier (lower f1, no-drop-first) candidate.
        if (fit.sse < best.fit.sse * (1.0 - 1e-12) - 1e-18) {
            best.fit = fit;
            best.i1 = i1;
            best.i2 = i2;
            best.drop = drop;
        }
    };

    // Both shapes compete on squared error: a drop to 0 dB at f_cutoff
    // starting at f2, or segment 2 running all the way to f_cutoff.
    const std::size_t i1_max = n - 3;
    for (std::size_t i1 = 2; i1 <= i1_max; ++i1)
        consider(i1, n - 1, false);
    const std::size_t i2_max = std::min(usable_end, n - 2);
    for (std::size_t i1 = 2; i1 <= i1_max; ++i1)
        for (std::size_t i2 = i1 + 2; i2 <= i2_max; ++i2)
            consider(i1, i2, true);
    if (!std::isfinite(best.fit.sse))
        throw std::runtime_error("PWL fit failed: no well-posed breakpoint candidate");

    const auto [a, b, c] = best.fit.coef;
    PwlModel m;
    m.f_cutoff = f_cutoff;
    m.f1 = f[best.i1];
    m.f2 = best.drop ? f[best.i2] : f_cutoff;
    m.f2_at_cutoff = !best.drop;
    m.seg1 = {a, b / f_cutoff};
    m.seg2 = {a - c * x[best.i1], (b + c) / f_cutoff};
    m.extrapolatable = m.seg2.slope_db_per_hz < -kFlatSlope;
    m.residual = best.fit.sse;
    return m;
}

/// Frequency where segment 2 reaches 0 dB.
inline PwlModel extrapolate(PwlModel model)
{
    if (!(model.seg2.slope_db_per_hz < -kFlatSlope))
        throw std::invalid_argument("segment 2 slope is not negative; SNR never crosses 0 dB");
    model.f_ext = -model.seg2.intercept_db / model.seg2.slope_db_per_hz;
    model.extrapolatable = true;
    return model;
}

/// Model with a flat first segment at level_db that meets a line through
/// (f_ext, 0 dB) at f1. Used to build profiles with prescribed breakpoints.
inline PwlModel anchored_model(double f1, double f2, double f_ext, double f_cutoff, double level_db)
{
    if (!(f1 < f2 && f2 < f_cutoff && f_cutoff < f_ext))
        throw std::invalid_argument("anchors must satisfy f1 < f2 < f_cutoff < f_ext");
    PwlModel m;
    m.f1 = f1;
    m.f2 = f2;
    m.f_cutoff = f_cutoff;
    m.seg1 = {level_db, 0.0};
    const double slope = -level_db / (f_ext - f1);
    m.seg2 = {-slope * f_ext, slope};
    m.f_ext = f_ext;
    m.extrapolatable = slope < 0.0;
    return m;
}

/// Integral bound on the approximated SNR up to f_cutoff.
inline double bound_approximated(const PwlModel& m, const loading::GapParams& gap)
{
    return loading::rate_bound_integral([&](double f) { return m.approximated(f); }, m.f_cutoff, gap);
}

/// Integral bound on the extrapolated SNR up to f_ext.
inline double bound_extrapolated(const PwlModel& m, const loading::GapParams& gap)
{
    if (!m.f_ext)
        throw std::logic_error("model has not been extrapolated");
    return loading::rate_bound_integral([&](double f) { return m.extrapolated(f); }, *m.f_ext, gap);
}

/// Solves for the first-segment level that makes the approximated bound
/// equal target_rate.
inline PwlModel calibrate_anchor_level(double f1, double f2, double f_ext, double f_cutoff,
                                       const loading::GapParams& gap, double target_rate)
{
    double lo = 0.0;
    double hi = 80.0;
    auto rate = [&](double level) { return bound_approximated(anchored_model(f1, f2, f_ext, f_cutoff, level), gap); };
    if (!(rate(lo) <= target_rate && rate(hi) >= target_rate))
        throw std::invalid_argument("target rate is not reachable with a level in [0, 80] dB");
    for (int it = 0; it < 100 && hi - lo > 1e-10; ++it) {
        const double mid = 0.5 * (lo + hi);
        (rate(mid) < target_rate ? lo : hi) = mid;
    }
    return anchored_model(f1, f2, f_ext, f_cutoff, 0.5 * (lo + hi));
}

/// Samples the approximated SNR of a model onto a frequency grid.
inline SnrProfile sample_approximated(const PwlModel& m, std::span<const double> frequencies)
{
    SnrProfile p;
    p.frequencies.assign(frequencies.begin(), frequencies.end());
    p.snr_linear.reserve(frequencies.size());
    for (double f : frequencies)
        p.snr_linear.push_back(m.approximated(f));
    return p;
}

} // namespace owc::analysis

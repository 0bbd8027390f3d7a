// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "owclab/owclab.hpp"

namespace fs = std::filesystem;
using namespace owc;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body)
{
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (!o.pass)
        ++failures;
    std::printf("%s criterion %d: %s (%.2f s) %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
}

template <typename... T>
std::string fmt(const char* f, T... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Values evaluated independently in 30-digit arithmetic.
constexpr double kGamma38 = 2.64221086654379772803;
constexpr double kGamma56 = 0.84864378387525829606;

Outcome analytic_constants()
{
    const auto t0 = Clock::now();
    const double g1 = loading::snr_gap(3.8e-3).gamma;
    const double g2 = loading::snr_gap(5.6e-2).gamma;
    const bool ok = std::abs(g1 - 2.6422) <= 1e-3 && std::abs(g2 - 0.8487) <= 1e-3 && std::abs(g1 - kGamma38) <= 1e-12 &&
                    std::abs(g2 - kGamma56) <= 1e-12 && seconds_since(t0) < 1.0;
    return {ok, fmt("gamma(3.8e-3)=%.6f gamma(5.6e-2)=%.6f", g1, g2)};
}

Outcome fiber_values()
{
    const auto t0 = Clock::now();
    const auto r = fiber::dispersion_report({65.0, 0.351, 4700.0, 2.3, 0.001}, 16e9);
    const double l_m = r.l_max_km * 1e3;
    const bool ok = std::abs(r.f3db_hz - 3.654e12) <= 0.005 * 3.654e12 && std::abs(l_m - 228.3) <= 0.005 * 228.3 &&
                    r.attenuation_db == 2.3 * 0.001 && seconds_since(t0) < 1.0;
    return {ok, fmt("f3dB=%.4f THz L_max=%.2f m attenuation=%.3g dB", r.f3db_hz / 1e12, l_m, r.attenuation_db)};
}

Outcome rate_formula()
{
    const OfdmConfig cfg;
    const double r1 = loading::data_rate(2338, cfg) / 1e9;
    const double r2 = loading::data_rate(4088, cfg) / 1e9;
    const bool ok = std::abs(r1 - 72.01) <= 0.01 && std::abs(r2 - 125.91) <= 0.01;
    return {ok, fmt("2338 bits -> %.4f Gb/s, 4088 bits -> %.4f Gb/s", r1, r2)};
}

Outcome modem_identity()
{
    const auto t0 = Clock::now();
    const OfdmConfig cfg;
    const channel::VcselModel vm;
    const auto link = channel::ideal(channel::config_one());
    std::size_t errors = 0;
    for (unsigned b = 1; b <= 10; ++b) {
        const auto plan = loading::uniform_plan(cfg, b);
        const auto bits = modem::random_bits(modem::data_bits_required(plan), 100 + b);
        errors += modem::run_stream(bits, plan, link, vm, cfg, b).bit_errors;
    }

    // Hermitian framing and Parseval on random 1024-QAM frames.
    std::mt19937_64 rng(7);
    const auto& c = modem::constellation_for(10);
    double worst_imag = 0.0;
    double worst_parseval = 0.0;
    for (int f = 0; f < 50; ++f) {
        modem::OfdmFrame frame;
        frame.payload_symbols.resize(cfg.n_sc());
        for (auto& s : frame.payload_symbols)
            s = c.point(static_cast<unsigned>(rng() % 1024));
        const auto w = modem::build_frame(frame, cfg);
        double rms = 0.0, imag = 0.0, body = 0.0;
        for (std::size_t i = 0; i < w.samples.size(); ++i) {
            rms += std::norm(w.samples[i]);
            imag = std::max(imag, std::abs(w.samples[i].imag()));
            if (i >= cfg.n_cp)
                body += std::norm(w.samples[i]);
        }
        rms = std::sqrt(rms / static_cast<double>(w.samples.size()));
        worst_imag = std::max(worst_imag, imag / rms);
        double freq = 0.0;
        for (const auto& s : frame.payload_symbols)
            freq += 2.0 * std::norm(s);
        const double time = body * static_cast<double>(cfg.n_fft);
        worst_parseval = std::max(worst_parseval, std::abs(time - freq) / freq);
    }
    const double secs = seconds_since(t0);
    const bool ok = errors == 0 && worst_imag <= 1e-12 && worst_parseval <= 1e-9 && secs < 30.0;
    return {ok, fmt("bit errors=%zu imag/rms=%.2e parseval=%.2e", errors, worst_imag, worst_parseval)};
}

Outcome gap_fidelity()
{
    const auto t0 = Clock::now();
    const OfdmConfig cfg;
    const channel::VcselModel vm;
    std::string detail;
    bool ok = true;
    for (unsigned b : {2u, 4u}) {
        const double m = std::ldexp(1.0, static_cast<int>(b));
        const auto plan = loading::uniform_plan(cfg, b);
        const std::size_t nbits = modem::data_bits_required(plan);
        const std::size_t seeds = (1000000 + nbits - 1) / nbits;
        for (double target : {1e-2, 3.3e-2, 5.6e-2}) {
            const double snr = loading::snr_gap(target).gamma * (m - 1.0);
            auto preset = channel::ideal(channel::config_one());
            preset.noise_std = channel::noise_std_for_snr(preset, vm, cfg, snr);
            std::size_t errors = 0, total = 0;
            for (std::size_t s = 0; s < seeds; ++s) {
                const auto bits = modem::random_bits(nbits, 1000 * b + s);
                const auto r = modem::run_stream(bits, plan, preset, vm, cfg, 77 + s);
                errors += r.bit_errors;
                total += r.bits;
            }
            const double ber = static_cast<double>(errors) / static_cast<double>(total);
            const bool point_ok = ber <= 2.0 * target && ber >= 0.5 * target && total >= 1000000;
            ok = ok && point_ok;
            detail += fmt("M=%g target=%g ber=%.4g bits=%zu; ", m, target, ber, total);
        }
    }
    ok = ok && seconds_since(t0) < 300.0;
    return {ok, detail};
}

// Exhaustive optimum: most bits with sum (2^b - 1) gamma / g <= budget.
std::size_t brute_force_bits(const std::vector<double>& g, double gamma, double budget, unsigned b_max)
{
    std::size_t best = 0;
    std::vector<unsigned> b(g.size(), 0);
    std::function<void(std::size_t, double, std::size_t)> rec = [&](std::size_t k, double used, std::size_t bits) {
        if (used > budget * (1.0 + 1e-12))
            return;
        if (k == g.size()) {
            best = std::max(best, bits);
            return;
        }
        for (unsigned v = 0; v <= b_max; ++v)
            rec(k + 1, used + (std::ldexp(1.0, static_cast<int>(v)) - 1.0) * gamma / g[k], bits + v);
    };
    rec(0, 0.0, 0);
    return best;
}

Outcome hh_optimality()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> nd(1, 8), bd(1, 4);
    std::uniform_real_distribution<double> snr_db(-5.0, 30.0), budget(0.5, 10.0), ber(1e-3, 5e-2);
    int mismatches = 0;
    for (int i = 0; i < 200; ++i) {
        const auto n = static_cast<std::size_t>(nd(rng));
        const auto b_max = static_cast<unsigned>(bd(rng));
        SnrProfile p;
        for (std::size_t k = 0; k < n; ++k) {
            p.frequencies.push_back(1e9 * static_cast<double>(k + 1));
            p.snr_linear.push_back(from_db(snr_db(rng)));
        }
        const auto gap = loading::snr_gap(ber(rng));
        const double bud = budget(rng);
        const auto plan = loading::hughes_hartogs(p, gap, bud, b_max);
        if (plan.total_bits != brute_force_bits(p.snr_linear, gap.gamma, bud, b_max))
            ++mismatches;
    }
    const bool ok = mismatches == 0 && seconds_since(t0) < 60.0;
    return {ok, fmt("mismatches=%d of 200", mismatches)};
}

Outcome quadrature()
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> fmax(5e9, 25e9), db(-10.0, 40.0), frac(0.0, 1.0), ber(1e-3, 5e-2);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double f_max = fmax(rng);
        // Random knots with linear interpolation in dB.
        std::vector<double> kf{0.0}, kd{db(rng)};
        for (int j = 0; j < 4; ++j)
            kf.push_back(frac(rng) * f_max);
        kf.push_back(f_max);
        std::sort(kf.begin(), kf.end());
        while (kd.size() < kf.size())
            kd.push_back(db(rng));
        auto snr = [&](double f) {
            std::size_t j = 1;
            while (j + 1 < kf.size() && f > kf[j])
                ++j;
            const double span = kf[j] - kf[j - 1];
            const double t = span > 0.0 ? (f - kf[j - 1]) / span : 0.0;
            return from_db(kd[j - 1] + t * (kd[j] - kd[j - 1]));
        };
        const auto gap = loading::snr_gap(ber(rng));
        const double q = loading::rate_bound_integral(snr, f_max, gap);
        const double h = 1e4;
        const auto steps = static_cast<std::size_t>(std::ceil(f_max / h));
        const double hh = f_max / static_cast<double>(steps);
        double riemann = 0.0;
        for (std::size_t s = 0; s < steps; ++s)
            riemann += std::log2(1.0 + snr((static_cast<double>(s) + 0.5) * hh) / gap.gamma);
        riemann *= hh;
        worst = std::max(worst, std::abs(q - riemann) / riemann);
    }
    const auto gap = loading::snr_gap(1e-2);
    const double c = loading::rate_bound_integral([](double) { return 300.0; }, 11e9, gap);
    const double exact = 11e9 * std::log2(1.0 + 300.0 / gap.gamma);
    const double crel = std::abs(c - exact) / exact;
    return {worst <= 1e-3 && crel <= 1e-9, fmt("worst PWL rel err=%.2e constant rel err=%.2e", worst, crel)};
}

Outcome extrapolation()
{
    const OfdmConfig cfg;
    struct Case {
        double f1, f_ext, ber, rate, expected;
    };
    std::string detail;
    bool ok = true;
    for (const auto& c : {Case{2.38e9, 23.26e9, 3.3e-2, 72e9, 108.3e9}, Case{3.00e9, 24.36e9, 3.1e-2, 71.6e9, 111.1e9}}) {
        const auto gap = loading::snr_gap(c.ber);
        const auto anchored = analysis::calibrate_anchor_level(c.f1, 10.8e9, c.f_ext, 11e9, gap, c.rate);
        const auto m = analysis::extrapolate(
            analysis::pwl_fit(analysis::sample_approximated(anchored, cfg.subcarrier_frequencies()), 11e9));
        const double b = analysis::bound_extrapolated(m, gap);
        ok = ok && std::abs(b - c.expected) <= 0.1 * c.expected;
        detail += fmt("f_ext=%.2f GHz bound=%.2f Gb/s (ref %.1f); ", *m.f_ext / 1e9, b / 1e9, c.expected / 1e9);
    }
    return {ok, detail};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<analysis::SweepRow> determinism_rows;

Outcome determinism()
{
    auto cfg = config::parse_config("");
    const auto base = fs::temp_directory_path() / "owclab_acceptance";
    fs::remove_all(base);
    cfg.run.output_dir = (base / "a").string();
    determinism_rows = commands::cmd_simulate(cfg).sweep;
    cfg.run.output_dir = (base / "b").string();
    commands::cmd_simulate(cfg);
    bool ok = true;
    for (const char* f : {"snr_profile.csv", "loading_plan.csv", "ber_rate.csv"}) {
        const auto a = slurp(base / "a" / f);
        ok = ok && !a.empty() && a == slurp(base / "b" / f);
    }
    return {ok, "snr_profile.csv, loading_plan.csv, ber_rate.csv compared"};
}

Outcome monotone_sweep()
{
    // Sweep from the calibrated default preset, as run by the determinism check.
    if (determinism_rows.empty())
        return {false, "no sweep rows"};
    bool ok = determinism_rows.size() == 5;
    std::string detail;
    for (std::size_t i = 0; i < determinism_rows.size(); ++i) {
        const auto& r = determinism_rows[i];
        if (i > 0)
            ok = ok && r.target_ber > determinism_rows[i - 1].target_ber &&
                 r.rate_bps >= determinism_rows[i - 1].rate_bps;
        detail += fmt("%g:%.2f ", r.target_ber, r.rate_bps / 1e9);
    }
    return {ok, detail + "Gb/s"};
}

} // namespace

int main()
{
    report(1, "SNR gap constants", analytic_constants);
    report(2, "fibre bandwidth and reach", fiber_values);
    report(3, "rate formula", rate_formula);
    report(4, "noiseless modem identity", modem_identity);
    report(5, "gap approximation fidelity", gap_fidelity);
    report(6, "Hughes-Hartogs optimality", hh_optimality);
    report(7, "integral bound quadrature", quadrature);
    report(8, "extrapolated rate bounds", extrapolation);
    report(9, "determinism", determinism);
    report(10, "rate monotone in target BER", monotone_sweep);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}

#pragma once

// Subcommand implementations shared by the owclab executable and tests.
// Each writes its files into an output directory and returns a short
// human-readable summary. Config problems throw config::ConfigError, every
// other failure a std::exception.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "owclab/analysis.hpp"
#include "owclab/calibration.hpp"
#include "owclab/config.hpp"
#include "owclab/csv.hpp"
#include "owclab/fiber.hpp"
#include "owclab/loading.hpp"
#include "owclab/modem.hpp"
#include "owclab/sweep.hpp"

namespace owc::commands {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& path, const std::string& content)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out)
        throw std::runtime_error("write failed for " + path.string());
}

inline config::ExperimentConfig load_config(const std::optional<fs::path>& path)
{
    std::string text;
    if (path) {
        try {
            text = read_file(*path);
        } catch (const std::runtime_error& e) {
            throw config::ConfigError(e.what());
        }
    }
    return config::parse_config(text, config::seed_override_from_env());
}

/// Anchored model for the preset, with the first-segment level solved so
/// the approximated bound equals the anchor rate.
inline analysis::PwlModel anchored_target_model(const config::ExperimentConfig& cfg)
{
    const auto d = config::anchor_defaults(cfg.preset.name);
    const auto& c = cfg.calibration;
    return analysis::calibrate_anchor_level(c.anchor_f1.value_or(d.f1), c.anchor_f2.value_or(d.f2),
                                            c.anchor_f_ext.value_or(d.f_ext), cfg.analysis.f_cutoff,
                                            loading::snr_gap(c.anchor_ber.value_or(d.ber)),
                                            c.anchor_rate.value_or(d.rate));
}

/// Target SNR profile on the subcarrier grid for the configured
/// calibration mode, or nothing for mode "none".
inline std::optional<SnrProfile> calibration_target(const config::ExperimentConfig& cfg)
{
    const auto freqs = cfg.ofdm.subcarrier_frequencies();
    switch (cfg.calibration.mode) {
    case config::CalibrationMode::anchored:
        return analysis::sample_approximated(anchored_target_model(cfg), freqs);
    case config::CalibrationMode::pwl:
        return analysis::sample_approximated(*cfg.pwl, freqs);
    case config::CalibrationMode::flat:
        return SnrProfile{freqs, std::vector<double>(freqs.size(), from_db(cfg.calibration.flat_snr_db))};
    case config::CalibrationMode::none:
        break;
    }
    return std::nullopt;
}

struct PreparedLink {
    channel::LinkPreset preset;
    std::optional<channel::CalibrationResult> calibration;
};

/// The preset actually simulated: noiseless override, or calibrated
/// against the configured target.
inline PreparedLink prepare_link(const config::ExperimentConfig& cfg)
{
    PreparedLink out;
    if (cfg.run.noiseless) {
        out.preset = channel::ideal(cfg.preset);
        return out;
    }
    out.preset = cfg.preset;
    if (const auto target = calibration_target(cfg)) {
        out.calibration = channel::calibrate_noise(cfg.preset, cfg.vcsel, *target, cfg.ofdm, cfg.calibration.seed,
                                                   cfg.calibration.iterations);
        out.preset = out.calibration->preset;
    }
    return out;
}

inline std::string format_rate(double bps)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(2) << bps / 1e9 << " Gb/s";
    return s.str();
}

struct SimulateResult {
    SnrProfile snr_profile;
    loading::LoadingPlan plan;
    std::vector<analysis::SweepRow> sweep;
    std::optional<channel::CalibrationResult> calibration;
    bool clipping = false;
    std::string summary;
};

/// estimate -> load -> stream per target and seed. Writes snr_profile.csv,
/// loading_plan.csv and ber_rate.csv (plus tx/rx waveforms on request).
inline SimulateResult cmd_simulate(const config::ExperimentConfig& cfg)
{
    cfg.validate();
    const fs::path dir = cfg.run.output_dir;
    SimulateResult r;
    const auto link = prepare_link(cfg);
    r.calibration = link.calibration;

    const auto probe = modem::probe_link(link.preset, cfg.vcsel, cfg.ofdm, cfg.run.seeds.front());
    r.snr_profile = probe.estimate.snr;
    r.clipping = probe.clipping;

    const double budget =
        cfg.loading.power_budget > 0.0 ? cfg.loading.power_budget : static_cast<double>(cfg.ofdm.n_sc());
    r.plan = loading::hughes_hartogs(r.snr_profile, loading::snr_gap(cfg.loading.plan_ber), budget, cfg.loading.b_max,
                                     cfg.ofdm);
    r.sweep = analysis::ber_rate_sweep(link.preset, cfg.vcsel, cfg.ofdm, cfg.loading.target_ber, cfg.run.seeds,
                                       {cfg.loading.power_budget, cfg.loading.b_max});

    write_file(dir / "snr_profile.csv", csv::emit_snr_profile(r.snr_profile));
    write_file(dir / "loading_plan.csv", csv::emit_loading_plan(r.plan, r.snr_profile));
    write_file(dir / "ber_rate.csv", csv::emit_sweep(r.sweep));

    if (cfg.run.dump_waveforms) {
        const auto bits = modem::random_bits(modem::data_bits_required(r.plan), cfg.run.seeds.front() ^ 0xb17500d5ull);
        const auto s = modem::run_stream(bits, r.plan, link.preset, cfg.vcsel, cfg.ofdm, cfg.run.seeds.front(),
                                         {.keep_waveforms = true});
        write_file(dir / "tx_waveform.csv", csv::emit_waveform(s.tx_waveform));
        write_file(dir / "rx_waveform.csv", csv::emit_waveform(s.rx_waveform));
    }

    std::ostringstream s;
    s << "preset " << cfg.preset.name << (cfg.run.noiseless ? " (noiseless)" : "") << "\n";
    if (r.calibration)
        s << "calibration: mean |error| " << std::setprecision(3) << r.calibration->mean_abs_error_db << " dB over "
          << r.calibration->calibrated_subcarriers << " subcarriers"
          << (r.calibration->reachable ? "" : " (target not reached)") << "\n";
    if (r.clipping)
        s << "warning: more than 1% of drive samples clipped\n";
    s << "plan at BER " << cfg.loading.plan_ber << ": " << r.plan.total_bits << " bits/frame, "
      << format_rate(r.plan.rate) << "\n";
    for (const auto& row : r.sweep)
        s << "  target " << row.target_ber << ": " << format_rate(row.rate_bps) << ", measured BER "
          << row.measured_ber << "\n";
    s << "wrote " << (dir / "snr_profile.csv").string() << ", loading_plan.csv, ber_rate.csv\n";
    r.summary = s.str();
    return r;
}

struct ExtrapolateResult {
    analysis::PwlModel model;
    std::vector<csv::RateBoundRow> bounds;
    std::string summary;
};

/// Fits the two-segment model to a profile (or uses the configured anchored
/// profile when none is given), extrapolates it and evaluates the integral
/// bound at f_cutoff and f_ext per target BER. Writes pwl_model.csv,
/// pwl_model.cfg and rate_bounds.csv. A fit that cannot be extrapolated
/// still writes its files, then throws.
inline ExtrapolateResult cmd_extrapolate(const config::ExperimentConfig& cfg,
                                         const std::optional<fs::path>& profile_path)
{
    cfg.validate();
    const fs::path dir = cfg.run.output_dir;
    SnrProfile profile;
    if (profile_path)
        profile = csv::parse_snr_profile(read_file(*profile_path));
    else
        profile = analysis::sample_approximated(anchored_target_model(cfg), cfg.ofdm.subcarrier_frequencies());

    ExtrapolateResult r;
    r.model = analysis::pwl_fit(profile, cfg.analysis.f_cutoff, cfg.analysis.window);
    std::string failure;
    try {
        r.model = analysis::extrapolate(r.model);
    } catch (const std::invalid_argument& e) {
        failure = e.what();
    }
    for (double ber : cfg.loading.target_ber) {
        const auto gap = loading::snr_gap(ber);
        csv::RateBoundRow row{ber, gap.gamma, analysis::bound_approximated(r.model, gap), std::nullopt};
        if (r.model.f_ext)
            row.bound_ext = analysis::bound_extrapolated(r.model, gap);
        r.bounds.push_back(row);
    }
    write_file(dir / "pwl_model.csv", csv::emit_pwl_model(r.model));
    write_file(dir / "pwl_model.cfg", config::format_pwl_section(r.model));
    write_file(dir / "rate_bounds.csv", csv::emit_rate_bounds(r.bounds));

    std::ostringstream s;
    s << std::setprecision(4);
    s << "f1 = " << r.model.f1 / 1e9 << " GHz, f2 = " << r.model.f2 / 1e9 << " GHz";
    if (r.model.f2_at_cutoff)
        s << " (profile usable up to the cutoff)";
    if (r.model.f_ext)
        s << ", f_ext = " << *r.model.f_ext / 1e9 << " GHz";
    s << "\n";
    for (const auto& b : r.bounds) {
        s << "  BER " << b.target_ber << ": " << format_rate(b.bound_cutoff) << " at cutoff";
        if (b.bound_ext)
            s << ", " << format_rate(*b.bound_ext) << " extrapolated";
        s << "\n";
    }
    r.summary = s.str();
    if (!failure.empty())
        throw std::runtime_error("fit is not extrapolatable: " + failure + " (partial outputs written)");
    return r;
}

struct FiberArgs {
    std::optional<double> d_coeff;      // ps/(nm km)
    std::optional<double> sigma_lambda; // nm
    std::optional<fs::path> spectrum;
    std::optional<double> emb;          // MHz km
    double alpha = fiber::kOm4Alpha;    // dB/km
    std::optional<double> length;       // km
    std::optional<double> bandwidth;    // Hz
    std::optional<fs::path> csv_out;
};

struct FiberResult {
    std::optional<fiber::DispersionReport> report;
    std::optional<double> l_max_km;
    std::optional<fiber::SpectralWidth> width;
    std::string text;
};

namespace detail {

inline std::string aligned(const std::string& key, const std::string& value)
{
    std::ostringstream s;
    s << std::left << std::setw(14) << key << "= " << value << "\n";
    return s.str();
}

inline std::string fixed(double v, int digits)
{
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

} // namespace detail

/// Dispersion report and/or maximum reach. Needs D, EMB, one of sigma or a
/// spectrum file, and one of length or bandwidth.
inline FiberResult cmd_fiber(const FiberArgs& a)
{
    if (!a.d_coeff)
        throw config::ConfigError("fiber: --dispersion is required");
    if (!a.emb)
        throw config::ConfigError("fiber: --emb is required");
    if (a.sigma_lambda.has_value() == a.spectrum.has_value())
        throw config::ConfigError("fiber: give exactly one of --sigma and --spectrum");
    if (!a.length && !a.bandwidth)
        throw config::ConfigError("fiber: give --length, --bandwidth or both");

    FiberResult r;
    using detail::aligned;
    using detail::fixed;
    double sigma = 0.0;
    if (a.spectrum) {
        std::istringstream in(read_file(*a.spectrum));
        r.width = fiber::rms_spectral_width(fiber::parse_spectrum(in));
        sigma = r.width->rms_nm;
        r.text += aligned("mean_lambda", fixed(r.width->mean_nm, 4) + " nm");
    } else {
        sigma = *a.sigma_lambda;
    }
    r.text += aligned("sigma_lambda", fixed(sigma, 4) + " nm");

    if (a.length) {
        fiber::FiberParams p{*a.d_coeff, sigma, *a.emb, a.alpha, *a.length};
        const auto rep = a.bandwidth ? fiber::dispersion_report(p, *a.bandwidth) : fiber::detail::spread_terms(p);
        r.report = rep;
        r.text += aligned("sigma_CD", fixed(rep.sigma_cd_ps, 4) + " ps");
        r.text += aligned("sigma_MD", fixed(rep.sigma_md_ps, 4) + " ps");
        r.text += aligned("sigma_t", fixed(rep.sigma_total_ps, 4) + " ps");
        r.text += aligned("f_3dB,CD", std::isinf(rep.f3db_cd_hz) ? "inf" : fixed(rep.f3db_cd_hz / 1e12, 3) + " THz");
        r.text += aligned("f_3dB,MD", fixed(rep.f3db_md_hz / 1e12, 3) + " THz");
        r.text += aligned("f_3dB", fixed(rep.f3db_hz / 1e12, 3) + " THz");
        std::ostringstream att;
        att << std::setprecision(4) << rep.attenuation_db << " dB";
        r.text += aligned("attenuation", att.str());
    }
    if (a.bandwidth) {
        r.l_max_km = fiber::max_reach(*a.d_coeff, sigma, *a.emb, *a.bandwidth);
        r.text += aligned("B", fixed(*a.bandwidth / 1e9, 3) + " GHz");
        r.text += aligned("L_max", fixed(*r.l_max_km * 1e3, 1) + " m");
    }
    if (a.csv_out) {
        fiber::DispersionReport rep = r.report.value_or(fiber::DispersionReport{});
        if (r.l_max_km)
            rep.l_max_km = *r.l_max_km;
        write_file(*a.csv_out, csv::emit_fiber_report(rep));
    }
    return r;
}

struct LoadplanResult {
    loading::LoadingPlan plan;
    std::vector<std::pair<double, loading::LoadingPlan>> per_target;
    std::string summary;
};

/// Hughes-Hartogs loading from a profile CSV. Writes loading_plan.csv for
/// loading.plan_ber and prints the rate for every target.
inline LoadplanResult cmd_loadplan(const config::ExperimentConfig& cfg, const fs::path& profile_path)
{
    cfg.validate();
    const auto profile = csv::parse_snr_profile(read_file(profile_path));
    const double budget =
        cfg.loading.power_budget > 0.0 ? cfg.loading.power_budget : static_cast<double>(profile.size());
    LoadplanResult r;
    r.plan = loading::hughes_hartogs(profile, loading::snr_gap(cfg.loading.plan_ber), budget, cfg.loading.b_max,
                                     cfg.ofdm);
    std::ostringstream s;
    s << "plan at BER " << cfg.loading.plan_ber << ": " << r.plan.total_bits << " bits/frame, "
      << format_rate(r.plan.rate) << "\n";
    for (double ber : cfg.loading.target_ber) {
        auto plan = loading::hughes_hartogs(profile, loading::snr_gap(ber), budget, cfg.loading.b_max, cfg.ofdm);
        s << "  target " << ber << ": " << plan.total_bits << " bits/frame, " << format_rate(plan.rate) << "\n";
        r.per_target.emplace_back(ber, std::move(plan));
    }
    write_file(fs::path(cfg.run.output_dir) / "loading_plan.csv", csv::emit_loading_plan(r.plan, profile));
    r.summary = s.str();
    return r;
}

struct EstimateResult {
    analysis::ChannelEstimate estimate;
    std::string summary;
};

/// Channel estimate from a received waveform whose stream starts with the
/// standard pilot frames. Writes snr_profile.csv.
inline EstimateResult cmd_estimate(const config::ExperimentConfig& cfg, const fs::path& rx_path,
                                   std::size_t frames = modem::kPilotFrames)
{
    cfg.validate();
    if (frames < 2)
        throw std::invalid_argument("need at least two pilot frames");
    const auto rx = csv::parse_waveform(read_file(rx_path));
    const auto pilot = modem::pilot_symbols(cfg.ofdm);
    const std::vector<std::vector<Complex>> payloads(frames, pilot);
    const auto tx = modem::assemble_stream(payloads, cfg.ofdm);
    if (rx.size() < tx.drive.size())
        throw std::invalid_argument("waveform holds " + std::to_string(rx.size()) + " samples, pilots need " +
                                    std::to_string(tx.drive.size()));
    const auto frames_rx = modem::receive_frames(rx, tx, frames, cfg.ofdm);
    EstimateResult r;
    r.estimate = analysis::estimate_channel(payloads, frames_rx, cfg.ofdm.subcarrier_frequencies());
    write_file(fs::path(cfg.run.output_dir) / "snr_profile.csv", csv::emit_snr_profile(r.estimate.snr));
    double mean_db = 0.0;
    for (double v : r.estimate.snr.snr_linear)
        mean_db += to_db(v);
    mean_db /= static_cast<double>(r.estimate.snr.size());
    std::ostringstream s;
    s << "estimated " << r.estimate.snr.size() << " subcarriers from " << frames << " pilot frames, mean SNR "
      << std::setprecision(4) << mean_db << " dB\n";
    r.summary = s.str();
    return r;
}

} // namespace owc::commands

// owclab: experiment runner for the OFDM optical link simulator.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "owclab/commands.hpp"

namespace {

using owc::commands::kExitConfig;
using owc::commands::kExitOk;
using owc::commands::kExitRuntime;

struct CommonOptions {
    std::optional<std::string> config;
    std::optional<std::string> output_dir;
};

void add_common(CLI::App* sub, CommonOptions& o)
{
    sub->add_option("-c,--config", o.config, "experiment config file");
    sub->add_option("-o,--output-dir", o.output_dir, "output directory (overrides run.output_dir)");
}

owc::config::ExperimentConfig load(const CommonOptions& o)
{
    auto cfg = owc::commands::load_config(o.config ? std::optional<std::filesystem::path>(*o.config) : std::nullopt);
    if (o.output_dir)
        cfg.run.output_dir = *o.output_dir;
    return cfg;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"OFDM optical link simulator: bit loading, BER sweeps, SNR extrapolation, fibre reach"};
    app.require_subcommand(1);

    CommonOptions sim_opts;
    std::vector<std::uint64_t> sim_seeds;
    bool noiseless = false;
    bool dump = false;
    auto* sim = app.add_subcommand("simulate", "estimate, load and stream per target BER and seed");
    add_common(sim, sim_opts);
    sim->add_option("--seeds", sim_seeds, "seeds (override config and OWC_SEED)")->delimiter(',');
    sim->add_flag("--noiseless", noiseless, "ideal link: no response stages, no noise");
    sim->add_flag("--dump-waveforms", dump, "also write tx/rx waveforms of the plan stream");

    CommonOptions ext_opts;
    std::optional<std::string> ext_profile;
    auto* ext = app.add_subcommand("extrapolate", "two-segment fit, extrapolation and rate bounds");
    add_common(ext, ext_opts);
    ext->add_option("-p,--profile", ext_profile, "snr_profile.csv (default: anchored profile from config)");

    owc::commands::FiberArgs fa;
    std::optional<std::string> spectrum;
    std::optional<std::string> fiber_csv;
    auto* fib = app.add_subcommand("fiber", "multi-mode fibre bandwidth and maximum reach");
    fib->add_option("--dispersion", fa.d_coeff, "|D| in ps/(nm km)");
    fib->add_option("--sigma", fa.sigma_lambda, "RMS spectral width in nm");
    fib->add_option("--spectrum", spectrum, "two-column spectrum file (nm, linear power)");
    fib->add_option("--emb", fa.emb, "effective modal bandwidth in MHz km");
    fib->add_option("--alpha", fa.alpha, "attenuation in dB/km")->capture_default_str();
    fib->add_option("--length", fa.length, "fibre length in km");
    fib->add_option("--bandwidth", fa.bandwidth, "signal bandwidth in Hz");
    fib->add_option("--csv", fiber_csv, "also write the report as CSV");

    CommonOptions lp_opts;
    std::string lp_profile;
    auto* lp = app.add_subcommand("loadplan", "Hughes-Hartogs loading from an SNR profile");
    add_common(lp, lp_opts);
    lp->add_option("-p,--profile", lp_profile, "snr_profile.csv")->required();

    CommonOptions est_opts;
    std::string est_rx;
    std::size_t est_frames = owc::modem::kPilotFrames;
    auto* est = app.add_subcommand("estimate", "channel estimation from a received waveform");
    add_common(est, est_opts);
    est->add_option("--rx", est_rx, "received waveform CSV (column 'sample')")->required();
    est->add_option("--frames", est_frames, "pilot frames at the start of the stream")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*sim) {
            auto cfg = load(sim_opts);
            if (!sim_seeds.empty())
                cfg.run.seeds = sim_seeds;
            cfg.run.noiseless = cfg.run.noiseless || noiseless;
            cfg.run.dump_waveforms = cfg.run.dump_waveforms || dump;
            std::cout << owc::commands::cmd_simulate(cfg).summary;
        } else if (*ext) {
            const auto cfg = load(ext_opts);
            std::cout << owc::commands::cmd_extrapolate(
                             cfg, ext_profile ? std::optional<std::filesystem::path>(*ext_profile) : std::nullopt)
                             .summary;
        } else if (*fib) {
            if (spectrum)
                fa.spectrum = *spectrum;
            if (fiber_csv)
                fa.csv_out = *fiber_csv;
            std::cout << owc::commands::cmd_fiber(fa).text;
        } else if (*lp) {
            std::cout << owc::commands::cmd_loadplan(load(lp_opts), lp_profile).summary;
        } else if (*est) {
            std::cout << owc::commands::cmd_estimate(load(est_opts), est_rx, est_frames).summary;
        }
    } catch (const owc::config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}

#pragma once

// Experiment configuration: a flat sectioned key = value document.
//
//   # comment
//   [ofdm]
//   n_fft = 1024
//   [loading]
//   target_ber = [3.8e-3, 1e-2]
//   [preset]
//   name = "Config-II"
//
// Omitted keys keep their defaults. Unknown sections and keys are errors.

#include <cstdint>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "owclab/analysis.hpp"
#include "owclab/channel.hpp"
#include "owclab/csv.hpp"
#include "owclab/loading.hpp"
#include "owclab/ofdm_config.hpp"

namespace owc::config {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class CalibrationMode { anchored, flat, pwl, none };

struct CalibrationSettings {
    CalibrationMode mode = CalibrationMode::anchored;
    double flat_snr_db = 20.0;
    // Anchors of the target profile. Defaults follow the preset name.
    std::optional<double> anchor_f1;
    std::optional<double> anchor_f2;
    std::optional<double> anchor_f_ext;
    std::optional<double> anchor_ber;
    std::optional<double> anchor_rate;
    std::uint64_t seed = 1;
    int iterations = 4;
};

struct LoadingSettings {
    std::vector<double> target_ber{3.8e-3, 1e-2, 3.1e-2, 3.3e-2, 5.6e-2};
    double plan_ber = 3.3e-2; // target used for loading_plan.csv
    double power_budget = 0.0; // <= 0: one unit per subcarrier
    unsigned b_max = loading::kDefaultMaxBits;
};

struct AnalysisSettings {
    std::size_t window = analysis::kDefaultSmoothingWindow;
    double f_cutoff = 11e9;
};

struct RunSettings {
    std::vector<std::uint64_t> seeds{1};
    std::string output_dir = "out";
    bool noiseless = false;
    bool dump_waveforms = false;
};

struct ExperimentConfig {
    OfdmConfig ofdm;
    channel::LinkPreset preset = channel::config_one();
    channel::VcselModel vcsel;
    LoadingSettings loading;
    AnalysisSettings analysis;
    CalibrationSettings calibration;
    std::optional<analysis::PwlModel> pwl; // [pwl] section, used by calibration mode "pwl"
    RunSettings run;

    void validate() const
    {
        auto wrap = [](const char* section, auto&& fn) {
            try {
                fn();
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string(section) + ": " + e.what());
            }
        };
        wrap("ofdm", [&] { ofdm.validate(); });
        wrap("vcsel", [&] { vcsel.validate(); });
        wrap("preset", [&] { preset.validate(vcsel); });
        if (loading.target_ber.empty())
            throw ConfigError("loading.target_ber: must not be empty");
        for (double b : loading.target_ber)
            wrap("loading.target_ber", [&] { loading::snr_gap(b); });
        wrap("loading.plan_ber", [&] { loading::snr_gap(loading.plan_ber); });
        if (loading.b_max < 1 || loading.b_max > 10)
            throw ConfigError("loading.b_max: must lie in [1, 10]");
        if (analysis.window < 1)
            throw ConfigError("analysis.window: must be >= 1");
        if (!(analysis.f_cutoff > 0.0))
            throw ConfigError("analysis.f_cutoff: must be positive");
        if (run.seeds.empty())
            throw ConfigError("run.seeds: must not be empty");
        if (calibration.mode == CalibrationMode::pwl && !pwl)
            throw ConfigError("calibration.mode: \"pwl\" needs a [pwl] section");
        if (calibration.iterations < 0)
            throw ConfigError("calibration.iterations: must be >= 0");
    }
};

// Anchors per preset name: breakpoints and the rate measured at a BER.
struct AnchorDefaults {
    double f1, f2, f_ext, ber, rate;
};

inline AnchorDefaults anchor_defaults(const std::string& preset_name)
{
    if (preset_name == "Config-II")
        return {3.00e9, 10.80e9, 24.36e9, 3.1e-2, 71.6e9};
    return {2.38e9, 10.80e9, 23.26e9, 3.3e-2, 72e9};
}

namespace detail {

using Value = std::variant<double, std::string, bool, std::vector<double>, std::vector<std::string>>;

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

// Strips a trailing comment that is not inside quotes.
inline std::string_view strip_comment(std::string_view s)
{
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"')
            quoted = !quoted;
        else if (s[i] == '#' && !quoted)
            return s.substr(0, i);
    }
    return s;
}

inline Value parse_scalar(std::string_view raw, const std::string& path)
{
    const auto s = trim(raw);
    if (s.empty())
        throw ConfigError(path + ": missing value");
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"')
            throw ConfigError(path + ": unterminated string");
        return std::string(s.substr(1, s.size() - 2));
    }
    if (s == "true")
        return true;
    if (s == "false")
        return false;
    try {
        return csv::parse_double(s);
    } catch (const std::invalid_argument&) {
        throw ConfigError(path + ": cannot parse value '" + std::string(s) + "'");
    }
}

inline Value parse_value(std::string_view raw, const std::string& path)
{
    const auto s = trim(raw);
    if (s.empty() || s.front() != '[')
        return parse_scalar(s, path);
    if (s.back() != ']')
        throw ConfigError(path + ": unterminated list");
    const auto body = trim(s.substr(1, s.size() - 2));
    std::vector<double> nums;
    std::vector<std::string> strs;
    if (body.empty())
        return nums;
    std::size_t start = 0;
    while (start <= body.size()) {
        const auto comma = body.find(',', start);
        const auto item = body.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        const auto v = parse_scalar(item, path);
        if (const auto* d = std::get_if<double>(&v))
            nums.push_back(*d);
        else if (const auto* str = std::get_if<std::string>(&v))
            strs.push_back(*str);
        else
            throw ConfigError(path + ": lists hold numbers or strings");
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    if (!nums.empty() && !strs.empty())
        throw ConfigError(path + ": mixed list element types");
    if (!strs.empty())
        return strs;
    return nums;
}

using Document = std::map<std::string, std::map<std::string, Value>>;

inline Document parse_document(std::string_view text)
{
    Document doc;
    std::string section;
    std::size_t lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        const auto line = trim(strip_comment(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos)));
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        if (line.empty())
            continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            doc[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
        const std::string key(trim(line.substr(0, eq)));
        const std::string path = section + "." + key;
        auto& entries = doc[section];
        if (entries.contains(key))
            throw ConfigError(path + ": duplicate key");
        entries.emplace(key, parse_value(line.substr(eq + 1), path));
    }
    return doc;
}

inline double as_number(const Value& v, const std::string& path)
{
    if (const auto* d = std::get_if<double>(&v))
        return *d;
    throw ConfigError(path + ": expected a number");
}

inline std::size_t as_count(const Value& v, const std::string& path)
{
    const double d = as_number(v, path);
    if (!(d >= 0.0) || d != std::floor(d) || d > 1e15)
        throw ConfigError(path + ": expected a non-negative integer");
    return static_cast<std::size_t>(d);
}

inline std::string as_string(const Value& v, const std::string& path)
{
    if (const auto* s = std::get_if<std::string>(&v))
        return *s;
    throw ConfigError(path + ": expected a quoted string");
}

inline bool as_bool(const Value& v, const std::string& path)
{
    if (const auto* b = std::get_if<bool>(&v))
        return *b;
    throw ConfigError(path + ": expected true or false");
}

inline std::vector<double> as_numbers(const Value& v, const std::string& path)
{
    if (const auto* l = std::get_if<std::vector<double>>(&v))
        return *l;
    if (const auto* d = std::get_if<double>(&v))
        return {*d};
    throw ConfigError(path + ": expected a list of numbers");
}

inline std::vector<std::string> as_strings(const Value& v, const std::string& path)
{
    if (const auto* l = std::get_if<std::vector<std::string>>(&v))
        return *l;
    if (const auto* l = std::get_if<std::vector<double>>(&v); l && l->empty())
        return {};
    if (const auto* s = std::get_if<std::string>(&v))
        return {*s};
    throw ConfigError(path + ": expected a list of strings");
}

inline std::vector<std::uint64_t> as_seeds(const std::vector<double>& values, const std::string& path)
{
    std::vector<std::uint64_t> out;
    for (double d : values) {
        if (!(d >= 0.0) || d != std::floor(d) || d > 9.007199254740992e15)
            throw ConfigError(path + ": seeds must be non-negative integers");
        out.push_back(static_cast<std::uint64_t>(d));
    }
    return out;
}

} // namespace detail

/// Parses "kind:param:param" into a response stage:
/// second_order:<resonance_hz>:<damping>, first_order:<corner_hz>,
/// brickwall:<cutoff_hz>, ripple:<amplitude_db>:<period_hz>.
inline channel::ResponseStage parse_stage(const std::string& spec)
{
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const auto colon = spec.find(':', start);
        parts.push_back(spec.substr(start, colon == std::string::npos ? std::string::npos : colon - start));
        if (colon == std::string::npos)
            break;
        start = colon + 1;
    }
    auto num = [&](std::size_t i) { return csv::parse_double(parts.at(i)); };
    const auto& kind = parts.front();
    try {
        if (kind == "second_order" && parts.size() == 3)
            return channel::SecondOrderLowpass{num(1), num(2)};
        if (kind == "first_order" && parts.size() == 2)
            return channel::FirstOrderLowpass{num(1)};
        if (kind == "brickwall" && parts.size() == 2)
            return channel::Brickwall{num(1)};
        if (kind == "ripple" && parts.size() == 3)
            return channel::Ripple{num(1), num(2)};
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument("stage '" + spec + "': " + e.what());
    }
    throw std::invalid_argument("unknown or malformed stage '" + spec + "'");
}

inline std::string format_stage(const channel::ResponseStage& stage)
{
    using csv::format_double;
    return std::visit(
        [](const auto& s) -> std::string {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, channel::SecondOrderLowpass>)
                return "second_order:" + format_double(s.resonance_hz) + ":" + format_double(s.damping);
            else if constexpr (std::is_same_v<T, channel::FirstOrderLowpass>)
                return "first_order:" + format_double(s.corner_hz);
            else if constexpr (std::is_same_v<T, channel::Brickwall>)
                return "brickwall:" + format_double(s.cutoff_hz);
            else if constexpr (std::is_same_v<T, channel::Ripple>)
                return "ripple:" + format_double(s.amplitude_db) + ":" + format_double(s.period_hz);
            else
                throw std::invalid_argument("tabulated stages are not serializable");
        },
        stage);
}

/// Parses and validates a config document. `env_seeds` stands in for the
/// OWC_SEED environment variable (comma-separated integers); when set it
/// replaces run.seeds.
inline ExperimentConfig parse_config(std::string_view text, std::optional<std::string> env_seeds = std::nullopt)
{
    using namespace detail;
    const Document doc = parse_document(text);
    ExperimentConfig cfg;

    static const std::map<std::string, std::set<std::string>> known = {
        {"ofdm", {"n_fft", "n_cp", "rolloff", "sample_rate", "n_sps", "rrc_span"}},
        {"preset",
         {"name", "v_dc", "i_dc", "p_t", "p_r", "drive_scale", "noise_std", "responsivity", "stages"}},
        {"vcsel", {"i_threshold", "slope_efficiency", "i_rollover", "p_max", "linear_low", "linear_high"}},
        {"loading", {"target_ber", "plan_ber", "power_budget", "b_max"}},
        {"analysis", {"window", "f_cutoff"}},
        {"calibration",
         {"mode", "flat_snr_db", "anchor_f1", "anchor_f2", "anchor_f_ext", "anchor_ber", "anchor_rate", "seed",
          "iterations"}},
        {"pwl",
         {"f1", "f2", "f_cutoff", "seg1_intercept_db", "seg1_slope_db_per_hz", "seg2_intercept_db",
          "seg2_slope_db_per_hz", "f_ext"}},
        {"run", {"seeds", "output_dir", "noiseless", "dump_waveforms"}},
    };
    for (const auto& [section, entries] : doc) {
        const auto it = known.find(section);
        if (it == known.end())
            throw ConfigError("unknown section [" + section + "]");
        for (const auto& [key, value] : entries)
            if (!it->second.contains(key))
                throw ConfigError("unknown key " + section + "." + key);
    }

    auto get = [&](const std::string& section, const std::string& key) -> const Value* {
        const auto s = doc.find(section);
        if (s == doc.end())
            return nullptr;
        const auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    };
    auto number = [&](const char* section, const char* key, double& out) {
        if (const auto* v = get(section, key))
            out = as_number(*v, std::string(section) + "." + key);
    };
    auto count = [&](const char* section, const char* key, auto& out) {
        if (const auto* v = get(section, key))
            out = static_cast<std::remove_reference_t<decltype(out)>>(as_count(*v, std::string(section) + "." + key));
    };
    auto optional_number = [&](const char* section, const char* key, std::optional<double>& out) {
        if (const auto* v = get(section, key))
            out = as_number(*v, std::string(section) + "." + key);
    };

    count("ofdm", "n_fft", cfg.ofdm.n_fft);
    count("ofdm", "n_cp", cfg.ofdm.n_cp);
    number("ofdm", "rolloff", cfg.ofdm.rolloff);
    number("ofdm", "sample_rate", cfg.ofdm.sample_rate);
    count("ofdm", "n_sps", cfg.ofdm.n_sps);
    count("ofdm", "rrc_span", cfg.ofdm.rrc_span);

    // The preset name selects the base preset; other keys override it.
    if (const auto* v = get("preset", "name")) {
        const auto name = as_string(*v, "preset.name");
        if (name == "Config-I")
            cfg.preset = channel::config_one();
        else if (name == "Config-II")
            cfg.preset = channel::config_two();
        else if (name == "ideal")
            cfg.preset = channel::ideal(channel::config_one()), cfg.preset.name = "ideal";
        else
            throw ConfigError("preset.name: expected \"Config-I\", \"Config-II\" or \"ideal\", got \"" + name + "\"");
    }
    number("preset", "v_dc", cfg.preset.v_dc);
    number("preset", "i_dc", cfg.preset.i_dc);
    number("preset", "p_t", cfg.preset.p_t);
    number("preset", "p_r", cfg.preset.p_r);
    number("preset", "drive_scale", cfg.preset.drive_scale);
    number("preset", "noise_std", cfg.preset.noise_std);
    number("preset", "responsivity", cfg.preset.responsivity);
    if (const auto* v = get("preset", "stages")) {
        cfg.preset.stages.clear();
        for (const auto& s : as_strings(*v, "preset.stages")) {
            try {
                cfg.preset.stages.push_back(parse_stage(s));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("preset.stages: ") + e.what());
            }
        }
    }

    number("vcsel", "i_threshold", cfg.vcsel.i_threshold);
    number("vcsel", "slope_efficiency", cfg.vcsel.slope_efficiency);
    number("vcsel", "i_rollover", cfg.vcsel.i_rollover);
    number("vcsel", "p_max", cfg.vcsel.p_max);
    number("vcsel", "linear_low", cfg.vcsel.linear_low);
    number("vcsel", "linear_high", cfg.vcsel.linear_high);

    if (const auto* v = get("loading", "target_ber"))
        cfg.loading.target_ber = as_numbers(*v, "loading.target_ber");
    number("loading", "plan_ber", cfg.loading.plan_ber);
    number("loading", "power_budget", cfg.loading.power_budget);
    count("loading", "b_max", cfg.loading.b_max);

    count("analysis", "window", cfg.analysis.window);
    number("analysis", "f_cutoff", cfg.analysis.f_cutoff);

    if (const auto* v = get("calibration", "mode")) {
        const auto mode = as_string(*v, "calibration.mode");
        if (mode == "anchored")
            cfg.calibration.mode = CalibrationMode::anchored;
        else if (mode == "flat")
            cfg.calibration.mode = CalibrationMode::flat;
        else if (mode == "pwl")
            cfg.calibration.mode = CalibrationMode::pwl;
        else if (mode == "none")
            cfg.calibration.mode = CalibrationMode::none;
        else
            throw ConfigError("calibration.mode: expected anchored, flat, pwl or none, got \"" + mode + "\"");
    }
    number("calibration", "flat_snr_db", cfg.calibration.flat_snr_db);
    optional_number("calibration", "anchor_f1", cfg.calibration.anchor_f1);
    optional_number("calibration", "anchor_f2", cfg.calibration.anchor_f2);
    optional_number("calibration", "anchor_f_ext", cfg.calibration.anchor_f_ext);
    optional_number("calibration", "anchor_ber", cfg.calibration.anchor_ber);
    optional_number("calibration", "anchor_rate", cfg.calibration.anchor_rate);
    count("calibration", "seed", cfg.calibration.seed);
    if (const auto* v = get("calibration", "iterations"))
        cfg.calibration.iterations = static_cast<int>(as_count(*v, "calibration.iterations"));

    if (doc.contains("pwl")) {
        analysis::PwlModel m;
        auto need = [&](const char* key) {
            const auto* v = get("pwl", key);
            if (!v)
                throw ConfigError(std::string("pwl.") + key + ": required");
            return as_number(*v, std::string("pwl.") + key);
        };
        m.f1 = need("f1");
        m.f2 = need("f2");
        m.f_cutoff = need("f_cutoff");
        m.seg1 = {need("seg1_intercept_db"), need("seg1_slope_db_per_hz")};
        m.seg2 = {need("seg2_intercept_db"), need("seg2_slope_db_per_hz")};
        optional_number("pwl", "f_ext", m.f_ext);
        m.extrapolatable = m.f_ext.has_value();
        if (!(m.f1 < m.f2 && m.f2 <= m.f_cutoff))
            throw ConfigError("pwl: need f1 < f2 <= f_cutoff");
        cfg.pwl = m;
    }

    if (const auto* v = get("run", "seeds"))
        cfg.run.seeds = as_seeds(as_numbers(*v, "run.seeds"), "run.seeds");
    if (const auto* v = get("run", "output_dir"))
        cfg.run.output_dir = as_string(*v, "run.output_dir");
    if (const auto* v = get("run", "noiseless"))
        cfg.run.noiseless = as_bool(*v, "run.noiseless");
    if (const auto* v = get("run", "dump_waveforms"))
        cfg.run.dump_waveforms = as_bool(*v, "run.dump_waveforms");

    if (env_seeds && !env_seeds->empty()) {
        std::vector<double> values;
        std::size_t start = 0;
        while (true) {
            const auto comma = env_seeds->find(',', start);
            const auto item = trim(std::string_view(*env_seeds).substr(
                start, comma == std::string::npos ? std::string::npos : comma - start));
            try {
                values.push_back(static_cast<double>(csv::parse_uint(item)));
            } catch (const std::invalid_argument&) {
                throw ConfigError("OWC_SEED: expected comma-separated non-negative integers");
            }
            if (comma == std::string::npos)
                break;
            start = comma + 1;
        }
        cfg.run.seeds = as_seeds(values, "OWC_SEED");
    }

    cfg.validate();
    return cfg;
}

/// OWC_SEED from the process environment, if set.
inline std::optional<std::string> seed_override_from_env()
{
    if (const char* s = std::getenv("OWC_SEED"))
        return std::string(s);
    return std::nullopt;
}

/// PwlModel in the [pwl] section format accepted by parse_config.
inline std::string format_pwl_section(const analysis::PwlModel& m)
{
    using csv::format_double;
    std::string out = "[pwl]\n";
    out += "f1 = " + format_double(m.f1) + "\n";
    out += "f2 = " + format_double(m.f2) + "\n";
    out += "f_cutoff = " + format_double(m.f_cutoff) + "\n";
    out += "seg1_intercept_db = " + format_double(m.seg1.intercept_db) + "\n";
    out += "seg1_slope_db_per_hz = " + format_double(m.seg1.slope_db_per_hz) + "\n";
    out += "seg2_intercept_db = " + format_double(m.seg2.intercept_db) + "\n";
    out += "seg2_slope_db_per_hz = " + format_double(m.seg2.slope_db_per_hz) + "\n";
    if (m.f_ext)
        out += "f_ext = " + format_double(*m.f_ext) + "\n";
    return out;
}

} // namespace owc::config

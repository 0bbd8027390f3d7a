#pragma once

// CSV emission and parsing for every table the runner writes. Numbers use
// the shortest decimal form that round-trips, so files are byte-stable.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "owclab/analysis.hpp"
#include "owclab/fiber.hpp"
#include "owclab/loading.hpp"
#include "owclab/sweep.hpp"

namespace owc::csv {

inline std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s)
{
    if (s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    if (s == "-inf")
        return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    return v;
}

inline std::uint64_t parse_uint(std::string_view s)
{
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("not an unsigned integer: '" + std::string(s) + "'");
    return v;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name)
                return i;
        throw std::invalid_argument("missing CSV column '" + std::string(name) + "'");
    }
};

inline std::vector<std::string> split_line(std::string_view line)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        auto cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' '))
            cell.remove_suffix(1);
        while (!cell.empty() && cell.front() == ' ')
            cell.remove_prefix(1);
        out.emplace_back(cell);
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

/// Header row then data rows; blank lines and '#' lines are skipped.
inline Table read_table(std::string_view text)
{
    Table t;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos || line.front() == '#')
            continue;
        auto cells = split_line(line);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            throw std::invalid_argument("CSV line " + std::to_string(lineno) + ": expected " +
                                        std::to_string(t.header.size()) + " fields, got " +
                                        std::to_string(cells.size()));
        t.rows.push_back(std::move(cells));
    }
    if (t.header.empty())
        throw std::invalid_argument("CSV has no header");
    return t;
}

inline std::string join(const std::vector<std::string>& cells)
{
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i)
            s += ',';
        s += cells[i];
    }
    s += '\n';
    return s;
}

// snr_profile.csv: subcarrier_index, frequency_hz, snr_linear, snr_db.
// snr_db is informational; parsing reads snr_linear.

inline std::string emit_snr_profile(const SnrProfile& p)
{
    std::string out = "subcarrier_index,frequency_hz,snr_linear,snr_db\n";
    for (std::size_t k = 0; k < p.size(); ++k)
        out += join({std::to_string(k), format_double(p.frequencies[k]), format_double(p.snr_linear[k]),
                     format_double(to_db(p.snr_linear[k]))});
    return out;
}

inline SnrProfile parse_snr_profile(std::string_view text)
{
    const auto t = read_table(text);
    const auto cf = t.column("frequency_hz");
    std::optional<std::size_t> clin;
    for (std::size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i] == "snr_linear")
            clin = i;
    const auto cdb = clin ? *clin : t.column("snr_db");
    SnrProfile p;
    for (const auto& r : t.rows) {
        p.frequencies.push_back(parse_double(r[cf]));
        const double v = parse_double(r[cdb]);
        p.snr_linear.push_back(clin ? v : from_db(v));
    }
    p.validate();
    return p;
}

// loading_plan.csv: subcarrier_index, frequency_hz, snr_db, bits, power_scale.

inline std::string emit_loading_plan(const loading::LoadingPlan& plan, const SnrProfile& profile)
{
    if (profile.size() != plan.n_sc())
        throw std::invalid_argument("profile and plan sizes differ");
    std::string out = "subcarrier_index,frequency_hz,snr_db,bits,power_scale\n";
    for (std::size_t k = 0; k < plan.n_sc(); ++k)
        out += join({std::to_string(k), format_double(profile.frequencies[k]),
                     format_double(to_db(profile.snr_linear[k])), std::to_string(plan.bits[k]),
                     format_double(plan.power_scales[k])});
    return out;
}

inline loading::LoadingPlan parse_loading_plan(std::string_view text, const OfdmConfig& cfg)
{
    const auto t = read_table(text);
    const auto cb = t.column("bits");
    const auto cp = t.column("power_scale");
    loading::LoadingPlan plan;
    for (const auto& r : t.rows) {
        const auto b = parse_uint(r[cb]);
        if (b > 64)
            throw std::invalid_argument("bits out of range: " + r[cb]);
        plan.bits.push_back(static_cast<unsigned>(b));
        plan.power_scales.push_back(parse_double(r[cp]));
        plan.total_bits += plan.bits.back();
    }
    plan.rate = loading::data_rate(plan.total_bits, cfg);
    return plan;
}

// ber_rate.csv: target_ber, gamma, total_bits, rate_bps, measured_ber, seed_count.

inline std::string emit_sweep(const std::vector<analysis::SweepRow>& rows)
{
    std::string out = "target_ber,gamma,total_bits,rate_bps,measured_ber,seed_count\n";
    for (const auto& r : rows)
        out += join({format_double(r.target_ber), format_double(r.gamma), std::to_string(r.total_bits),
                     format_double(r.rate_bps), format_double(r.measured_ber), std::to_string(r.seed_count)});
    return out;
}

inline std::vector<analysis::SweepRow> parse_sweep(std::string_view text)
{
    const auto t = read_table(text);
    const auto c0 = t.column("target_ber");
    const auto c1 = t.column("gamma");
    const auto c2 = t.column("total_bits");
    const auto c3 = t.column("rate_bps");
    const auto c4 = t.column("measured_ber");
    const auto c5 = t.column("seed_count");
    std::vector<analysis::SweepRow> rows;
    for (const auto& r : t.rows)
        rows.push_back({parse_double(r[c0]), parse_double(r[c1]), parse_uint(r[c2]), parse_double(r[c3]),
                        parse_double(r[c4]), parse_uint(r[c5])});
    return rows;
}

// pwl_model.csv: one row; f_ext_hz is empty when there is no crossing.

inline std::string emit_pwl_model(const analysis::PwlModel& m)
{
    std::string out = "f1_hz,f2_hz,f_cutoff_hz,seg1_intercept_db,seg1_slope_db_per_hz,seg2_intercept_db,"
                      "seg2_slope_db_per_hz,f_ext_hz,f2_at_cutoff,extrapolatable,residual_db2\n";
    out += join({format_double(m.f1), format_double(m.f2), format_double(m.f_cutoff), format_double(m.seg1.intercept_db),
                 format_double(m.seg1.slope_db_per_hz), format_double(m.seg2.intercept_db),
                 format_double(m.seg2.slope_db_per_hz), m.f_ext ? format_double(*m.f_ext) : std::string(),
                 m.f2_at_cutoff ? "1" : "0", m.extrapolatable ? "1" : "0", format_double(m.residual)});
    return out;
}

inline analysis::PwlModel parse_pwl_model(std::string_view text)
{
    const auto t = read_table(text);
    if (t.rows.size() != 1)
        throw std::invalid_argument("pwl model CSV must have exactly one row");
    const auto& r = t.rows.front();
    auto num = [&](std::string_view col) { return parse_double(r[t.column(col)]); };
    auto flag = [&](std::string_view col) {
        const auto& v = r[t.column(col)];
        if (v != "0" && v != "1")
            throw std::invalid_argument("flag column '" + std::string(col) + "' must be 0 or 1");
        return v == "1";
    };
    analysis::PwlModel m;
    m.f1 = num("f1_hz");
    m.f2 = num("f2_hz");
    m.f_cutoff = num("f_cutoff_hz");
    m.seg1 = {num("seg1_intercept_db"), num("seg1_slope_db_per_hz")};
    m.seg2 = {num("seg2_intercept_db"), num("seg2_slope_db_per_hz")};
    if (const auto& e = r[t.column("f_ext_hz")]; !e.empty())
        m.f_ext = parse_double(e);
    m.f2_at_cutoff = flag("f2_at_cutoff");
    m.extrapolatable = flag("extrapolatable");
    m.residual = num("residual_db2");
    return m;
}

// rate_bounds.csv: target_ber, gamma, bound_cutoff_bps, bound_ext_bps
// (empty when the model cannot be extrapolated).

struct RateBoundRow {
    double target_ber = 0.0;
    double gamma = 0.0;
    double bound_cutoff = 0.0;
    std::optional<double> bound_ext;
    bool operator==(const RateBoundRow&) const = default;
};

inline std::string emit_rate_bounds(const std::vector<RateBoundRow>& rows)
{
    std::string out = "target_ber,gamma,bound_cutoff_bps,bound_ext_bps\n";
    for (const auto& r : rows)
        out += join({format_double(r.target_ber), format_double(r.gamma), format_double(r.bound_cutoff),
                     r.bound_ext ? format_double(*r.bound_ext) : std::string()});
    return out;
}

inline std::vector<RateBoundRow> parse_rate_bounds(std::string_view text)
{
    const auto t = read_table(text);
    const auto c0 = t.column("target_ber");
    const auto c1 = t.column("gamma");
    const auto c2 = t.column("bound_cutoff_bps");
    const auto c3 = t.column("bound_ext_bps");
    std::vector<RateBoundRow> rows;
    for (const auto& r : t.rows) {
        RateBoundRow row{parse_double(r[c0]), parse_double(r[c1]), parse_double(r[c2]), std::nullopt};
        if (!r[c3].empty())
            row.bound_ext = parse_double(r[c3]);
        rows.push_back(row);
    }
    return rows;
}

// fiber_report.csv: quantity, value, unit.

inline std::string emit_fiber_report(const fiber::DispersionReport& r)
{
    std::string out = "quantity,value,unit\n";
    out += join({"sigma_cd", format_double(r.sigma_cd_ps), "ps"});
    out += join({"sigma_md", format_double(r.sigma_md_ps), "ps"});
    out += join({"sigma_total", format_double(r.sigma_total_ps), "ps"});
    out += join({"f3db_cd", format_double(r.f3db_cd_hz), "Hz"});
    out += join({"f3db_md", format_double(r.f3db_md_hz), "Hz"});
    out += join({"f3db", format_double(r.f3db_hz), "Hz"});
    out += join({"attenuation", format_double(r.attenuation_db), "dB"});
    out += join({"l_max", format_double(r.l_max_km), "km"});
    return out;
}

inline fiber::DispersionReport parse_fiber_report(std::string_view text)
{
    const auto t = read_table(text);
    const auto cq = t.column("quantity");
    const auto cv = t.column("value");
    fiber::DispersionReport r;
    for (const auto& row : t.rows) {
        const double v = parse_double(row[cv]);
        const auto& q = row[cq];
        if (q == "sigma_cd")
            r.sigma_cd_ps = v;
        else if (q == "sigma_md")
            r.sigma_md_ps = v;
        else if (q == "sigma_total")
            r.sigma_total_ps = v;
        else if (q == "f3db_cd")
            r.f3db_cd_hz = v;
        else if (q == "f3db_md")
            r.f3db_md_hz = v;
        else if (q == "f3db")
            r.f3db_hz = v;
        else if (q == "attenuation")
            r.attenuation_db = v;
        else if (q == "l_max")
            r.l_max_km = v;
        else
            throw std::invalid_argument("unknown fiber report quantity '" + q + "'");
    }
    return r;
}

// Waveforms: single column "sample".

inline std::string emit_waveform(const std::vector<double>& x)
{
    std::string out = "sample\n";
    out.reserve(x.size() * 24);
    for (double v : x) {
        out += format_double(v);
        out += '\n';
    }
    return out;
}

inline std::vector<double> parse_waveform(std::string_view text)
{
    const auto t = read_table(text);
    const auto c = t.column("sample");
    std::vector<double> x;
    x.reserve(t.rows.size());
    for (const auto& r : t.rows)
        x.push_back(parse_double(r[c]));
    return x;
}

} // namespace owc::csv

#include "retrobeam/trace.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>

#include "retrobeam/errors.hpp"

namespace retrobeam {

namespace {

constexpr const char* kHeader = "t_s,power_dbw,r_db,g_db,efficiency,xi_max,alignment,stability";

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double parse_double(const std::string& field, const char* what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw ParseError(std::string("bad numeric field for ") + what + ": " + field);
    }
    return v;
}

Stability stability_from_string(const std::string& s) {
    if (s == "stable") return Stability::Stable;
    if (s == "marginal") return Stability::Marginal;
    if (s == "unstable") return Stability::Unstable;
    throw ParseError("unknown stability label: " + s);
}

}  // namespace

std::string SimulationTrace::to_csv() const {
    std::string out(kHeader);
    out += '\n';
    for (const auto& row : rows) {
        out += format_double(row.t);
        out += ',';
        out += format_double(row.power_dbw);
        out += ',';
        out += format_double(row.r_db);
        out += ',';
        out += format_double(row.g_db);
        out += ',';
        out += format_double(row.efficiency);
        out += ',';
        out += format_double(row.xi_max);
        out += ',';
        out += format_double(row.alignment);
        out += ',';
        out += to_string(row.stability);
        out += '\n';
    }
    return out;
}

void SimulationTrace::write_csv(const std::filesystem::path& path) const {
    std::error_code ec;
    const auto dir = path.parent_path();
    if (!dir.empty() && !std::filesystem::exists(dir, ec)) {
        throw IoError("directory does not exist: " + dir.string());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << to_csv();
        if (!out.good()) throw IoError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename to " + path.string() + " failed: " + ec.message());
}

SimulationTrace SimulationTrace::from_csv_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty trace");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader) throw ParseError("unexpected trace header: " + line);
    SimulationTrace trace;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (fields.size() != 8) {
            throw ParseError("line " + std::to_string(line_no) + ": expected 8 fields");
        }
        TraceRow row;
        row.t = parse_double(fields[0], "t_s");
        row.power_dbw = parse_double(fields[1], "power_dbw");
        row.r_db = parse_double(fields[2], "r_db");
        row.g_db = parse_double(fields[3], "g_db");
        row.efficiency = parse_double(fields[4], "efficiency");
        row.xi_max = parse_double(fields[5], "xi_max");
        row.alignment = parse_double(fields[6], "alignment");
        row.stability = stability_from_string(fields[7]);
        trace.rows.push_back(row);
    }
    return trace;
}

SimulationTrace SimulationTrace::read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_csv_text(text);
}

double settling_time_estimate(const std::vector<double>& t, const std::vector<double>& series,
                              double band_fraction) {
    if (t.empty() || t.size() != series.size()) {
        throw InsufficientDataError("settling estimate needs a non-empty, aligned series");
    }
    const double final_value = series.back();
    const double band = std::abs(final_value) * band_fraction;
    std::size_t first_inside = t.size() - 1;
    for (std::size_t i = t.size(); i-- > 0;) {
        if (std::abs(series[i] - final_value) > band) break;
        first_inside = i;
    }
    return t[first_inside];
}

}  // namespace retrobeam

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "retrobeam/loop.hpp"

namespace retrobeam {

struct TraceRow {
    double t = 0.0;           // seconds
    double power_dbw = 0.0;   // measured output power
    double r_db = 0.0;        // commanded attenuation
    double g_db = 0.0;        // effective loop disturbance 20 log10(xi_max |G|)
    double efficiency = 0.0;
    double xi_max = 0.0;
    double alignment = 0.0;   // projection fraction onto the dominant mode
    Stability stability = Stability::Stable;
};

struct SimulationTrace {
    std::vector<TraceRow> rows;

    bool empty() const { return rows.empty(); }
    std::size_t size() const { return rows.size(); }
    const TraceRow& back() const { return rows.back(); }

    std::string to_csv() const;
    // Atomic write (temp + rename). Throws IoError.
    void write_csv(const std::filesystem::path& path) const;
    static SimulationTrace from_csv_text(const std::string& text);
    static SimulationTrace read_csv(const std::filesystem::path& path);
};

// First time the series stays inside +/- band of its final value.
// band = band_fraction * |final value|; returns the last row's t when the
// series only settles at the end, and throws InsufficientDataError on empty
// input.
double settling_time_estimate(const std::vector<double>& t, const std::vector<double>& series,
                              double band_fraction = 0.01);

}  // namespace retrobeam

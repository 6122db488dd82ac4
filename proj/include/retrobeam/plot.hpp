#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace retrobeam {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<PlotSeries> series;
    int width = 900;
    int height = 520;
};

// Deterministic standalone SVG line plot. Throws DimensionError on empty or
// mismatched series and IoError on unwritable paths (write is temp + rename).
std::string render_svg(const PlotSpec& spec);
void write_svg(const PlotSpec& spec, const std::filesystem::path& path);

}  // namespace retrobeam

#include "retrobeam/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <system_error>

#include "retrobeam/errors.hpp"

namespace retrobeam {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#17becf"};
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 55;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Range {
    double lo = 0.0;
    double hi = 1.0;
};

Range span_of(const std::vector<PlotSeries>& series, bool use_x) {
    Range r{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& s : series) {
        const auto& v = use_x ? s.x : s.y;
        for (double value : v) {
            if (!std::isfinite(value)) continue;
            r.lo = std::min(r.lo, value);
            r.hi = std::max(r.hi, value);
        }
    }
    if (!std::isfinite(r.lo) || !std::isfinite(r.hi)) return {0.0, 1.0};
    if (r.lo == r.hi) {
        const double pad = r.lo == 0.0 ? 1.0 : std::abs(r.lo) * 0.1;
        return {r.lo - pad, r.hi + pad};
    }
    return r;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
    if (spec.series.empty()) throw DimensionError("plot needs at least one series");
    for (const auto& s : spec.series) {
        if (s.x.empty() || s.x.size() != s.y.size()) {
            throw DimensionError("plot series must be non-empty with matching x/y lengths");
        }
    }
    const Range rx = span_of(spec.series, true);
    const Range ry = span_of(spec.series, false);
    const double plot_w = spec.width - kMarginLeft - kMarginRight;
    const double plot_h = spec.height - kMarginTop - kMarginBottom;
    auto sx = [&](double x) { return kMarginLeft + (x - rx.lo) / (rx.hi - rx.lo) * plot_w; };
    auto sy = [&](double y) {
        return kMarginTop + plot_h - (y - ry.lo) / (ry.hi - ry.lo) * plot_h;
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.width) +
           "\" height=\"" + std::to_string(spec.height) + "\" viewBox=\"0 0 " +
           std::to_string(spec.width) + " " + std::to_string(spec.height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + num(spec.width / 2.0) + "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">" + escape_xml(spec.title) + "</text>\n";

    // Grid and tick labels, five divisions per axis.
    for (int i = 0; i <= 5; ++i) {
        const double fx = rx.lo + (rx.hi - rx.lo) * i / 5.0;
        const double fy = ry.lo + (ry.hi - ry.lo) * i / 5.0;
        svg += "<line x1=\"" + num(sx(fx)) + "\" y1=\"" + num(kMarginTop) + "\" x2=\"" +
               num(sx(fx)) + "\" y2=\"" + num(kMarginTop + plot_h) +
               "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "<line x1=\"" + num(kMarginLeft) + "\" y1=\"" + num(sy(fy)) + "\" x2=\"" +
               num(kMarginLeft + plot_w) + "\" y2=\"" + num(sy(fy)) +
               "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + num(sx(fx)) + "\" y=\"" + num(kMarginTop + plot_h + 18) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
               num(fx) + "</text>\n";
        svg += "<text x=\"" + num(kMarginLeft - 8) + "\" y=\"" + num(sy(fy) + 4) +
               "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + num(fy) +
               "</text>\n";
    }
    svg += "<rect x=\"" + num(kMarginLeft) + "\" y=\"" + num(kMarginTop) + "\" width=\"" +
           num(plot_w) + "\" height=\"" + num(plot_h) +
           "\" fill=\"none\" stroke=\"#333333\"/>\n";
    svg += "<text x=\"" + num(kMarginLeft + plot_w / 2.0) + "\" y=\"" +
           num(spec.height - 12.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
           escape_xml(spec.x_label) + "</text>\n";
    svg += "<text x=\"16\" y=\"" + num(kMarginTop + plot_h / 2.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 16 " + num(kMarginTop + plot_h / 2.0) + ")\">" +
           escape_xml(spec.y_label) + "</text>\n";

    for (std::size_t si = 0; si < spec.series.size(); ++si) {
        const auto& s = spec.series[si];
        const char* color = kPalette[si % (sizeof kPalette / sizeof kPalette[0])];
        svg += "<polyline fill=\"none\" stroke=\"";
        svg += color;
        svg += "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            svg += num(sx(s.x[i]));
            svg += ',';
            svg += num(sy(s.y[i]));
            svg += ' ';
        }
        svg += "\"/>\n";
        if (!s.label.empty()) {
            const double ly = kMarginTop + 16.0 + 16.0 * static_cast<double>(si);
            svg += "<line x1=\"" + num(kMarginLeft + plot_w - 150) + "\" y1=\"" + num(ly - 4) +
                   "\" x2=\"" + num(kMarginLeft + plot_w - 125) + "\" y2=\"" + num(ly - 4) +
                   "\" stroke=\"";
            svg += color;
            svg += "\" stroke-width=\"2\"/>\n";
            svg += "<text x=\"" + num(kMarginLeft + plot_w - 118) + "\" y=\"" + num(ly) +
                   "\" font-family=\"sans-serif\" font-size=\"11\">" + escape_xml(s.label) +
                   "</text>\n";
        }
    }
    svg += "</svg>\n";
    return svg;
}

void write_svg(const PlotSpec& spec, const std::filesystem::path& path) {
    const std::string svg = render_svg(spec);
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
        out << svg;
        if (!out.good()) throw IoError("short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename to " + path.string() + " failed: " + ec.message());
}

}  // namespace retrobeam

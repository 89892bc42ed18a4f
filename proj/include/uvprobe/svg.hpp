#pragma once
// Self-contained SVG figures. Output is plain deterministic text: every
// coordinate is printed with fixed precision and no timestamps or ids
// depend on the environment.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "uvprobe/error.hpp"
#include "uvprobe/format.hpp"
#include "uvprobe/lape.hpp"

namespace uvprobe::svg {

using Cell = std::optional<double>;  // nullopt = undefined

struct Heatmap {
    std::string title;
    std::vector<std::string> row_labels;  // e.g. languages
    std::vector<std::string> col_labels;  // e.g. layers
    std::vector<std::vector<Cell>> values;
};

namespace detail {

inline std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string num(double v) { return format_fixed(v, 1); }

// Sequential map from pale yellow (0) through teal to dark blue (1).
inline std::string color(double v) {
    static constexpr std::array<std::array<double, 3>, 5> stops = {{
        {255, 255, 217}, {199, 233, 180}, {65, 182, 196}, {34, 94, 168}, {8, 29, 88}}};
    v = std::clamp(v, 0.0, 1.0);
    const double pos = v * (stops.size() - 1);
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(pos), stops.size() - 2);
    const double t = pos - static_cast<double>(i);
    char buf[8];
    int rgb[3];
    for (int k = 0; k < 3; ++k) rgb[k] = static_cast<int>(std::lround(stops[i][k] + t * (stops[i + 1][k] - stops[i][k])));
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
    return buf;
}

inline constexpr std::array<const char*, 10> kPalette = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                                                         "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

}  // namespace detail

inline std::string render_heatmap(const Heatmap& h) {
    const std::size_t rows = h.values.size();
    if (rows == 0 || h.values.front().empty()) throw Error("cannot render an empty heatmap");
    const std::size_t cols = h.values.front().size();
    for (const auto& r : h.values)
        if (r.size() != cols) throw Error("ragged heatmap matrix");
    if (h.row_labels.size() != rows || h.col_labels.size() != cols) throw Error("heatmap label count mismatch");

    const double cell = 48, left = 70, top = 40;
    const double width = left + cell * static_cast<double>(cols) + 20;
    const double height = top + cell * static_cast<double>(rows) + 50;
    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(width) + "\" height=\"" +
         detail::num(height) + "\" viewBox=\"0 0 " + detail::num(width) + " " + detail::num(height) + "\">\n";
    s += "<defs><pattern id=\"hatch\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\" "
         "patternTransform=\"rotate(45)\"><rect width=\"6\" height=\"6\" fill=\"#ffffff\"/>"
         "<line x1=\"0\" y1=\"0\" x2=\"0\" y2=\"6\" stroke=\"#888888\" stroke-width=\"2\"/></pattern></defs>\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    s += "<text x=\"" + detail::num(left) + "\" y=\"24.0\" font-family=\"sans-serif\" font-size=\"14\">" +
         detail::escape(h.title) + "</text>\n";
    for (std::size_t r = 0; r < rows; ++r) {
        const double y = top + cell * static_cast<double>(r);
        s += "<text x=\"" + detail::num(left - 8) + "\" y=\"" + detail::num(y + cell / 2 + 4) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" + detail::escape(h.row_labels[r]) +
             "</text>\n";
        for (std::size_t c = 0; c < cols; ++c) {
            const double x = left + cell * static_cast<double>(c);
            const auto& v = h.values[r][c];
            const std::string pos = "x=\"" + detail::num(x) + "\" y=\"" + detail::num(y) + "\" width=\"" +
                                    detail::num(cell) + "\" height=\"" + detail::num(cell) + "\"";
            const std::string where = " data-row=\"" + std::to_string(r) + "\" data-col=\"" + std::to_string(c) + "\"";
            if (!v) {
                s += "<rect class=\"cell undefined\"" + where + " " + pos +
                     " fill=\"url(#hatch)\" stroke=\"#ffffff\"/>\n";
                continue;
            }
            s += "<rect class=\"cell\"" + where + " " + pos + " fill=\"" + detail::color(*v) +
                 "\" stroke=\"#ffffff\"/>\n";
            s += "<text class=\"value\"" + where + " x=\"" + detail::num(x + cell / 2) + "\" y=\"" +
                 detail::num(y + cell / 2 + 4) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
                 "font-size=\"11\" fill=\"" + (*v > 0.6 ? "#ffffff" : "#000000") + "\">" + format_fixed(*v, 2) +
                 "</text>\n";
        }
    }
    const double ybase = top + cell * static_cast<double>(rows);
    for (std::size_t c = 0; c < cols; ++c)
        s += "<text x=\"" + detail::num(left + cell * static_cast<double>(c) + cell / 2) + "\" y=\"" +
             detail::num(ybase + 16) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
             detail::escape(h.col_labels[c]) + "</text>\n";
    s += "<text x=\"" + detail::num(left + cell * static_cast<double>(cols) / 2) + "\" y=\"" +
         detail::num(ybase + 38) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">layer</text>\n";
    s += "</svg>\n";
    return s;
}

enum class BarMode { Total, PerLayer };

inline std::string render_bars(const lape::LapeSummary& summary, BarMode mode, const std::string& title = {}) {
    const std::size_t C = summary.class_names.size();
    if (C == 0) throw Error("cannot render bars for an empty summary");
    if (mode == BarMode::PerLayer && summary.layers.empty()) throw Error("summary has no layers");

    const std::size_t groups = mode == BarMode::Total ? 1 : summary.layers.size();
    auto count = [&](std::size_t g, std::size_t c) {
        return mode == BarMode::Total ? summary.totals[c] : summary.per_layer[g][c];
    };
    std::size_t max_count = 1;
    for (std::size_t g = 0; g < groups; ++g)
        for (std::size_t c = 0; c < C; ++c) max_count = std::max(max_count, count(g, c));

    const double bar = mode == BarMode::Total ? 40 : 10;
    const double gap = mode == BarMode::Total ? 12 : 14;
    const double left = 50, top = 40, plot_h = 200;
    const double group_w = mode == BarMode::Total ? (bar + gap) * static_cast<double>(C) : bar * static_cast<double>(C) + gap;
    const double width = left + group_w * static_cast<double>(groups) + 20 + (mode == BarMode::PerLayer ? 90 : 0);
    const double height = top + plot_h + 60;
    const double scale = plot_h / static_cast<double>(max_count);

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + detail::num(width) + "\" height=\"" +
         detail::num(height) + "\" viewBox=\"0 0 " + detail::num(width) + " " + detail::num(height) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    s += "<text x=\"" + detail::num(left) + "\" y=\"24.0\" font-family=\"sans-serif\" font-size=\"14\">" +
         detail::escape(title) + "</text>\n";
    const double base = top + plot_h;
    s += "<line x1=\"" + detail::num(left) + "\" y1=\"" + detail::num(base) + "\" x2=\"" +
         detail::num(left + group_w * static_cast<double>(groups)) + "\" y2=\"" + detail::num(base) +
         "\" stroke=\"#000000\"/>\n";
    for (std::size_t g = 0; g < groups; ++g) {
        const double gx = left + group_w * static_cast<double>(g);
        s += mode == BarMode::Total ? "<g class=\"group\">\n"
                                    : "<g class=\"group\" data-layer=\"" + std::to_string(summary.layers[g]) + "\">\n";
        for (std::size_t c = 0; c < C; ++c) {
            const auto n = count(g, c);
            const double x = mode == BarMode::Total ? gx + gap / 2 + (bar + gap) * static_cast<double>(c)
                                                    : gx + gap / 2 + bar * static_cast<double>(c);
            const double h = scale * static_cast<double>(n);
            s += "<rect class=\"bar\" data-condition=\"" + detail::escape(summary.class_names[c]) +
                 "\" data-count=\"" + std::to_string(n) + "\" x=\"" + detail::num(x) + "\" y=\"" +
                 detail::num(base - h) + "\" width=\"" + detail::num(bar) + "\" height=\"" + detail::num(h) +
                 "\" fill=\"" + detail::kPalette[c % detail::kPalette.size()] + "\"/>\n";
            if (mode == BarMode::Total) {
                s += "<text class=\"count\" x=\"" + detail::num(x + bar / 2) + "\" y=\"" + detail::num(base - h - 4) +
                     "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + std::to_string(n) +
                     "</text>\n";
                s += "<text x=\"" + detail::num(x + bar / 2) + "\" y=\"" + detail::num(base + 16) +
                     "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
                     detail::escape(summary.class_names[c]) + "</text>\n";
            }
        }
        if (mode == BarMode::PerLayer)
            s += "<text x=\"" + detail::num(gx + group_w / 2) + "\" y=\"" + detail::num(base + 16) +
                 "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
                 std::to_string(summary.layers[g]) + "</text>\n";
        s += "</g>\n";
    }
    if (mode == BarMode::PerLayer) {
        const double lx = left + group_w * static_cast<double>(groups) + 20;
        for (std::size_t c = 0; c < C; ++c) {
            const double ly = top + 16 * static_cast<double>(c);
            s += "<rect x=\"" + detail::num(lx) + "\" y=\"" + detail::num(ly) + "\" width=\"10.0\" height=\"10.0\" fill=\"" +
                 detail::kPalette[c % detail::kPalette.size()] + "\"/>\n";
            s += "<text x=\"" + detail::num(lx + 14) + "\" y=\"" + detail::num(ly + 9) +
                 "\" font-family=\"sans-serif\" font-size=\"11\">" + detail::escape(summary.class_names[c]) +
                 "</text>\n";
        }
        s += "<text x=\"" + detail::num(left + group_w * static_cast<double>(groups) / 2) + "\" y=\"" +
             detail::num(base + 38) + "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">layer</text>\n";
    }
    s += "</svg>\n";
    return s;
}

}  // namespace uvprobe::svg

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "spinquant/errors.hpp"
#include "spinquant/io.hpp"

namespace spinquant {

/// Minimal self-contained SVG line plot (axes, polyline path, corner
/// labels); no external assets or scripts.
inline std::string svg_line_plot(const std::vector<double>& xs, const std::vector<double>& ys,
                                 const std::string& x_label, const std::string& y_label,
                                 int width = 800, int height = 300) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw value_error("svg_line_plot: need matching x/y with at least 2 samples");

    double x_lo = xs[0], x_hi = xs[0], y_lo = ys[0], y_hi = ys[0];
    for (std::size_t i = 0; i < xs.size(); ++i) {
        x_lo = std::min(x_lo, xs[i]);
        x_hi = std::max(x_hi, xs[i]);
        y_lo = std::min(y_lo, ys[i]);
        y_hi = std::max(y_hi, ys[i]);
    }
    if (x_hi == x_lo) x_hi = x_lo + 1.0;
    if (y_hi == y_lo) y_hi = y_lo + 1.0;

    const double ml = 60, mr = 15, mt = 15, mb = 35; // margins
    const double pw = width - ml - mr, ph = height - mt - mb;
    const auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * pw; };
    const auto py = [&](double y) { return mt + (y_hi - y) / (y_hi - y_lo) * ph; };

    const auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        return std::string(buf);
    };

    std::string d = "M " + num(px(xs[0])) + " " + num(py(ys[0]));
    for (std::size_t i = 1; i < xs.size(); ++i)
        d += " L " + num(px(xs[i])) + " " + num(py(ys[i]));

    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
           "\" height=\"" + std::to_string(height) + "\">\n";
    svg += "<rect x=\"" + num(ml) + "\" y=\"" + num(mt) + "\" width=\"" + num(pw) +
           "\" height=\"" + num(ph) + "\" fill=\"white\" stroke=\"black\"/>\n";
    svg += "<path d=\"" + d + "\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.2\"/>\n";
    svg += "<text x=\"" + num(ml + pw / 2) + "\" y=\"" + num(height - 8.0) +
           "\" text-anchor=\"middle\" font-size=\"12\">" + x_label + "</text>\n";
    svg += "<text x=\"14\" y=\"" + num(mt + ph / 2) +
           "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 " +
           num(mt + ph / 2) + ")\">" + y_label + "</text>\n";
    svg += "<text x=\"" + num(ml - 5) + "\" y=\"" + num(py(y_lo)) +
           "\" text-anchor=\"end\" font-size=\"10\">" + num(y_lo) + "</text>\n";
    svg += "<text x=\"" + num(ml - 5) + "\" y=\"" + num(py(y_hi) + 10) +
           "\" text-anchor=\"end\" font-size=\"10\">" + num(y_hi) + "</text>\n";
    svg += "<text x=\"" + num(px(x_lo)) + "\" y=\"" + num(height - 20.0) +
           "\" text-anchor=\"middle\" font-size=\"10\">" + num(x_lo) + "</text>\n";
    svg += "<text x=\"" + num(px(x_hi)) + "\" y=\"" + num(height - 20.0) +
           "\" text-anchor=\"middle\" font-size=\"10\">" + num(x_hi) + "</text>\n";
    svg += "</svg>\n";
    return svg;
}

} // namespace spinquant

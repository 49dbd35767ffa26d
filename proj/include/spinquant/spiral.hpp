#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "spinquant/errors.hpp"
#include "spinquant/io.hpp"

namespace spinquant {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

/// Flat spiral for a wind-up mainspring: `turns` full revolutions growing
/// from the axle radius r0 out to r1.
struct SpiralSpec {
    double r0 = 0.003;         // m, inner (axle) radius
    double r1 = 0.020;         // m, outer radius
    double turns = 5.0;        // revolutions at rest
    int samples_per_turn = 256;

    void validate() const {
        if (!(r0 > 0.0) || !(r1 >= r0))
            throw value_error("SpiralSpec: need 0 < r0 <= r1");
        if (!(turns >= 1.0))
            throw value_error("SpiralSpec: need at least 1 turn");
        if (samples_per_turn < 16)
            throw value_error("SpiralSpec: samples_per_turn must be >= 16");
    }
};

/// Sample the spiral uniformly in theta over [0, 2*pi*turns];
/// turns*samples_per_turn + 1 points.
///
/// corrected (default): the Archimedean form
///   r(theta) = r0 + (r1 - r0) * theta / (2*pi*turns),  (x, y) = r(cos, sin),
/// which starts on the axle at (r0, 0) and ends at radius r1.
/// corrected=false reproduces the legacy parameterization
///   x = r1 - (r0 - r1)*(theta/(2*pi*turns))*cos(theta)  (same for y with sin),
/// kept for comparison; it starts at (r1, r1) rather than on the axle.
inline std::vector<Point2> spiral_polyline(const SpiralSpec& spec, bool corrected = true) {
    spec.validate();
    const auto count = static_cast<std::size_t>(std::llround(spec.turns * spec.samples_per_turn));
    const double theta_end = 2.0 * std::numbers::pi * spec.turns;

    std::vector<Point2> pts(count + 1);
    for (std::size_t i = 0; i <= count; ++i) {
        const double theta = theta_end * static_cast<double>(i) / static_cast<double>(count);
        const double frac = theta / theta_end;
        if (corrected) {
            const double r = spec.r0 + (spec.r1 - spec.r0) * frac;
            pts[i] = {r * std::cos(theta), r * std::sin(theta)};
        } else {
            pts[i] = {spec.r1 - (spec.r0 - spec.r1) * frac * std::cos(theta),
                      spec.r1 - (spec.r0 - spec.r1) * frac * std::sin(theta)};
        }
    }
    return pts;
}

inline double polyline_length(const std::vector<Point2>& pts) {
    if (pts.size() < 2)
        throw value_error("polyline_length: need at least 2 points");
    double len = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i)
        len += std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
    return len;
}

/// Single-path SVG in millimetre user units (input points are metres), for
/// use as a 2D profile in CAD tools. The viewBox is the polyline bounding
/// box padded by half the stroke width.
inline std::string export_svg(const std::vector<Point2>& pts, double stroke_mm = 0.5) {
    if (pts.empty())
        throw value_error("export_svg: empty polyline");
    if (!(stroke_mm > 0.0))
        throw value_error("export_svg: stroke width must be positive");

    double min_x = pts[0].x, max_x = pts[0].x, min_y = pts[0].y, max_y = pts[0].y;
    for (const auto& p : pts) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    const double pad = stroke_mm / 2.0;
    const double x0 = min_x * 1000.0 - pad, y0 = min_y * 1000.0 - pad;
    const double w = (max_x - min_x) * 1000.0 + stroke_mm;
    const double h = (max_y - min_y) * 1000.0 + stroke_mm;

    std::string d = "M " + format_double(pts[0].x * 1000.0) + " " + format_double(pts[0].y * 1000.0);
    for (std::size_t i = 1; i < pts.size(); ++i)
        d += " L " + format_double(pts[i].x * 1000.0) + " " + format_double(pts[i].y * 1000.0);

    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_double(w) +
           "mm\" height=\"" + format_double(h) + "mm\" viewBox=\"" + format_double(x0) + " " +
           format_double(y0) + " " + format_double(w) + " " + format_double(h) + "\">\n";
    svg += "<path d=\"" + d + "\" fill=\"none\" stroke=\"black\" stroke-width=\"" +
           format_double(stroke_mm) + "\"/>\n";
    svg += "</svg>\n";
    return svg;
}

/// Point list CSV: header "x_m,y_m".
inline std::string encode_points_csv(const std::vector<Point2>& pts) {
    std::string out = "x_m,y_m\n";
    for (const auto& p : pts)
        out += format_double(p.x) + "," + format_double(p.y) + "\n";
    return out;
}

} // namespace spinquant

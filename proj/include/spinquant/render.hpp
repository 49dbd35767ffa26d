#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "spinquant/errors.hpp"
#include "spinquant/rng.hpp"
#include "spinquant/types.hpp"

namespace spinquant {

/// Geometry of the rendered scene: a rectangular bar centered in a square
/// field of view that it rotates within.
struct BarGeometry {
    double length = 0.11;       // m
    double width = 0.02;        // m
    double image_extent = 0.20; // m, square field of view
    int resolution = 128;       // pixels per side
    double foreground = 1.0;
    double background = 0.0;

    void validate() const {
        if (!(length > 0.0) || !(width > 0.0) || !(image_extent > 0.0))
            throw value_error("BarGeometry: dimensions must be positive");
        if (!(length < image_extent))
            throw value_error("BarGeometry: bar length must fit inside the field of view");
        if (resolution < 16)
            throw value_error("BarGeometry: resolution must be >= 16");
        if (foreground == background)
            throw value_error("BarGeometry: foreground must differ from background");
    }
};

enum class NoiseKind { none, mri, us };

/// Modality-flavoured corruption applied after rasterization.
///  mri: Gaussian blur, then Rician magnitude noise.
///  us:  multiplicative low-passed Rayleigh speckle, then additive Gaussian,
///       clamped at zero.
/// noise_level is the Gaussian sigma relative to the foreground intensity.
struct NoisePreset {
    NoiseKind kind = NoiseKind::none;
    double blur_sigma = 0.0;    // pixels (mri only)
    double noise_level = 0.0;   // sigma / |foreground|
    double speckle_grain = 1.5; // pixels (us only)

    void validate() const {
        if (noise_level < 0.0 || blur_sigma < 0.0 || speckle_grain < 0.0)
            throw value_error("NoisePreset: negative parameter");
    }

    static NoisePreset none() { return {NoiseKind::none, 0.0, 0.0, 0.0}; }
    static NoisePreset mri(double level = 0.05, double blur = 1.0) {
        return {NoiseKind::mri, blur, level, 0.0};
    }
    static NoisePreset us(double level = 0.1, double grain = 1.5) {
        return {NoiseKind::us, 0.0, level, grain};
    }
};

inline NoiseKind noise_kind_from_string(const std::string& s) {
    if (s == "none") return NoiseKind::none;
    if (s == "mri") return NoiseKind::mri;
    if (s == "us") return NoiseKind::us;
    throw value_error("unknown noise kind '" + s + "' (valid: none, mri, us)");
}

inline std::string to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::none: return "none";
        case NoiseKind::mri: return "mri";
        default: return "us";
    }
}

// ---------------------------------------------------------------------------
// Rasterization
// ---------------------------------------------------------------------------

/// Rasterize the bar rotated by `angle` about the image center, with 4x4
/// supersampled coverage anti-aliasing:
///   pixel = background + coverage * (foreground - background).
/// The 4x4 subgrid is sheared so the 16 samples occupy 16 distinct positions
/// per axis (keeps quantization low when an edge runs along the grid); the
/// pattern is symmetric under point reflection about the pixel center.
/// The angle is reduced mod pi before rasterizing, so frames half a turn
/// apart are bit-identical (the centered rectangle has 180-degree symmetry).
inline Frame render_frame(const BarGeometry& geom, double angle) {
    geom.validate();
    double a = std::fmod(angle, std::numbers::pi);
    if (a < 0.0) a += std::numbers::pi;
    const double c = std::cos(a), s = std::sin(a);
    const double half_l = 0.5 * geom.length, half_w = 0.5 * geom.width;
    const int res = geom.resolution;
    const double px = geom.image_extent / res;

    double off_x[16], off_y[16];
    for (int sy = 0; sy < 4; ++sy)
        for (int sx = 0; sx < 4; ++sx) {
            off_x[4 * sy + sx] = (4 * sx + sy + 0.5) / 16.0;
            off_y[4 * sy + sx] = (4 * sy + sx + 0.5) / 16.0;
        }

    std::vector<float> values(static_cast<std::size_t>(res) * res);
    for (int row = 0; row < res; ++row) {
        for (int col = 0; col < res; ++col) {
            int hits = 0;
            for (int m = 0; m < 16; ++m) {
                // y axis points up; row 0 is the top of the image
                const double x = (col + off_x[m]) * px - geom.image_extent * 0.5;
                const double y = geom.image_extent * 0.5 - (row + off_y[m]) * px;
                const double xr = c * x + s * y; // rotate by -angle
                const double yr = -s * x + c * y;
                if (std::abs(xr) <= half_l && std::abs(yr) <= half_w) ++hits;
            }
            const double coverage = hits / 16.0;
            values[static_cast<std::size_t>(row) * res + col] = static_cast<float>(
                geom.background + coverage * (geom.foreground - geom.background));
        }
    }
    return Frame(res, res, std::move(values));
}

// ---------------------------------------------------------------------------
// Noise stages
// ---------------------------------------------------------------------------

namespace detail {

/// Separable Gaussian blur with mirrored boundaries. sigma in pixels;
/// sigma <= 0 is a no-op.
inline void gaussian_blur_inplace(std::vector<double>& img, int w, int h, double sigma) {
    if (sigma <= 0.0) return;
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& k : kernel) k /= sum;

    const auto mirror = [](int i, int n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - i - 1;
        return i;
    };

    std::vector<double> tmp(img.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * img[static_cast<std::size_t>(y) * w + mirror(x + i, w)];
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    for (int x = 0; x < w; ++x)
        for (int y = 0; y < h; ++y) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i)
                acc += kernel[i + radius] * tmp[static_cast<std::size_t>(mirror(y + i, h)) * w + x];
            img[static_cast<std::size_t>(y) * w + x] = acc;
        }
}

inline Frame apply_noise(const Frame& clean, const NoisePreset& noise, double sigma_abs, Rng& rng) {
    const int w = clean.width, h = clean.height;
    std::vector<double> img(clean.values.begin(), clean.values.end());

    if (noise.kind == NoiseKind::mri) {
        gaussian_blur_inplace(img, w, h, noise.blur_sigma);
        // Rician: magnitude of (v + n1, n2)
        for (double& v : img) {
            const double re = v + sigma_abs * rng.gaussian();
            const double im = sigma_abs * rng.gaussian();
            v = std::hypot(re, im);
        }
    } else if (noise.kind == NoiseKind::us) {
        // Unit-mean Rayleigh speckle field, low-passed to the grain size.
        std::vector<double> speckle(img.size());
        const double rayleigh_scale = std::sqrt(2.0 / std::numbers::pi); // mean 1
        for (double& sp : speckle) sp = rng.rayleigh(rayleigh_scale);
        gaussian_blur_inplace(speckle, w, h, noise.speckle_grain);
        for (std::size_t i = 0; i < img.size(); ++i) {
            const double v = img[i] * speckle[i] + sigma_abs * rng.gaussian();
            img[i] = std::max(v, 0.0);
        }
    }

    std::vector<float> out(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) out[i] = static_cast<float>(img[i]);
    return Frame(w, h, std::move(out));
}

inline double interp_angle(const AngleTrace& trace, double t) {
    const auto& ts = trace.times;
    if (t <= ts.front()) return trace.angles.front();
    if (t >= ts.back()) return trace.angles.back();
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
    const std::size_t lo = hi - 1;
    const double u = (t - ts[lo]) / (ts[hi] - ts[lo]);
    return trace.angles[lo] + u * (trace.angles[hi] - trace.angles[lo]);
}

} // namespace detail

// ---------------------------------------------------------------------------
// Sequence rendering
// ---------------------------------------------------------------------------

/// Sample the angle trace at `fps` (linear interpolation of the unwrapped
/// angle), rasterize each frame and apply the noise preset. Frame k draws
/// from the substream Rng(seed, k), so output is independent of evaluation
/// order and reproducible for a fixed seed.
///
/// If consecutive sampled angles ever differ by more than pi/2, an aliasing
/// warning is attached to the returned sequence.
inline ImageSequence render_sequence(const AngleTrace& trace, const BarGeometry& geom,
                                     const NoisePreset& noise, double fps,
                                     std::uint64_t seed) {
    geom.validate();
    noise.validate();
    if (!(fps > 0.0))
        throw value_error("render_sequence: fps must be positive");

    const double t_begin = trace.times.front();
    const double span = trace.times.back() - t_begin;
    const auto nframes = static_cast<std::size_t>(std::floor(span * fps + 1e-9)) + 1;
    if (nframes < 2)
        throw value_error("render_sequence: trace too short for the frame rate");

    const double sigma_abs = noise.noise_level * std::abs(geom.foreground);

    std::vector<Frame> frames;
    frames.reserve(nframes);
    double max_step = 0.0, prev_angle = 0.0;
    for (std::size_t k = 0; k < nframes; ++k) {
        const double t = t_begin + static_cast<double>(k) / fps;
        const double angle = detail::interp_angle(trace, t);
        if (k > 0) max_step = std::max(max_step, std::abs(angle - prev_angle));
        prev_angle = angle;

        Frame frame = render_frame(geom, angle);
        if (noise.kind != NoiseKind::none) {
            Rng rng(seed, k);
            frame = detail::apply_noise(frame, noise, sigma_abs, rng);
        }
        frames.push_back(std::move(frame));
    }

    ImageSequence seq(std::move(frames), fps, t_begin);
    if (max_step > std::numbers::pi / 2.0)
        seq.warnings.push_back(
            "aliasing: consecutive frames are " + std::to_string(max_step) +
            " rad apart (> pi/2); increase fps");
    return seq;
}

} // namespace spinquant

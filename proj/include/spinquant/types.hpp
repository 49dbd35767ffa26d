#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "spinquant/errors.hpp"

namespace spinquant {

/// One 2D scalar image. Values are stored as 32-bit floats (the on-disk
/// precision); all math on them is done in double.
struct Frame {
    int width = 0;
    int height = 0;
    std::vector<float> values; // row-major, width*height entries

    Frame() = default;

    Frame(int w, int h, std::vector<float> v)
        : width(w), height(h), values(std::move(v)) {
        if (width <= 0 || height <= 0)
            throw value_error("Frame: width and height must be positive");
        if (values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw value_error("Frame: values.size() != width*height");
        for (float x : values)
            if (!std::isfinite(x))
                throw value_error("Frame: non-finite intensity");
    }

    float at(int row, int col) const {
        return values[static_cast<std::size_t>(row) * width + col];
    }

    bool operator==(const Frame&) const = default;
};

/// Ordered stack of frames sampled at a uniform rate.
struct ImageSequence {
    std::vector<Frame> frames;
    double fps = 0.0; // frames per second
    double t0 = 0.0;  // time of the first frame, seconds

    // Transient annotations (e.g. aliasing warnings); not serialized and
    // ignored by comparison.
    std::vector<std::string> warnings;

    ImageSequence() = default;

    ImageSequence(std::vector<Frame> f, double fps_, double t0_)
        : frames(std::move(f)), fps(fps_), t0(t0_) {
        if (!(fps > 0.0) || !std::isfinite(fps))
            throw value_error("ImageSequence: fps must be positive and finite");
        if (!std::isfinite(t0))
            throw value_error("ImageSequence: t0 must be finite");
        if (frames.size() < 2)
            throw value_error("ImageSequence: need at least 2 frames");
        for (const Frame& fr : frames)
            if (fr.width != frames.front().width || fr.height != frames.front().height)
                throw value_error("ImageSequence: frames differ in size");
    }

    int width() const { return frames.front().width; }
    int height() const { return frames.front().height; }
    std::size_t size() const { return frames.size(); }

    /// Acquisition time of frame i.
    double time_of(std::size_t i) const { return t0 + static_cast<double>(i) / fps; }

    bool operator==(const ImageSequence& o) const {
        return frames == o.frames && fps == o.fps && t0 == o.t0;
    }
};

/// Unwrapped rotation angle over time (radians). Not reduced mod 2*pi so
/// that differentiation is a plain difference.
struct AngleTrace {
    std::vector<double> times;  // seconds, strictly increasing
    std::vector<double> angles; // radians, unwrapped

    AngleTrace() = default;

    AngleTrace(std::vector<double> t, std::vector<double> a)
        : times(std::move(t)), angles(std::move(a)) {
        if (times.size() != angles.size())
            throw value_error("AngleTrace: times/angles length mismatch");
        if (times.size() < 2)
            throw value_error("AngleTrace: need at least 2 samples");
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (!std::isfinite(times[i]) || !std::isfinite(angles[i]))
                throw value_error("AngleTrace: non-finite sample");
            if (i > 0 && !(times[i] > times[i - 1]))
                throw value_error("AngleTrace: times must be strictly increasing");
        }
    }

    std::size_t size() const { return times.size(); }
};

/// Angular velocity over time, in rotations per second (Hz).
struct VelocityTrace {
    std::vector<double> times;      // seconds, strictly increasing
    std::vector<double> velocities; // Hz, nonnegative

    VelocityTrace() = default;

    VelocityTrace(std::vector<double> t, std::vector<double> v)
        : times(std::move(t)), velocities(std::move(v)) {
        if (times.size() != velocities.size())
            throw value_error("VelocityTrace: times/velocities length mismatch");
        for (std::size_t i = 0; i < times.size(); ++i) {
            if (!std::isfinite(times[i]) || !std::isfinite(velocities[i]))
                throw value_error("VelocityTrace: non-finite sample");
            if (velocities[i] < 0.0)
                throw value_error("VelocityTrace: negative velocity");
            if (i > 0 && !(times[i] > times[i - 1]))
                throw value_error("VelocityTrace: times must be strictly increasing");
        }
    }

    std::size_t size() const { return times.size(); }
    bool empty() const { return times.empty(); }

    double max_velocity() const {
        double m = 0.0;
        for (double v : velocities) m = std::max(m, v);
        return m;
    }
};

} // namespace spinquant

#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "spinquant/errors.hpp"
#include "spinquant/types.hpp"

namespace spinquant {

// ---------------------------------------------------------------------------
// Number formatting
// ---------------------------------------------------------------------------

/// Shortest decimal form that parses back to the same double, always
/// containing a decimal point or exponent ("0.0", not "0").
inline std::string format_double(double x) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eE") == std::string::npos &&
        s.find_first_of("0123456789") != std::string::npos)
        s += ".0";
    return s;
}

// ---------------------------------------------------------------------------
// Little-endian primitives
// ---------------------------------------------------------------------------

namespace detail {

inline void put_bytes_le(std::string& out, std::uint64_t v, int nbytes) {
    for (int i = 0; i < nbytes; ++i)
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint64_t get_bytes_le(const unsigned char* p, int nbytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < nbytes; ++i)
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

inline void put_u32(std::string& out, std::uint32_t v) { put_bytes_le(out, v, 4); }
inline void put_f32(std::string& out, float v) { put_bytes_le(out, std::bit_cast<std::uint32_t>(v), 4); }
inline void put_f64(std::string& out, double v) { put_bytes_le(out, std::bit_cast<std::uint64_t>(v), 8); }

} // namespace detail

// ---------------------------------------------------------------------------
// MPSQ container
//
// Layout: magic "MPSQ", then little-endian u32 version(=1), u32 width,
// u32 height, u32 nframes, f64 fps, f64 t0, followed by
// nframes*height*width little-endian f32 intensities, frame-major,
// row-major within each frame.
// ---------------------------------------------------------------------------

inline constexpr char kMpsqMagic[4] = {'M', 'P', 'S', 'Q'};
inline constexpr std::uint32_t kMpsqVersion = 1;

inline std::string encode_sequence(const ImageSequence& seq) {
    std::string out;
    out.reserve(36 + seq.size() * seq.frames.front().values.size() * 4);
    out.append(kMpsqMagic, 4);
    detail::put_u32(out, kMpsqVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(seq.width()));
    detail::put_u32(out, static_cast<std::uint32_t>(seq.height()));
    detail::put_u32(out, static_cast<std::uint32_t>(seq.size()));
    detail::put_f64(out, seq.fps);
    detail::put_f64(out, seq.t0);
    for (const Frame& fr : seq.frames)
        for (float v : fr.values)
            detail::put_f32(out, v);
    return out;
}

inline void write_sequence(const ImageSequence& seq, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw io_error("cannot open for writing: " + path);
    const std::string bytes = encode_sequence(seq);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f)
        throw io_error("write failed: " + path);
}

inline ImageSequence decode_sequence(const std::string& bytes, const std::string& origin) {
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMpsqMagic, 4) != 0)
        throw format_error("not an MPSQ file: " + origin);
    if (bytes.size() < 36)
        throw truncated_error("MPSQ header truncated: " + origin);
    const auto version = static_cast<std::uint32_t>(detail::get_bytes_le(p + 4, 4));
    if (version != kMpsqVersion)
        throw format_error("unsupported MPSQ version " + std::to_string(version) + ": " + origin);
    const auto width = static_cast<std::uint32_t>(detail::get_bytes_le(p + 8, 4));
    const auto height = static_cast<std::uint32_t>(detail::get_bytes_le(p + 12, 4));
    const auto nframes = static_cast<std::uint32_t>(detail::get_bytes_le(p + 16, 4));
    const double fps = std::bit_cast<double>(detail::get_bytes_le(p + 20, 8));
    const double t0 = std::bit_cast<double>(detail::get_bytes_le(p + 28, 8));

    const std::size_t per_frame = static_cast<std::size_t>(width) * height;
    const std::size_t expected = 36 + static_cast<std::size_t>(nframes) * per_frame * 4;
    if (bytes.size() < expected)
        throw truncated_error("MPSQ payload truncated: " + origin);

    std::vector<Frame> frames;
    frames.reserve(nframes);
    std::size_t off = 36;
    for (std::uint32_t k = 0; k < nframes; ++k) {
        std::vector<float> vals(per_frame);
        for (std::size_t i = 0; i < per_frame; ++i, off += 4) {
            const float v = std::bit_cast<float>(
                static_cast<std::uint32_t>(detail::get_bytes_le(p + off, 4)));
            if (!std::isfinite(v))
                throw value_error("non-finite intensity in MPSQ payload: " + origin);
            vals[i] = v;
        }
        frames.emplace_back(static_cast<int>(width), static_cast<int>(height), std::move(vals));
    }
    return ImageSequence(std::move(frames), fps, t0);
}

inline ImageSequence read_sequence(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw io_error("cannot open: " + path);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_sequence(bytes, path);
}

// ---------------------------------------------------------------------------
// Velocity trace CSV: header "time_s,velocity_hz", one sample per line, LF.
// ---------------------------------------------------------------------------

inline std::string encode_trace(const VelocityTrace& trace) {
    std::string out = "time_s,velocity_hz\n";
    for (std::size_t i = 0; i < trace.size(); ++i)
        out += format_double(trace.times[i]) + "," + format_double(trace.velocities[i]) + "\n";
    return out;
}

inline void write_trace(const VelocityTrace& trace, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw io_error("cannot open for writing: " + path);
    const std::string text = encode_trace(trace);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f)
        throw io_error("write failed: " + path);
}

namespace detail {

inline bool parse_strict_double(const std::string& field, double& out) {
    if (field.empty()) return false;
    char* end = nullptr;
    out = std::strtod(field.c_str(), &end);
    return end == field.c_str() + field.size();
}

} // namespace detail

inline VelocityTrace decode_trace(const std::string& text, const std::string& origin) {
    std::vector<double> times, vels;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pos = eol + 1;
        ++line_no;
        if (line_no == 1) {
            if (line != "time_s,velocity_hz")
                throw parse_error("bad trace header in " + origin, line_no);
            continue;
        }
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        double t = 0.0, v = 0.0;
        if (comma == std::string::npos ||
            !detail::parse_strict_double(line.substr(0, comma), t) ||
            !detail::parse_strict_double(line.substr(comma + 1), v))
            throw parse_error("malformed trace row in " + origin, line_no);
        times.push_back(t);
        vels.push_back(v);
    }
    if (line_no == 0)
        throw parse_error("empty trace file " + origin, 1);
    return VelocityTrace(std::move(times), std::move(vels));
}

inline VelocityTrace read_trace(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw io_error("cannot open: " + path);
    std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_trace(text, path);
}

// ---------------------------------------------------------------------------
// PGM frame export (P5, 16-bit, scaled so the frame maximum maps to 65535).
// ---------------------------------------------------------------------------

inline void write_pgm(const Frame& frame, const std::string& path) {
    float lo = frame.values.empty() ? 0.0f : frame.values.front();
    float hi = lo;
    for (float v : frame.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = (hi > lo) ? static_cast<double>(hi) - lo : 1.0;

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw io_error("cannot open for writing: " + path);
    f << "P5\n" << frame.width << " " << frame.height << "\n65535\n";
    std::string body;
    body.reserve(frame.values.size() * 2);
    for (float v : frame.values) {
        const auto q = static_cast<std::uint16_t>(
            std::lround((static_cast<double>(v) - lo) / span * 65535.0));
        body.push_back(static_cast<char>(q >> 8)); // PGM 16-bit is big-endian
        body.push_back(static_cast<char>(q & 0xFF));
    }
    f.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!f)
        throw io_error("write failed: " + path);
}

/// Write a whole string to a file (helper for CSV/SVG/JSON emitters).
inline void write_text_file(const std::string& text, const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw io_error("cannot open for writing: " + path);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!f)
        throw io_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw io_error("cannot open: " + path);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
}

} // namespace spinquant

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spinquant/embedding.hpp"
#include "spinquant/errors.hpp"
#include "spinquant/io.hpp"
#include "spinquant/types.hpp"

namespace spinquant {

// ---------------------------------------------------------------------------
// Spectrogram
// ---------------------------------------------------------------------------

/// Time-frequency power map of a uniformly sampled signal: squared magnitude
/// of the short-time Fourier transform, one row per window.
struct Spectrogram {
    std::vector<double> times;              // window centers, seconds
    std::vector<double> freqs;              // 0 .. fs/2, spacing fs/fft_size
    std::vector<std::vector<double>> power; // power[time][freq]
    double fs = 0.0;
    int window_len = 0; // samples per window
    int fft_size = 0;   // zero-padded transform length

    std::size_t n_windows() const { return times.size(); }
    std::size_t n_bins() const { return freqs.size(); }
    double bin_width() const { return fs / fft_size; }
};

/// Hann-windowed, mean-removed, zero-padded STFT power.
///
/// Window m covers samples [m*hop, m*hop + L) and is centered at
/// t0 + L/(2 fs) + m*hop/fs. The per-window mean is subtracted before
/// windowing so the DC bin cannot dominate the ridge.
inline Spectrogram stft_spectrogram(const Embedding1D& emb, double window_s, double hop_s,
                                    int pad_factor) {
    const std::size_t n = emb.size();
    if (n < 2)
        throw value_error("stft_spectrogram: signal too short");
    const double fs =
        static_cast<double>(n - 1) / (emb.times.back() - emb.times.front());
    if (!(window_s > 0.0) || !(hop_s > 0.0) || hop_s > window_s)
        throw value_error("stft_spectrogram: need 0 < hop_s <= window_s");
    if (pad_factor < 1)
        throw value_error("stft_spectrogram: pad_factor must be >= 1");

    const auto win_len = static_cast<std::size_t>(std::llround(window_s * fs));
    if (win_len < 4)
        throw value_error("stft_spectrogram: window shorter than 4 samples");
    if (win_len > n)
        throw value_error("stft_spectrogram: embedding shorter than one window (" +
                          std::to_string(n) + " samples, window needs " +
                          std::to_string(win_len) + ")");
    const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(hop_s * fs)));
    const std::size_t nfft = win_len * static_cast<std::size_t>(pad_factor);
    const std::size_t nbins = nfft / 2 + 1;

    std::vector<double> hann(win_len);
    for (std::size_t j = 0; j < win_len; ++j)
        hann[j] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) /
                                       static_cast<double>(win_len));

    // Twiddle table for the direct padded DFT; only the win_len input samples
    // are non-zero, so each bin costs O(win_len).
    std::vector<double> cos_tab(nfft), sin_tab(nfft);
    for (std::size_t m = 0; m < nfft; ++m) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(nfft);
        cos_tab[m] = std::cos(a);
        sin_tab[m] = std::sin(a);
    }

    Spectrogram spec;
    spec.fs = fs;
    spec.window_len = static_cast<int>(win_len);
    spec.fft_size = static_cast<int>(nfft);
    spec.freqs.resize(nbins);
    for (std::size_t k = 0; k < nbins; ++k)
        spec.freqs[k] = static_cast<double>(k) * fs / static_cast<double>(nfft);

    std::vector<double> y(win_len);
    for (std::size_t start = 0; start + win_len <= n; start += hop) {
        double mean = 0.0;
        for (std::size_t j = 0; j < win_len; ++j) mean += emb.coords[start + j];
        mean /= static_cast<double>(win_len);
        for (std::size_t j = 0; j < win_len; ++j)
            y[j] = (emb.coords[start + j] - mean) * hann[j];

        std::vector<double> row(nbins);
        for (std::size_t k = 0; k < nbins; ++k) {
            double re = 0.0, im = 0.0;
            std::size_t idx = 0; // (j*k) mod nfft, accumulated to avoid multiplies
            for (std::size_t j = 0; j < win_len; ++j) {
                re += y[j] * cos_tab[idx];
                im -= y[j] * sin_tab[idx];
                idx += k;
                if (idx >= nfft) idx -= nfft;
            }
            row[k] = re * re + im * im;
        }
        spec.power.push_back(std::move(row));
        spec.times.push_back(emb.times.front() +
                             0.5 * static_cast<double>(win_len) / fs +
                             static_cast<double>(start) / fs);
    }
    if (spec.power.empty())
        throw value_error("stft_spectrogram: no complete window fits the signal");
    return spec;
}

// ---------------------------------------------------------------------------
// Ridge extraction
// ---------------------------------------------------------------------------

/// Highest-power spectrogram samples: per window the ceil(5%) highest-power
/// frequency bins (ties resolved toward lower frequency). Zero-power bins
/// are never emitted.
struct RidgePoints {
    struct Point {
        double time;   // s
        double freq;   // Hz
        double weight; // spectrogram power
    };
    std::vector<Point> points;
    double freq_max = 0.0;  // top of the frequency axis (fs/2)
    double bin_width = 0.0; // frequency grid spacing
    int per_column = 0;     // selection count per window
};

inline RidgePoints extract_ridge(const Spectrogram& spec) {
    if (spec.power.empty() || spec.freqs.empty())
        throw value_error("extract_ridge: empty spectrogram");
    const std::size_t nbins = spec.n_bins();
    const auto m = static_cast<std::size_t>(
        std::ceil(0.05 * static_cast<double>(nbins)));

    RidgePoints ridge;
    ridge.freq_max = spec.freqs.back();
    ridge.bin_width = spec.bin_width();
    ridge.per_column = static_cast<int>(m);

    std::vector<std::size_t> idx(nbins);
    for (std::size_t t = 0; t < spec.n_windows(); ++t) {
        const auto& row = spec.power[t];
        std::iota(idx.begin(), idx.end(), 0);
        std::partial_sort(idx.begin(), idx.begin() + static_cast<long>(m), idx.end(),
                          [&](std::size_t a, std::size_t b) {
                              return row[a] != row[b] ? row[a] > row[b] : a < b;
                          });
        for (std::size_t r = 0; r < m; ++r) {
            const std::size_t k = idx[r];
            if (row[k] > 0.0)
                ridge.points.push_back({spec.times[t], spec.freqs[k], row[k]});
        }
    }
    return ridge;
}

// ---------------------------------------------------------------------------
// Weighted least-squares cubic B-spline
// ---------------------------------------------------------------------------

namespace detail {

/// Index of the knot span containing t (clamped cubic knot vector).
inline int bspline_find_span(const std::vector<double>& knots, int ncoef, double t) {
    if (t >= knots[static_cast<std::size_t>(ncoef)]) return ncoef - 1;
    int lo = 3, hi = ncoef;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (t < knots[static_cast<std::size_t>(mid)])
            hi = mid;
        else
            lo = mid;
    }
    return lo;
}

/// Cox-de Boor triangle: the four cubic basis functions non-zero on `span`.
inline void bspline_basis(const std::vector<double>& knots, int span, double t, double* out) {
    double left[4], right[4];
    out[0] = 1.0;
    for (int j = 1; j <= 3; ++j) {
        left[j] = t - knots[static_cast<std::size_t>(span + 1 - j)];
        right[j] = knots[static_cast<std::size_t>(span + j)] - t;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double tmp = out[r] / (right[r + 1] + left[j - r]);
            out[r] = saved + right[r + 1] * tmp;
            saved = left[j - r] * tmp;
        }
        out[j] = saved;
    }
}

} // namespace detail

/// Cubic spline on a clamped uniform knot vector, evaluable anywhere in its
/// support (arguments are clamped to it) with values clamped to [vmin, vmax].
class BSplineCurve {
public:
    BSplineCurve() = default;
    BSplineCurve(std::vector<double> knots, std::vector<double> coefs, double vmin, double vmax)
        : knots_(std::move(knots)), coefs_(std::move(coefs)), vmin_(vmin), vmax_(vmax) {}

    std::pair<double, double> support() const {
        return {knots_.front(), knots_.back()};
    }

    double operator()(double t) const {
        t = std::clamp(t, knots_.front(), knots_.back());
        const int ncoef = static_cast<int>(coefs_.size());
        const int span = detail::bspline_find_span(knots_, ncoef, t);
        double basis[4];
        detail::bspline_basis(knots_, span, t, basis);
        double v = 0.0;
        for (int r = 0; r < 4; ++r) v += basis[r] * coefs_[static_cast<std::size_t>(span - 3 + r)];
        return std::clamp(v, vmin_, vmax_);
    }

    const std::vector<double>& coefficients() const { return coefs_; }
    const std::vector<double>& knots() const { return knots_; }

private:
    std::vector<double> knots_;
    std::vector<double> coefs_;
    double vmin_ = 0.0;
    double vmax_ = 0.0;
};

/// Power-weighted least-squares cubic B-spline through the ridge, uniform
/// knots every knot_spacing_s. The fitted curve is clamped to [0, freq_max].
inline BSplineCurve fit_ridge_spline(const RidgePoints& ridge, double knot_spacing_s) {
    if (!(knot_spacing_s > 0.0))
        throw value_error("fit_ridge_spline: knot spacing must be positive");

    std::vector<double> distinct;
    for (const auto& p : ridge.points) distinct.push_back(p.time);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 4)
        throw fit_error("fit_ridge_spline: need ridge points in at least 4 distinct windows");

    const double t_lo = distinct.front(), t_hi = distinct.back();
    const int intervals =
        std::max(1, static_cast<int>(std::lround((t_hi - t_lo) / knot_spacing_s)));
    const int ncoef = intervals + 3;

    std::vector<double> knots(static_cast<std::size_t>(intervals) + 7);
    for (int i = 0; i < 4; ++i) {
        knots[static_cast<std::size_t>(i)] = t_lo;
        knots[knots.size() - 1 - static_cast<std::size_t>(i)] = t_hi;
    }
    for (int i = 1; i < intervals; ++i)
        knots[static_cast<std::size_t>(3 + i)] =
            t_lo + (t_hi - t_lo) * static_cast<double>(i) / intervals;

    double w_max = 0.0;
    for (const auto& p : ridge.points) w_max = std::max(w_max, p.weight);
    if (!(w_max > 0.0))
        throw fit_error("fit_ridge_spline: all ridge weights are zero");

    const auto n_pts = static_cast<Eigen::Index>(ridge.points.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_pts, ncoef);
    Eigen::VectorXd b(n_pts);
    for (Eigen::Index r = 0; r < n_pts; ++r) {
        const auto& p = ridge.points[static_cast<std::size_t>(r)];
        const double sw = std::sqrt(p.weight / w_max);
        const double t = std::clamp(p.time, t_lo, t_hi);
        const int span = detail::bspline_find_span(knots, ncoef, t);
        double basis[4];
        detail::bspline_basis(knots, span, t, basis);
        for (int q = 0; q < 4; ++q) a(r, span - 3 + q) = sw * basis[q];
        b(r) = sw * p.freq;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < ncoef)
        throw fit_error("fit_ridge_spline: underdetermined fit (" + std::to_string(a.rows()) +
                        " points for " + std::to_string(ncoef) +
                        " coefficients); try a larger knot spacing");
    const Eigen::VectorXd c = qr.solve(b);

    return BSplineCurve(std::move(knots),
                        std::vector<double>(c.data(), c.data() + ncoef), 0.0,
                        ridge.freq_max);
}

// ---------------------------------------------------------------------------
// Velocity conversion
// ---------------------------------------------------------------------------

/// Convert a fitted embedded-oscillation frequency curve into a rotation
/// rate. The bar looks the same every half turn, so the embedding completes
/// one cycle per half rotation and the rotation rate is half the fitted
/// frequency.
inline VelocityTrace to_velocity(const BSplineCurve& curve, double t_begin, double t_end,
                                 double sample_hz) {
    const auto [lo, hi] = curve.support();
    if (t_begin < lo - 1e-9 || t_end > hi + 1e-9 || !(t_end >= t_begin))
        throw value_error("to_velocity: requested span outside the fitted support");
    if (!(sample_hz > 0.0))
        throw value_error("to_velocity: sample_hz must be positive");

    const auto count =
        static_cast<std::size_t>(std::floor((t_end - t_begin) * sample_hz + 1e-9)) + 1;
    std::vector<double> times(count), vel(count);
    for (std::size_t i = 0; i < count; ++i) {
        times[i] = t_begin + static_cast<double>(i) / sample_hz;
        vel[i] = 0.5 * curve(times[i]);
    }
    return VelocityTrace(std::move(times), std::move(vel));
}

// ---------------------------------------------------------------------------
// End-to-end analysis
// ---------------------------------------------------------------------------

struct AnalysisConfig {
    int target_side = 64;         // preprocessing downsample size
    int knn = 0;                  // affinity neighbours; 0 = max(10, 2% of n)
    double f_min_hz = 0.25;       // lowest embedded frequency to resolve
    double window_s = 8.0;        // STFT window; must be >= 2 / f_min_hz
    double hop_s = 1.0;
    int pad_factor = 4;
    double knot_spacing_s = 2.0;
    double sample_hz = 10.0;      // output velocity sampling
};

struct AnalyzeResult {
    VelocityTrace velocity;
    Embedding1D embedding;
    Spectrogram spectrogram;
    RidgePoints ridge;
    bool aliasing_risk = false;          // ridge crowding the top of the band
    std::vector<std::string> warnings;   // carried over from the input sequence
};

/// Full pipeline: preprocess -> 1D eigenmap -> spectrogram -> top-5% ridge ->
/// power-weighted spline -> half-rate velocity. Errors from each stage are
/// rethrown tagged with the stage name.
inline AnalyzeResult analyze(const ImageSequence& seq, const AnalysisConfig& cfg = {}) {
    if (cfg.window_s < 2.0 / cfg.f_min_hz - 1e-12)
        throw value_error("analyze: window_s must be at least 2/f_min (= " +
                          format_double(2.0 / cfg.f_min_hz) + " s) to resolve f_min");

    const auto run = [](const char* stage, auto&& fn) {
        try {
            return fn();
        } catch (const error& e) {
            throw stage_error(stage, e.what());
        }
    };

    AnalyzeResult res;
    res.warnings = seq.warnings;
    const RowMatrixXd vectors =
        run("preprocess", [&] { return preprocess_frames(seq, cfg.target_side); });
    res.embedding = run("embedding", [&] {
        const int n = static_cast<int>(seq.size());
        const int k = cfg.knn > 0 ? std::min(cfg.knn, n - 1) : default_knn(n);
        const AffinityGraph graph = build_affinity(pairwise_sqdist(vectors), k);
        std::vector<double> times(seq.size());
        for (std::size_t i = 0; i < seq.size(); ++i) times[i] = seq.time_of(i);
        return laplacian_embed_1d(graph, times);
    });
    res.spectrogram = run("spectrogram", [&] {
        return stft_spectrogram(res.embedding, cfg.window_s, cfg.hop_s, cfg.pad_factor);
    });
    res.ridge = run("ridge", [&] { return extract_ridge(res.spectrogram); });

    // Aliasing risk: ridge touching the top 10% of the frequency axis in at
    // least 5% of windows.
    {
        const double top = 0.9 * res.ridge.freq_max;
        std::size_t crowded = 0, col_count = 0;
        double current_time = std::nan("");
        bool current_hit = false;
        for (const auto& p : res.ridge.points) {
            if (p.time != current_time) {
                if (col_count > 0 && current_hit) ++crowded;
                current_time = p.time;
                current_hit = false;
                ++col_count;
            }
            current_hit = current_hit || (p.freq >= top);
        }
        if (col_count > 0 && current_hit) ++crowded;
        res.aliasing_risk =
            col_count > 0 && static_cast<double>(crowded) >= 0.05 * static_cast<double>(col_count);
    }

    const BSplineCurve curve =
        run("spline", [&] { return fit_ridge_spline(res.ridge, cfg.knot_spacing_s); });
    res.velocity = run("velocity", [&] {
        const auto [lo, hi] = curve.support();
        return to_velocity(curve, lo, hi, cfg.sample_hz);
    });
    return res;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

/// Spectrogram CSV: first row the frequency axis, first column the window
/// centers.
inline std::string encode_spectrogram_csv(const Spectrogram& spec) {
    std::string out;
    for (double f : spec.freqs) out += "," + format_double(f);
    out += "\n";
    for (std::size_t t = 0; t < spec.n_windows(); ++t) {
        out += format_double(spec.times[t]);
        for (double p : spec.power[t]) out += "," + format_double(p);
        out += "\n";
    }
    return out;
}

} // namespace spinquant

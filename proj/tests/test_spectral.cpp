#include <catch2/catch.hpp>

#include <cmath>
#include <numbers>
#include <set>

#include "oracles.hpp"
#include "spinquant/render.hpp"
#include "spinquant/rng.hpp"
#include "spinquant/spectral.hpp"

using namespace spinquant;

namespace {

Embedding1D make_signal(double fs, double duration, auto&& fn) {
    Embedding1D emb;
    const auto n = static_cast<std::size_t>(std::llround(duration * fs)) + 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        emb.times.push_back(t);
        emb.coords.push_back(fn(t));
    }
    return emb;
}

Spectrogram manual_spec(std::size_t nbins, const std::vector<std::vector<double>>& power) {
    Spectrogram s;
    s.fs = 2.0 * static_cast<double>(nbins - 1); // freqs 0..nbins-1 Hz
    s.fft_size = static_cast<int>(2 * (nbins - 1));
    s.window_len = s.fft_size;
    for (std::size_t k = 0; k < nbins; ++k) s.freqs.push_back(static_cast<double>(k));
    for (std::size_t t = 0; t < power.size(); ++t) {
        s.times.push_back(static_cast<double>(t));
        s.power.push_back(power[t]);
    }
    return s;
}

} // namespace

TEST_CASE("zero signal yields an all-zero spectrogram") {
    const Embedding1D emb = make_signal(20.0, 30.0, [](double) { return 0.0; });
    const Spectrogram spec = stft_spectrogram(emb, 8.0, 1.0, 4);
    for (const auto& row : spec.power)
        for (double p : row) CHECK(p == 0.0);
    CHECK(spec.freqs[1] - spec.freqs[0] == Approx(spec.fs / spec.fft_size).margin(0.0));
    CHECK(spec.freqs.back() == Approx(spec.fs / 2.0));
}

TEST_CASE("pure 2 Hz cosine peaks in the right bin of every window") {
    const Embedding1D emb = make_signal(20.0, 60.0, [](double t) {
        return std::cos(2.0 * std::numbers::pi * 2.0 * t + 0.3);
    });
    const Spectrogram spec = stft_spectrogram(emb, 8.0, 1.0, 4);
    REQUIRE(spec.n_bins() == 321); // 640-point transform, one-sided
    const double bin = spec.bin_width();
    for (const auto& row : spec.power) {
        std::size_t best = 0;
        for (std::size_t k = 0; k < row.size(); ++k)
            if (row[k] > row[best]) best = k;
        CHECK(std::abs(spec.freqs[best] - 2.0) <= bin + 1e-12);
    }
}

TEST_CASE("per-window Parseval identity holds to 1e-9") {
    Rng rng(17);
    const Embedding1D emb = make_signal(20.0, 30.0, [&](double) { return rng.uniform01() - 0.5; });
    const Spectrogram spec = stft_spectrogram(emb, 8.0, 1.0, 4);
    const double fs = 20.0;
    const std::size_t win = 160, hop = 20, nfft = 640;

    for (std::size_t m = 0; m < spec.n_windows(); ++m) {
        // reconstruct the windowed samples exactly as specified
        const std::size_t start = m * hop;
        double mean = 0.0;
        for (std::size_t j = 0; j < win; ++j) mean += emb.coords[start + j];
        mean /= static_cast<double>(win);
        double time_energy = 0.0;
        for (std::size_t j = 0; j < win; ++j) {
            const double hann =
                0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / win);
            const double y = (emb.coords[start + j] - mean) * hann;
            time_energy += y * y;
        }
        // two-sided spectral sum from the one-sided power row
        const auto& row = spec.power[m];
        double spec_energy = row[0] + row[row.size() - 1];
        for (std::size_t k = 1; k + 1 < row.size(); ++k) spec_energy += 2.0 * row[k];
        spec_energy /= static_cast<double>(nfft);

        CHECK(spec_energy == Approx(time_energy).epsilon(1e-9));
        CHECK(spec.times[m] == Approx(4.0 + static_cast<double>(m) * 1.0).margin(1e-12));
        (void)fs;
    }
}

TEST_CASE("stft input validation") {
    const Embedding1D tiny = make_signal(20.0, 2.0, [](double) { return 1.0; });
    CHECK_THROWS_AS(stft_spectrogram(tiny, 8.0, 1.0, 4), value_error);
    const Embedding1D ok = make_signal(20.0, 30.0, [](double) { return 1.0; });
    CHECK_THROWS_AS(stft_spectrogram(ok, 8.0, 9.0, 4), value_error);
    CHECK_THROWS_AS(stft_spectrogram(ok, 8.0, 1.0, 0), value_error);
}

TEST_CASE("ridge picks the single lit bin when 5% rounds up to one") {
    std::vector<std::vector<double>> power(3, std::vector<double>(20, 0.0));
    power[0][7] = 4.0;
    power[1][9] = 2.0;
    power[2][3] = 1.0;
    const RidgePoints ridge = extract_ridge(manual_spec(20, power));
    REQUIRE(ridge.per_column == 1);
    REQUIRE(ridge.points.size() == 3);
    CHECK(ridge.points[0].freq == 7.0);
    CHECK(ridge.points[1].freq == 9.0);
    CHECK(ridge.points[2].freq == 3.0);
    CHECK(ridge.points[0].weight == 4.0);
}

TEST_CASE("ridge keeps ceil(5%) bins per column and breaks ties low") {
    std::vector<std::vector<double>> power(2, std::vector<double>(40, 0.0));
    power[0][5] = 1.0;
    power[0][11] = 1.0; // tie with bin 5; both selected (2 = ceil(0.05*40))
    power[0][20] = 0.5;
    power[1][30] = 1.0;
    power[1][31] = 1.0;
    power[1][8] = 1.0; // three-way tie: lower frequencies win
    const RidgePoints ridge = extract_ridge(manual_spec(40, power));
    REQUIRE(ridge.per_column == 2);
    REQUIRE(ridge.points.size() == 4);
    CHECK(ridge.points[0].freq == 5.0);
    CHECK(ridge.points[1].freq == 11.0);
    CHECK(ridge.points[2].freq == 8.0);
    CHECK(ridge.points[3].freq == 30.0);
}

TEST_CASE("ridge selection is invariant under positive rescaling") {
    Rng rng(4);
    std::vector<std::vector<double>> power(6, std::vector<double>(50));
    for (auto& row : power)
        for (double& p : row) p = rng.uniform01();
    auto scaled = power;
    for (auto& row : scaled)
        for (double& p : row) p *= 137.5;

    const RidgePoints r1 = extract_ridge(manual_spec(50, power));
    const RidgePoints r2 = extract_ridge(manual_spec(50, scaled));
    REQUIRE(r1.points.size() == r2.points.size());
    for (std::size_t i = 0; i < r1.points.size(); ++i) {
        CHECK(r1.points[i].time == r2.points[i].time);
        CHECK(r1.points[i].freq == r2.points[i].freq);
        CHECK(r2.points[i].weight == Approx(137.5 * r1.points[i].weight));
    }
}

TEST_CASE("chirp ridge tracks the instantaneous frequency within 2 bins") {
    // f(t) = 3 - 0.04 t; phase = 2*pi*(3t - 0.02 t^2)
    const Embedding1D emb = make_signal(20.0, 60.0, [](double t) {
        return std::cos(2.0 * std::numbers::pi * (3.0 * t - 0.02 * t * t));
    });
    const Spectrogram spec = stft_spectrogram(emb, 8.0, 1.0, 4);
    const RidgePoints ridge = extract_ridge(spec);
    const double bin = ridge.bin_width;

    // power-weighted mean selected frequency per column
    double t_cur = ridge.points.front().time, wsum = 0.0, fsum = 0.0;
    const auto flush = [&](double t) {
        const double f_est = fsum / wsum;
        const double f_true = 3.0 - 0.04 * t;
        CHECK(std::abs(f_est - f_true) <= 2.0 * bin);
    };
    for (const auto& p : ridge.points) {
        if (p.time != t_cur) {
            flush(t_cur);
            t_cur = p.time;
            wsum = fsum = 0.0;
        }
        wsum += p.weight;
        fsum += p.weight * p.freq;
    }
    flush(t_cur);
}

TEST_CASE("spline reproduces constants and straight lines") {
    RidgePoints pts;
    pts.freq_max = 10.0;
    pts.bin_width = 0.03125;
    for (int t = 0; t <= 12; ++t) pts.points.push_back({static_cast<double>(t), 1.7, 2.0});
    const BSplineCurve c1 = fit_ridge_spline(pts, 2.0);
    for (double t = 0.0; t <= 12.0; t += 0.37) CHECK(c1(t) == Approx(1.7).margin(1e-9));

    RidgePoints line;
    line.freq_max = 10.0;
    for (int t = 0; t <= 12; ++t)
        line.points.push_back({static_cast<double>(t), 5.0 - 0.2 * t, 1.0 + t});
    const BSplineCurve c2 = fit_ridge_spline(line, 2.0);
    for (double t = 0.0; t <= 12.0; t += 0.21)
        CHECK(c2(t) == Approx(5.0 - 0.2 * t).margin(1e-9));
}

TEST_CASE("spline fits a noisy chirp to within one bin") {
    RidgePoints pts;
    pts.freq_max = 10.0;
    pts.bin_width = 0.03125;
    Rng rng(9);
    for (int t = 0; t <= 50; ++t) {
        const double f_true = 3.0 - 0.04 * t;
        for (int r = 0; r < 5; ++r)
            pts.points.push_back(
                {static_cast<double>(t), f_true + 0.01 * (rng.uniform01() - 0.5), 1.0 + rng.uniform01()});
    }
    const BSplineCurve c = fit_ridge_spline(pts, 2.0);
    double ss = 0.0;
    int n = 0;
    for (double t = 0.0; t <= 50.0; t += 0.1, ++n) {
        const double err = c(t) - (3.0 - 0.04 * t);
        ss += err * err;
    }
    CHECK(std::sqrt(ss / n) < pts.bin_width);
}

TEST_CASE("spline error paths") {
    RidgePoints few;
    few.freq_max = 10.0;
    for (int t = 0; t < 3; ++t) few.points.push_back({static_cast<double>(t), 1.0, 1.0});
    CHECK_THROWS_AS(fit_ridge_spline(few, 2.0), fit_error);

    RidgePoints sparse;
    sparse.freq_max = 10.0;
    for (int t = 0; t < 5; ++t) sparse.points.push_back({static_cast<double>(t), 1.0, 1.0});
    CHECK_THROWS_AS(fit_ridge_spline(sparse, 0.01), fit_error); // way underdetermined

    RidgePoints zero_w;
    zero_w.freq_max = 10.0;
    for (int t = 0; t < 5; ++t) zero_w.points.push_back({static_cast<double>(t), 1.0, 0.0});
    CHECK_THROWS_AS(fit_ridge_spline(zero_w, 2.0), fit_error);
}

TEST_CASE("velocity is half the fitted embedded frequency") {
    // constant curves via equal control coefficients (partition of unity)
    const auto const_curve = [](double value) {
        std::vector<double> knots = {0, 0, 0, 0, 5, 10, 10, 10, 10};
        return BSplineCurve(std::move(knots), std::vector<double>(5, value), 0.0, 10.0);
    };
    const VelocityTrace v1 = to_velocity(const_curve(1.92), 0.0, 10.0, 10.0);
    for (double v : v1.velocities) CHECK(v == Approx(0.96).margin(1e-12));
    const VelocityTrace v2 = to_velocity(const_curve(1.1), 0.0, 10.0, 10.0);
    for (double v : v2.velocities) CHECK(v == Approx(0.55).margin(1e-12));
    const VelocityTrace v0 = to_velocity(const_curve(0.0), 0.0, 10.0, 10.0);
    for (double v : v0.velocities) CHECK(v == 0.0);

    CHECK(v1.size() == 101);
    CHECK_THROWS_AS(to_velocity(const_curve(1.0), -1.0, 10.0, 10.0), value_error);
}

TEST_CASE("to_velocity is pointwise linear in the curve") {
    std::vector<double> knots = {0, 0, 0, 0, 4, 8, 8, 8, 8};
    std::vector<double> coefs = {1.0, 2.0, 0.5, 1.5, 2.5};
    const BSplineCurve base(knots, coefs, 0.0, 100.0);
    for (double& c : coefs) c *= 3.0;
    const BSplineCurve scaled(knots, coefs, 0.0, 100.0);

    const VelocityTrace vb = to_velocity(base, 0.0, 8.0, 25.0);
    const VelocityTrace vs = to_velocity(scaled, 0.0, 8.0, 25.0);
    for (std::size_t i = 0; i < vb.size(); ++i)
        CHECK(vs.velocities[i] == Approx(3.0 * vb.velocities[i]).margin(1e-12));
}

TEST_CASE("analyze recovers a constant rotation rate end to end") {
    BarGeometry geom;
    geom.resolution = 64;
    std::vector<double> t, a;
    for (int i = 0; i <= 1600; ++i) {
        t.push_back(i / 100.0);
        a.push_back(2.0 * std::numbers::pi * 0.5 * t.back()); // 0.5 rot/s, 16 s
    }
    const ImageSequence seq =
        render_sequence(AngleTrace(t, a), geom, NoisePreset::none(), 20.0, 1);

    AnalysisConfig cfg;
    cfg.target_side = 32;
    const AnalyzeResult res = analyze(seq, cfg);

    const double bin = res.spectrogram.bin_width();
    for (std::size_t i = 0; i < res.velocity.size(); ++i)
        CHECK(res.velocity.velocities[i] == Approx(0.5).margin(bin));
    CHECK_FALSE(res.aliasing_risk);

    // determinism: the full pipeline is a pure function of the sequence
    const AnalyzeResult res2 = analyze(seq, cfg);
    CHECK(encode_trace(res.velocity) == encode_trace(res2.velocity));
    CHECK(encode_spectrogram_csv(res.spectrogram) == encode_spectrogram_csv(res2.spectrogram));
}

TEST_CASE("a ridge crowding the top of the band raises the aliasing-risk flag") {
    // 4.5 rot/s at 20 fps: the embedding oscillates at 9 Hz, inside the top
    // 10% of the 0..10 Hz axis.
    BarGeometry geom;
    geom.resolution = 48;
    std::vector<double> t, a;
    for (int i = 0; i <= 1200; ++i) {
        t.push_back(i / 100.0);
        a.push_back(2.0 * std::numbers::pi * 4.5 * t.back());
    }
    const ImageSequence seq =
        render_sequence(AngleTrace(t, a), geom, NoisePreset::none(), 20.0, 1);
    AnalysisConfig cfg;
    cfg.target_side = 24;
    const AnalyzeResult res = analyze(seq, cfg);
    CHECK(res.aliasing_risk);
    for (double v : res.velocity.velocities) CHECK(v <= 5.0); // clamped to fs/4
}

TEST_CASE("render warnings ride along with the analysis result") {
    BarGeometry geom;
    geom.resolution = 32;
    std::vector<double> t, a;
    for (int i = 0; i <= 1200; ++i) {
        t.push_back(i / 100.0);
        a.push_back(2.0 * std::numbers::pi * 1.5 * t.back()); // 1.5 rot/s
    }
    // 4 fps badly undersamples 1.5 rot/s
    const ImageSequence seq = render_sequence(AngleTrace(t, a), geom, NoisePreset::none(), 4.0, 1);
    REQUIRE_FALSE(seq.warnings.empty());
    AnalysisConfig cfg;
    cfg.target_side = 16;
    cfg.f_min_hz = 0.25;
    const AnalyzeResult res = analyze(seq, cfg);
    REQUIRE_FALSE(res.warnings.empty());
    CHECK(res.warnings.front().find("aliasing") != std::string::npos);
}

TEST_CASE("analyze validates the window against f_min and labels stage errors") {
    BarGeometry geom;
    geom.resolution = 32;
    std::vector<double> t, a;
    for (int i = 0; i <= 40; ++i) {
        t.push_back(i / 10.0);
        a.push_back(0.3 * t.back());
    }
    const ImageSequence seq =
        render_sequence(AngleTrace(t, a), geom, NoisePreset::none(), 10.0, 1);

    AnalysisConfig cfg;
    cfg.window_s = 6.0; // below 2/0.25
    CHECK_THROWS_AS(analyze(seq, cfg), value_error);

    cfg = {};
    cfg.window_s = 8.0; // longer than the 4 s sequence: spectrogram stage fails
    try {
        analyze(seq, cfg);
        FAIL("expected stage_error");
    } catch (const stage_error& e) {
        CHECK(e.stage == "spectrogram");
        CHECK(std::string(e.what()).find("[spectrogram]") != std::string::npos);
    }
}

#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "spinquant/embedding.hpp"
#include "spinquant/render.hpp"
#include "spinquant/rng.hpp"

using namespace spinquant;

namespace {

ImageSequence two_frame_wrap(std::vector<float> a, std::vector<float> b, int side) {
    std::vector<Frame> frames;
    frames.emplace_back(side, side, std::move(a));
    frames.emplace_back(side, side, std::move(b));
    return ImageSequence(std::move(frames), 1.0, 0.0);
}

} // namespace

TEST_CASE("preprocess keeps an already standardized frame") {
    // +1/-1 checkerboard: zero mean, unit variance, exactly representable.
    const int side = 16;
    std::vector<float> vals(side * side);
    for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) vals[r * side + c] = ((r + c) % 2 == 0) ? 1.0f : -1.0f;
    const auto m = preprocess_frames(two_frame_wrap(vals, vals, side), 16);
    REQUIRE(m.cols() == side * side);
    for (int i = 0; i < m.cols(); ++i)
        CHECK(std::abs(m(0, i) - static_cast<double>(vals[static_cast<std::size_t>(i)])) < 1e-12);
}

TEST_CASE("preprocess removes constant offsets") {
    const int side = 16;
    std::vector<float> a(side * side), b(side * side);
    Rng rng(11);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = static_cast<float>(std::floor(rng.uniform01() * 8.0) * 0.25);
        b[i] = a[i] + 0.5f;
    }
    const auto m = preprocess_frames(two_frame_wrap(a, b, side), 16);
    for (int i = 0; i < m.cols(); ++i) CHECK(std::abs(m(0, i) - m(1, i)) < 1e-12);
}

TEST_CASE("preprocess box-averages 2x2 blocks when halving") {
    const int side = 16;
    std::vector<float> vals(side * side);
    Rng rng(3);
    for (auto& v : vals) v = static_cast<float>(rng.uniform01());
    const auto m = preprocess_frames(two_frame_wrap(vals, vals, side), 8);
    REQUIRE(m.cols() == 64);

    // independently: 2x2 box means, then standardize
    std::vector<double> box(64);
    for (int by = 0; by < 8; ++by)
        for (int bx = 0; bx < 8; ++bx) {
            double acc = 0.0;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx)
                    acc += vals[static_cast<std::size_t>(2 * by + dy) * side + 2 * bx + dx];
            box[static_cast<std::size_t>(by) * 8 + bx] = acc / 4.0;
        }
    double mean = 0.0;
    for (double v : box) mean += v;
    mean /= 64.0;
    double var = 0.0;
    for (double v : box) var += (v - mean) * (v - mean);
    var /= 64.0;
    for (int i = 0; i < 64; ++i)
        CHECK(m(0, i) ==
              Approx((box[static_cast<std::size_t>(i)] - mean) / std::sqrt(var)).margin(1e-12));
}

TEST_CASE("preprocess rejects constant frames") {
    const int side = 16;
    std::vector<float> flat(side * side, 3.5f);
    CHECK_THROWS_AS(preprocess_frames(two_frame_wrap(flat, flat, side), 16), degenerate_error);
    std::vector<float> ok(side * side, 0.0f);
    ok[0] = 1.0f;
    CHECK_THROWS_AS(preprocess_frames(two_frame_wrap(ok, ok, side), 4), value_error);
}

TEST_CASE("pairwise squared distances match the brute-force loop") {
    RowMatrixXd v(5, 7);
    Rng rng(21);
    for (Eigen::Index i = 0; i < v.rows(); ++i)
        for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = rng.uniform01() * 4.0 - 2.0;
    const Eigen::MatrixXd d2 = pairwise_sqdist(v);

    for (Eigen::Index i = 0; i < 5; ++i) {
        CHECK(d2(i, i) == 0.0);
        for (Eigen::Index j = 0; j < 5; ++j) {
            double acc = 0.0;
            for (Eigen::Index k = 0; k < 7; ++k) acc += (v(i, k) - v(j, k)) * (v(i, k) - v(j, k));
            CHECK(d2(i, j) == Approx(acc).margin(1e-12));
            CHECK(d2(i, j) == d2(j, i)); // exact symmetry
        }
    }

    RowMatrixXd pair(2, 2);
    pair << 0, 0, 3, 4;
    CHECK(pairwise_sqdist(pair)(0, 1) == 25.0);
}

TEST_CASE("hexagon ring: all retained weights equal exp(-1)") {
    RowMatrixXd pts(6, 2);
    for (int i = 0; i < 6; ++i) {
        const double a = std::numbers::pi / 3.0 * i;
        pts(i, 0) = std::cos(a);
        pts(i, 1) = std::sin(a);
    }
    const AffinityGraph g = build_affinity(pairwise_sqdist(pts), 2);
    REQUIRE(g.edges.size() == 6); // the ring
    for (const auto& e : g.edges) {
        CHECK(e.weight == Approx(std::exp(-1.0)).epsilon(1e-12));
        CHECK((e.j - e.i == 1 || e.j - e.i == 5)); // neighbours on the ring
    }
    for (double d : g.degrees) CHECK(d == Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("disconnected kNN graph is bridged by the smallest gap") {
    RowMatrixXd pts(6, 1);
    pts << 0.0, 0.1, 0.2, 10.0, 10.1, 10.2;
    const AffinityGraph g = build_affinity(pairwise_sqdist(pts), 1);
    bool has_bridge = false;
    for (const auto& e : g.edges)
        if (e.i == 2 && e.j == 3) has_bridge = true; // the closest inter-cluster pair
    CHECK(has_bridge);
    // connected: power through the Laplacian null space check below
    const Embedding1D emb = laplacian_embed_1d(g, {0, 1, 2, 3, 4, 5});
    CHECK(emb.eigenvalue > 0.0);
    CHECK(emb.eigenvalue < 1e-6); // nearly disconnected: tiny Fiedler value
}

TEST_CASE("too few frames is an error") {
    Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(2, 2);
    CHECK_THROWS_AS(build_affinity(d2, 1), value_error);
}

TEST_CASE("constant vector lies in the Laplacian null space") {
    RowMatrixXd pts(8, 2);
    Rng rng(5);
    for (Eigen::Index i = 0; i < 8; ++i) {
        pts(i, 0) = rng.uniform01();
        pts(i, 1) = rng.uniform01();
    }
    const AffinityGraph g = build_affinity(pairwise_sqdist(pts), 3);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(8);
    CHECK(laplacian_times(g, ones).norm() <= 1e-10 * degree_times(g, ones).norm());
}

TEST_CASE("path graph embedding matches the dense Jacobi oracle and is monotone") {
    // 4 nodes in a line, 3 equal-weight edges.
    AffinityGraph g;
    g.n = 4;
    g.edges = {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}};
    g.degrees = {1.0, 2.0, 2.0, 1.0};
    const Embedding1D emb = laplacian_embed_1d(g, {0, 1, 2, 3});

    CHECK(emb.residual <= 1e-8);
    REQUIRE(emb.coords.size() == 4);
    for (int i = 1; i < 4; ++i) CHECK(emb.coords[i] < emb.coords[i - 1] + 1e-12);
    const bool increasing = emb.coords[3] > emb.coords[0];
    const bool decreasing = emb.coords[3] < emb.coords[0];
    CHECK((increasing || decreasing));

    // Independent oracle: Jacobi on D^{-1/2} L D^{-1/2}.
    std::vector<std::vector<double>> a(4, std::vector<double>(4, 0.0));
    for (int i = 0; i < 4; ++i) a[i][i] = 1.0;
    for (const auto& e : g.edges) {
        const double v = -e.weight / std::sqrt(g.degrees[e.i] * g.degrees[e.j]);
        a[e.i][e.j] = v;
        a[e.j][e.i] = v;
    }
    std::vector<double> evals;
    std::vector<std::vector<double>> evecs;
    oracles::jacobi_eigen(a, evals, evecs);
    CHECK(emb.eigenvalue == Approx(evals[1]).margin(1e-10));

    // oracle eigenvector mapped back, normalized and sign-fixed the same way
    std::vector<double> f(4);
    for (int i = 0; i < 4; ++i) f[static_cast<std::size_t>(i)] = evecs[i][1] / std::sqrt(g.degrees[i]);
    double mass = 0.0, weighted = 0.0, norm2 = 0.0;
    for (int i = 0; i < 4; ++i) {
        mass += g.degrees[i];
        weighted += g.degrees[i] * f[i];
    }
    for (int i = 0; i < 4; ++i) f[i] -= weighted / mass;
    for (int i = 0; i < 4; ++i) norm2 += g.degrees[i] * f[i] * f[i];
    for (int i = 0; i < 4; ++i) f[i] /= std::sqrt(norm2);
    if (f[0] < 0.0)
        for (double& x : f) x = -x;
    for (int i = 0; i < 4; ++i) CHECK(emb.coords[i] == Approx(f[i]).margin(1e-9));
}

TEST_CASE("embedding has zero D-weighted mean and unit D-norm") {
    RowMatrixXd pts(30, 3);
    Rng rng(8);
    for (Eigen::Index i = 0; i < pts.rows(); ++i)
        for (Eigen::Index j = 0; j < 3; ++j) pts(i, j) = rng.uniform01();
    const AffinityGraph g = build_affinity(pairwise_sqdist(pts), 4);
    std::vector<double> times(30);
    for (int i = 0; i < 30; ++i) times[i] = i;
    const Embedding1D emb = laplacian_embed_1d(g, times);

    double mean = 0.0, mass = 0.0, norm2 = 0.0;
    for (int i = 0; i < 30; ++i) {
        mean += g.degrees[i] * emb.coords[i];
        mass += g.degrees[i];
        norm2 += g.degrees[i] * emb.coords[i] * emb.coords[i];
    }
    CHECK(std::abs(mean / mass) < 1e-9);
    CHECK(norm2 == Approx(1.0).epsilon(1e-9));
    CHECK(emb.residual <= 1e-8);
}

TEST_CASE("permuting frames and un-permuting coords is the identity") {
    const int n = 24;
    RowMatrixXd pts(n, 4);
    Rng rng(13);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < 4; ++j) pts(i, j) = rng.uniform01();

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i)
        std::swap(perm[static_cast<std::size_t>(i)],
                  perm[static_cast<std::size_t>(rng.next_u64() % static_cast<std::uint64_t>(i + 1))]);

    RowMatrixXd shuffled(n, 4);
    for (int i = 0; i < n; ++i) shuffled.row(i) = pts.row(perm[static_cast<std::size_t>(i)]);

    std::vector<double> times(n);
    for (int i = 0; i < n; ++i) times[static_cast<std::size_t>(i)] = i;
    const Embedding1D base = laplacian_embed_1d(build_affinity(pairwise_sqdist(pts), 4), times);
    const Embedding1D shuf = laplacian_embed_1d(build_affinity(pairwise_sqdist(shuffled), 4), times);

    std::vector<double> unshuffled(n);
    for (int i = 0; i < n; ++i) unshuffled[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = shuf.coords[static_cast<std::size_t>(i)];
    // global sign is a convention, not an invariant, under permutation
    const double sign = (unshuffled[0] * base.coords[0] < 0.0) ? -1.0 : 1.0;
    for (int i = 0; i < n; ++i)
        CHECK(sign * unshuffled[static_cast<std::size_t>(i)] ==
              Approx(base.coords[static_cast<std::size_t>(i)]).margin(1e-8));
}

TEST_CASE("embedding is invariant to positive affine intensity maps") {
    BarGeometry g;
    g.resolution = 48;
    std::vector<double> t, a;
    for (int i = 0; i <= 60; ++i) {
        t.push_back(i / 10.0);
        a.push_back(2.0 * std::numbers::pi * 0.3 * t.back());
    }
    const AngleTrace trace(t, a);
    const ImageSequence seq = render_sequence(trace, g, NoisePreset::none(), 10.0, 1);

    ImageSequence mapped = seq;
    for (Frame& f : mapped.frames)
        for (float& v : f.values) v = 2.0f * v + 0.25f;

    EmbeddingConfig cfg;
    cfg.target_side = 24;
    cfg.knn = 6;
    const Embedding1D e1 = embed_sequence(seq, cfg);
    const Embedding1D e2 = embed_sequence(mapped, cfg);
    REQUIRE(e1.size() == e2.size());
    for (std::size_t i = 0; i < e1.size(); ++i)
        CHECK(e1.coords[i] == Approx(e2.coords[i]).margin(1e-9));
}

TEST_CASE("constant-rate rotation embeds as a sinusoid at twice the rate") {
    BarGeometry g;
    g.resolution = 64;
    std::vector<double> t, a;
    for (int i = 0; i <= 1000; ++i) {
        t.push_back(i / 100.0);
        a.push_back(2.0 * std::numbers::pi * 0.5 * t.back()); // 0.5 rot/s for 10 s
    }
    const ImageSequence seq =
        render_sequence(AngleTrace(t, a), g, NoisePreset::none(), 10.0, 1);
    EmbeddingConfig cfg;
    cfg.target_side = 32;
    const Embedding1D emb = embed_sequence(seq, cfg);

    const auto power = oracles::dft_power(emb.coords);
    std::size_t best = 1;
    for (std::size_t k = 1; k < power.size(); ++k)
        if (power[k] > power[best]) best = k;
    const double fs = 10.0;
    const double bin = fs / static_cast<double>(emb.size());
    const double peak_freq = static_cast<double>(best) * bin;
    CHECK(std::abs(peak_freq - 1.0) <= bin + 1e-12); // 2 x 0.5 Hz
}

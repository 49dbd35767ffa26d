#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "spinquant/errors.hpp"
#include "spinquant/io.hpp"
#include "spinquant/types.hpp"

namespace spinquant {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Undirected weighted graph over frames. Edges are stored once with i < j;
/// `degrees[i]` is the sum of weights incident to node i.
struct AffinityGraph {
    struct Edge {
        int i, j;
        double weight;
    };
    int n = 0;
    std::vector<Edge> edges;
    std::vector<double> degrees;
};

/// One scalar manifold coordinate per frame.
struct Embedding1D {
    std::vector<double> times;
    std::vector<double> coords;
    double eigenvalue = 0.0; // generalized eigenvalue of the returned pair
    double residual = 0.0;   // ||L f - lambda D f|| / ||D f||

    std::size_t size() const { return coords.size(); }
};

// ---------------------------------------------------------------------------
// Frame preprocessing
// ---------------------------------------------------------------------------

/// Box-downsample every frame to at most target_side per axis, then
/// standardize each frame to zero mean and unit variance. Returns one row
/// per frame.
inline RowMatrixXd preprocess_frames(const ImageSequence& seq, int target_side) {
    if (target_side < 8)
        throw value_error("preprocess_frames: target_side must be >= 8");
    const int w = seq.width(), h = seq.height();
    const int ow = std::min(w, target_side), oh = std::min(h, target_side);
    const auto n = static_cast<Eigen::Index>(seq.size());
    const auto d = static_cast<Eigen::Index>(ow) * oh;

    // Per-axis bin boundaries: bin k covers [floor(k*size/out), floor((k+1)*size/out)).
    std::vector<int> xb(ow + 1), yb(oh + 1);
    for (int k = 0; k <= ow; ++k) xb[k] = static_cast<int>(static_cast<long long>(k) * w / ow);
    for (int k = 0; k <= oh; ++k) yb[k] = static_cast<int>(static_cast<long long>(k) * h / oh);

    RowMatrixXd out(n, d);
    for (Eigen::Index fi = 0; fi < n; ++fi) {
        const Frame& fr = seq.frames[static_cast<std::size_t>(fi)];
        double* row = out.row(fi).data();
        for (int by = 0; by < oh; ++by) {
            for (int bx = 0; bx < ow; ++bx) {
                double acc = 0.0;
                int cnt = 0;
                for (int y = yb[by]; y < yb[by + 1]; ++y)
                    for (int x = xb[bx]; x < xb[bx + 1]; ++x, ++cnt)
                        acc += fr.at(y, x);
                row[by * ow + bx] = acc / cnt;
            }
        }
        const double mean = out.row(fi).mean();
        out.row(fi).array() -= mean;
        const double var = out.row(fi).squaredNorm() / static_cast<double>(d);
        if (!(var > 0.0))
            throw degenerate_error("preprocess_frames: constant frame at index " +
                                   std::to_string(fi));
        out.row(fi) /= std::sqrt(var);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pairwise distances and graph construction
// ---------------------------------------------------------------------------

/// Exactly symmetric matrix of squared Euclidean distances between rows.
inline Eigen::MatrixXd pairwise_sqdist(const RowMatrixXd& vectors) {
    const Eigen::Index n = vectors.rows();
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double d2 = (vectors.row(i) - vectors.row(j)).squaredNorm();
            m(i, j) = d2;
            m(j, i) = d2;
        }
    }
    return m;
}

namespace detail {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[a] = b;
        return true;
    }
};

} // namespace detail

/// Union-symmetrized kNN graph with self-tuning heat-kernel weights
/// w = exp(-d2/t), t = median retained squared distance. If the kNN graph is
/// disconnected, the smallest-distance edge between distinct components is
/// added repeatedly until it is connected. Weights are floored at 1e-12 so
/// they stay in (0, 1] even when the kernel underflows.
///
/// The neighbour budget counts distinct manifold points, not frames:
/// near-duplicate frames (squared distance below 1e-12 of the data scale,
/// e.g. a bar at rest or a rotation commensurate with the frame rate) ride
/// along with the point they duplicate instead of consuming the budget, and
/// are excluded from the kernel scale. Otherwise a burst of duplicates
/// crowds out one side of the local neighbourhood and collapses t to zero.
inline AffinityGraph build_affinity(const Eigen::MatrixXd& sqdist, int k) {
    const int n = static_cast<int>(sqdist.rows());
    if (n < 3)
        throw value_error("build_affinity: need at least 3 frames");
    if (k < 1 || k >= n)
        throw value_error("build_affinity: k must satisfy 1 <= k < n");

    const double dup_eps = 1e-12 * sqdist.maxCoeff();

    std::vector<std::uint8_t> adj(static_cast<std::size_t>(n) * n, 0);
    std::vector<int> order(n - 1);
    for (int i = 0; i < n; ++i) {
        int pos = 0;
        for (int j = 0; j < n; ++j)
            if (j != i) order[static_cast<std::size_t>(pos++)] = j;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            return sqdist(i, a) != sqdist(i, b) ? sqdist(i, a) < sqdist(i, b) : a < b;
        });
        int distinct = 0;
        int prev = -1; // last retained non-self-duplicate neighbour
        for (int j : order) {
            const bool self_dup = sqdist(i, j) <= dup_eps;
            const bool new_point =
                !self_dup && (prev < 0 || sqdist(j, prev) > dup_eps);
            if (new_point && distinct == k) break;
            adj[static_cast<std::size_t>(std::min(i, j)) * n + std::max(i, j)] = 1;
            if (new_point) ++distinct;
            if (!self_dup) prev = j;
        }
    }

    std::vector<std::pair<int, int>> retained;
    std::vector<double> d2s;
    std::vector<double> scale_pool;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (adj[static_cast<std::size_t>(i) * n + j]) {
                retained.emplace_back(i, j);
                d2s.push_back(sqdist(i, j));
                if (sqdist(i, j) > dup_eps) scale_pool.push_back(sqdist(i, j));
            }

    // Self-tuning kernel scale: median retained (non-duplicate) squared
    // distance.
    double t = 1.0;
    if (!scale_pool.empty()) {
        std::sort(scale_pool.begin(), scale_pool.end());
        if (scale_pool.size() % 2 == 1)
            t = scale_pool[scale_pool.size() / 2];
        else
            t = 0.5 * (scale_pool[scale_pool.size() / 2 - 1] + scale_pool[scale_pool.size() / 2]);
    }

    AffinityGraph g;
    g.n = n;
    const auto kernel = [&](double d2) { return std::max(std::exp(-d2 / t), 1e-12); };
    detail::UnionFind uf(n);
    for (std::size_t e = 0; e < retained.size(); ++e) {
        g.edges.push_back({retained[e].first, retained[e].second, kernel(d2s[e])});
        uf.unite(retained[e].first, retained[e].second);
    }

    // Connectivity repair: minimum bridging edges between components.
    for (;;) {
        int best_i = -1, best_j = -1;
        double best_d2 = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (uf.find(i) != uf.find(j) &&
                    (best_i < 0 || sqdist(i, j) < best_d2)) {
                    best_i = i;
                    best_j = j;
                    best_d2 = sqdist(i, j);
                }
        if (best_i < 0) break;
        g.edges.push_back({best_i, best_j, kernel(best_d2)});
        uf.unite(best_i, best_j);
    }

    g.degrees.assign(n, 0.0);
    for (const auto& e : g.edges) {
        g.degrees[e.i] += e.weight;
        g.degrees[e.j] += e.weight;
    }
    return g;
}

/// (D - W) x
inline Eigen::VectorXd laplacian_times(const AffinityGraph& g, const Eigen::VectorXd& x) {
    Eigen::VectorXd y(g.n);
    for (int i = 0; i < g.n; ++i) y(i) = g.degrees[i] * x(i);
    for (const auto& e : g.edges) {
        y(e.i) -= e.weight * x(e.j);
        y(e.j) -= e.weight * x(e.i);
    }
    return y;
}

/// D x
inline Eigen::VectorXd degree_times(const AffinityGraph& g, const Eigen::VectorXd& x) {
    Eigen::VectorXd y(g.n);
    for (int i = 0; i < g.n; ++i) y(i) = g.degrees[i] * x(i);
    return y;
}

// ---------------------------------------------------------------------------
// 1D spectral embedding
// ---------------------------------------------------------------------------

/// Solve L f = lambda D f (L = D - W) for the eigenvector of the smallest
/// non-zero eigenvalue, via the symmetric reduction
/// D^{-1/2} L D^{-1/2} g = lambda g and a dense self-adjoint solve.
/// The result is D-orthogonal to the constant vector, scaled so f' D f = 1,
/// and signed so its first non-zero coordinate is positive.
inline Embedding1D laplacian_embed_1d(const AffinityGraph& g, const std::vector<double>& times) {
    const int n = g.n;
    if (static_cast<int>(times.size()) != n)
        throw value_error("laplacian_embed_1d: times length must equal node count");

    Eigen::VectorXd inv_sqrt_d(n);
    for (int i = 0; i < n; ++i) {
        if (!(g.degrees[i] > 0.0))
            throw value_error("laplacian_embed_1d: isolated node " + std::to_string(i));
        inv_sqrt_d(i) = 1.0 / std::sqrt(g.degrees[i]);
    }

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : g.edges) {
        const double v = -e.weight * inv_sqrt_d(e.i) * inv_sqrt_d(e.j);
        a(e.i, e.j) += v;
        a(e.j, e.i) += v;
    }
    for (int i = 0; i < n; ++i) a(i, i) = 1.0;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
    if (solver.info() != Eigen::Success)
        throw numeric_error("laplacian_embed_1d: eigen-solver did not converge within " +
                            std::to_string(30 * n) + " implicit QL iterations");

    const double lambda = solver.eigenvalues()(1);
    Eigen::VectorXd f = inv_sqrt_d.asDiagonal() * solver.eigenvectors().col(1);

    // Enforce D-orthogonality to the constant vector and unit D-norm.
    double mass = 0.0, weighted = 0.0;
    for (int i = 0; i < n; ++i) {
        mass += g.degrees[i];
        weighted += g.degrees[i] * f(i);
    }
    f.array() -= weighted / mass;
    double d_norm2 = 0.0;
    for (int i = 0; i < n; ++i) d_norm2 += g.degrees[i] * f(i) * f(i);
    if (!(d_norm2 > 0.0))
        throw numeric_error("laplacian_embed_1d: degenerate eigenvector");
    f /= std::sqrt(d_norm2);

    for (int i = 0; i < n; ++i) {
        if (f(i) != 0.0) {
            if (f(i) < 0.0) f = -f;
            break;
        }
    }

    Embedding1D emb;
    emb.times = times;
    emb.coords.assign(f.data(), f.data() + n);
    emb.eigenvalue = lambda;
    const Eigen::VectorXd df = degree_times(g, f);
    emb.residual = (laplacian_times(g, f) - lambda * df).norm() / df.norm();
    return emb;
}

/// Neighborhood size used when none is given: max(10, 2% of n), capped at n-1.
inline int default_knn(int n) {
    return std::min(n - 1, std::max(10, static_cast<int>(std::lround(0.02 * n))));
}

struct EmbeddingConfig {
    int target_side = 64;
    int knn = 0; // 0 = default_knn(n)
};

/// Full embedding pipeline: preprocess, distances, affinity graph, eigenmap.
inline Embedding1D embed_sequence(const ImageSequence& seq, const EmbeddingConfig& cfg = {}) {
    const RowMatrixXd vectors = preprocess_frames(seq, cfg.target_side);
    const Eigen::MatrixXd d2 = pairwise_sqdist(vectors);
    const int n = static_cast<int>(seq.size());
    const int k = cfg.knn > 0 ? std::min(cfg.knn, n - 1) : default_knn(n);
    const AffinityGraph graph = build_affinity(d2, k);
    std::vector<double> times(seq.size());
    for (std::size_t i = 0; i < seq.size(); ++i) times[i] = seq.time_of(i);
    return laplacian_embed_1d(graph, times);
}

/// Embedding CSV: header "time_s,coord".
inline std::string encode_embedding_csv(const Embedding1D& emb) {
    std::string out = "time_s,coord\n";
    for (std::size_t i = 0; i < emb.size(); ++i)
        out += format_double(emb.times[i]) + "," + format_double(emb.coords[i]) + "\n";
    return out;
}

} // namespace spinquant

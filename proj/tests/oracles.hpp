#pragma once

// Independent brute-force references used only by the tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "fyio/graph.hpp"
#include "fyio/rng.hpp"

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Projection onto {x >= 0, sum x <= a} by bisection on the shift.
inline Vec capped_simplex_bisect(const Vec& v, double a) {
    Vec clipped = v.cwiseMax(0.0);
    if (clipped.sum() <= a) return clipped;
    double lo = 0.0;
    double hi = v.maxCoeff();
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((v.array() - mid).max(0.0).sum() > a) lo = mid; else hi = mid;
    }
    return (v.array() - 0.5 * (lo + hi)).max(0.0).matrix();
}

/// Projection onto the probability simplex by bisection.
inline Vec simplex_bisect(const Vec& v) {
    double lo = v.minCoeff() - 1.0;
    double hi = v.maxCoeff();
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if ((v.array() - mid).max(0.0).sum() > 1.0) lo = mid; else hi = mid;
    }
    return (v.array() - 0.5 * (lo + hi)).max(0.0).matrix();
}

/// max_x c^T x - (k/2)||x||^2 over a region, by projected gradient ascent with a fixed
/// step from `restarts` random starting points; returns the best iterate found.
inline Vec projected_gradient_qp(const Vec& c, double k, const std::function<Vec(const Vec&)>& proj,
                                 std::uint64_t seed, double step = 1e-3, int iters = 100000, int restarts = 10) {
    fyio::Rng rng(seed);
    Vec best;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        Vec x = proj(rng.uniform_vector(c.size(), -5.0, 5.0));
        for (int t = 0; t < iters; ++t) x = proj(x + step * (c - k * x));
        const double val = c.dot(x) - 0.5 * k * x.squaredNorm();
        if (val > best_val) {
            best_val = val;
            best = x;
        }
    }
    return best;
}

/// Every simple source-sink path of a graph as a 0/1 edge-indicator column.
inline Mat enumerate_paths(const fyio::Graph& g) {
    std::vector<Vec> paths;
    Vec cur = Vec::Zero(static_cast<Eigen::Index>(g.num_edges()));
    std::vector<char> on_path(g.num_nodes(), 0);
    std::function<void(std::size_t)> dfs = [&](std::size_t v) {
        if (v == g.sink()) {
            paths.push_back(cur);
            return;
        }
        on_path[v] = 1;
        for (std::size_t k = 0; k < g.num_edges(); ++k) {
            const auto& e = g.edge(k);
            if (e.tail != v || on_path[e.head]) continue;
            cur[static_cast<Eigen::Index>(k)] = 1.0;
            dfs(e.head);
            cur[static_cast<Eigen::Index>(k)] = 0.0;
        }
        on_path[v] = 0;
    };
    dfs(g.source());
    Mat out(g.num_edges(), paths.size());
    for (std::size_t j = 0; j < paths.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = paths[j];
    return out;
}

/// Projection of `target` onto the convex hull of the columns of P, by accelerated
/// projected gradient on the simplex weights.
inline Vec hull_projection(const Mat& P, const Vec& target, int iters = 200000) {
    const Eigen::Index k = P.cols();
    const double L = std::max(1e-12, (P.transpose() * P).eigenvalues().real().maxCoeff());
    Vec a = Vec::Constant(k, 1.0 / static_cast<double>(k));
    Vec z = a;
    double t = 1.0;
    for (int it = 0; it < iters; ++it) {
        const Vec grad = P.transpose() * (P * z - target);
        const Vec next = simplex_bisect(z - grad / L);
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = next + ((t - 1.0) / tn) * (next - a);
        a = next;
        t = tn;
    }
    return P * a;
}

/// Cheapest path cost over an explicit path list.
inline double min_path_cost(const Mat& P, const Vec& costs) {
    return (P.transpose() * costs).minCoeff();
}

/// Central differences of a scalar function.
inline Vec central_diff(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6) {
    Vec g(x.size());
    Vec xp = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        xp[i] = x[i] + h;
        const double up = f(xp);
        xp[i] = x[i] - h;
        const double down = f(xp);
        xp[i] = x[i];
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

/// argmax of f over a uniform grid on [lo, hi].
inline double grid_argmax(const std::function<double(double)>& f, double lo, double hi, double step) {
    double best_x = lo;
    double best = -std::numeric_limits<double>::infinity();
    const int n = static_cast<int>(std::floor((hi - lo) / step + 0.5));
    for (int i = 0; i <= n; ++i) {
        const double x = lo + step * i;
        const double v = f(x);
        if (v > best) {
            best = v;
            best_x = x;
        }
    }
    return best_x;
}

/// Random DAG on nodes 0..n-1 (edges point from lower to higher index) that always
/// contains the path 0 -> 1 -> ... -> n-1.
inline fyio::Graph random_dag(std::size_t n, double extra_prob, fyio::Rng& rng) {
    std::vector<fyio::Edge> edges;
    for (std::size_t v = 0; v + 1 < n; ++v) edges.push_back({v, v + 1});
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 2; b < n; ++b)
            if (rng.uniform(0.0, 1.0) < extra_prob) edges.push_back({a, b});
    return fyio::Graph(n, std::move(edges), 0, n - 1);
}

}  // namespace oracle

#pragma once

// Exact and regularized forward solvers.
//
// All solvers work on the canonical maximization
//     max_{x in X}  hc^T x - (quad/2) ||x||^2 ,
// which for quad > 0 is the Euclidean projection of hc/quad onto X.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "fyio/error.hpp"
#include "fyio/graph.hpp"
#include "fyio/model.hpp"

namespace fyio {

inline Vector project_box(const Vector& v, const Vector& lo, const Vector& hi) {
    if (v.size() != lo.size() || v.size() != hi.size())
        throw DimensionMismatch("project_box: length mismatch");
    return v.cwiseMax(lo).cwiseMin(hi);
}

inline Vector project_ball(const Vector& v, double radius) {
    const double n = v.norm();
    if (n <= radius) return v;
    return (radius / n) * v;
}

/// Euclidean projection onto {x >= 0, sum(x) <= cap}. O(d log d).
inline Vector project_nonneg_l1cap(const Vector& v, double cap) {
    if (!(cap > 0.0)) throw InvalidArgument("project_nonneg_l1cap: cap must be positive");
    Vector clipped = v.cwiseMax(0.0);
    if (clipped.sum() <= cap) return clipped;

    // Simplex projection: find tau with sum(max(v - tau, 0)) == cap.
    std::vector<double> sorted(v.data(), v.data() + v.size());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double prefix = 0.0;
    double tau = 0.0;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        prefix += sorted[j];
        const double candidate = (prefix - cap) / static_cast<double>(j + 1);
        if (sorted[j] - candidate > 0.0) tau = candidate;
    }
    return (v.array() - tau).cwiseMax(0.0).matrix();
}

// ---------------------------------------------------------------------------
// Shortest path

/// Unit flow on a minimum-cost source-sink path (Bellman-Ford, label correcting).
///
/// Edges are relaxed in index order with strict improvement, so among equal-cost
/// paths the result is deterministic. Negative edge costs are allowed.
inline Vector shortest_path(const Graph& g, const Vector& costs) {
    const std::size_t n = g.num_nodes();
    if (static_cast<std::size_t>(costs.size()) != g.num_edges())
        throw DimensionMismatch("shortest_path: cost length differs from edge count");
    if (!costs.allFinite()) throw InvalidArgument("shortest_path: non-finite edge cost");

    constexpr double inf = std::numeric_limits<double>::infinity();
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<double> dist(n, inf);
    std::vector<std::size_t> pred(n, none);
    dist[g.source()] = 0.0;

    auto improves = [&](std::size_t k) {
        const Edge& e = g.edge(k);
        if (dist[e.tail] == inf) return false;
        const double cand = dist[e.tail] + costs[static_cast<Index>(k)];
        if (dist[e.head] == inf) return true;
        return cand < dist[e.head] - 1e-12 * std::max(1.0, std::abs(dist[e.head]));
    };

    bool changed = true;
    for (std::size_t round = 0; round + 1 < n && changed; ++round) {
        changed = false;
        for (std::size_t k = 0; k < g.num_edges(); ++k) {
            if (improves(k)) {
                const Edge& e = g.edge(k);
                dist[e.head] = dist[e.tail] + costs[static_cast<Index>(k)];
                pred[e.head] = k;
                changed = true;
            }
        }
    }
    if (changed) {
        for (std::size_t k = 0; k < g.num_edges(); ++k)
            if (improves(k)) throw NegativeCycle();
    }
    if (dist[g.sink()] == inf) throw Unreachable();

    Vector flow = Vector::Zero(costs.size());
    std::size_t v = g.sink();
    std::size_t steps = 0;
    while (v != g.source()) {
        const std::size_t k = pred[v];
        if (k == none || ++steps > n) throw NegativeCycle();
        flow[static_cast<Index>(k)] = 1.0;
        v = g.edge(k).tail;
    }
    return flow;
}

// ---------------------------------------------------------------------------
// Frank-Wolfe projection onto the path polytope

enum class FwStepRule {
    ExactLineSearch,  // classic FW with the closed-form quadratic line search
    FullyCorrective,  // min-norm-point corrections over the active vertex set
};

struct FwConfig {
    std::size_t max_iters = 2000;
    double gap_tol = 1e-6;
    FwStepRule step_rule = FwStepRule::FullyCorrective;
};

struct FwResult {
    Vector x;
    double gap = 0.0;
    std::size_t iterations = 0;
    std::size_t active_vertices = 0;
};

namespace detail {

// argmin ||P alpha - target|| subject to sum(alpha) == 1
inline Vector affine_minimizer(const Eigen::MatrixXd& pts, const Vector& target) {
    const Index k = pts.cols();
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
    kkt.topLeftCorner(k, k) = pts.transpose() * pts;
    kkt.block(0, k, k, 1).setOnes();
    kkt.block(k, 0, 1, k).setOnes();
    Vector rhs(k + 1);
    rhs.head(k) = pts.transpose() * target;
    rhs[k] = 1.0;
    Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    return sol.head(k);
}

inline FwResult fw_line_search(const Graph& g, const Vector& target, const FwConfig& cfg) {
    FwResult res;
    res.x = shortest_path(g, -target);
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        const Vector grad = res.x - target;
        const Vector s = shortest_path(g, grad);
        const Vector dir = s - res.x;
        res.gap = -grad.dot(dir);
        res.iterations = it + 1;
        if (res.gap <= cfg.gap_tol) return res;
        const double gamma = std::clamp(res.gap / dir.squaredNorm(), 0.0, 1.0);
        res.x += gamma * dir;
    }
    throw NonConvergence(res.gap);
}

// Wolfe's minimum-norm-point method with the shortest-path oracle.
inline FwResult fw_fully_corrective(const Graph& g, const Vector& target, const FwConfig& cfg) {
    constexpr double tiny = 1e-12;
    const Index d = target.size();
    std::vector<Vector> corral{shortest_path(g, -target)};
    std::vector<double> weights{1.0};

    FwResult res;
    res.x = corral.front();
    for (std::size_t it = 0; it < cfg.max_iters; ++it) {
        const Vector grad = res.x - target;
        const Vector s = shortest_path(g, grad);
        res.gap = grad.dot(res.x - s);
        res.iterations = it + 1;
        res.active_vertices = corral.size();
        if (res.gap <= cfg.gap_tol) return res;
        // The oracle returning an active vertex means x is stationary up to rounding.
        if (std::any_of(corral.begin(), corral.end(), [&](const Vector& v) { return v == s; }))
            return res;

        corral.push_back(s);
        weights.push_back(0.0);

        // Minor cycles: each one either accepts the affine minimizer or drops a vertex.
        while (true) {
            Eigen::MatrixXd pts(d, static_cast<Index>(corral.size()));
            for (std::size_t i = 0; i < corral.size(); ++i) pts.col(static_cast<Index>(i)) = corral[i];
            const Vector alpha = affine_minimizer(pts, target);
            if ((alpha.array() > tiny).all()) {
                for (std::size_t i = 0; i < corral.size(); ++i) weights[i] = alpha[static_cast<Index>(i)];
                break;
            }
            double step = 1.0;
            for (std::size_t i = 0; i < corral.size(); ++i) {
                const double a = alpha[static_cast<Index>(i)];
                if (a <= tiny && weights[i] - a > 0.0) step = std::min(step, weights[i] / (weights[i] - a));
            }
            std::size_t keep = 0;
            for (std::size_t i = 0; i < corral.size(); ++i) {
                const double w = (1.0 - step) * weights[i] + step * alpha[static_cast<Index>(i)];
                if (w > tiny) {
                    corral[keep] = corral[i];
                    weights[keep] = w;
                    ++keep;
                }
            }
            corral.resize(keep);
            weights.resize(keep);
            const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
            for (double& w : weights) w /= total;
            if (keep <= 1) break;
        }

        Vector x = Vector::Zero(d);
        for (std::size_t i = 0; i < corral.size(); ++i) x += weights[i] * corral[i];
        const bool fresh_kept =
            std::any_of(corral.begin(), corral.end(), [&](const Vector& v) { return v == s; });
        res.x = std::move(x);
        if (!fresh_kept) break;  // rounding stalled the correction
    }
    const Vector grad = res.x - target;
    res.gap = grad.dot(res.x - shortest_path(g, grad));
    if (res.gap <= cfg.gap_tol) return res;
    throw NonConvergence(res.gap);
}

}  // namespace detail

/// Euclidean projection of `target` onto the path polytope of `g`, with its certificate.
inline FwResult fw_project_detailed(const Graph& g, const Vector& target, const FwConfig& cfg = {}) {
    if (!(cfg.gap_tol > 0.0)) throw InvalidArgument("FwConfig: gap_tol must be positive");
    if (static_cast<std::size_t>(target.size()) != g.num_edges())
        throw DimensionMismatch("fw_project: target length differs from edge count");
    if (!target.allFinite()) throw InvalidArgument("fw_project: non-finite target");
    return cfg.step_rule == FwStepRule::ExactLineSearch ? detail::fw_line_search(g, target, cfg)
                                                        : detail::fw_fully_corrective(g, target, cfg);
}

inline Vector fw_project(const Graph& g, const Vector& target, const FwConfig& cfg = {}) {
    return fw_project_detailed(g, target, cfg).x;
}

// ---------------------------------------------------------------------------
// Forward solves

namespace detail {

inline Vector linear_argmax(const FeasibleRegion& region, const Vector& hc) {
    return std::visit(
        [&](const auto& r) -> Vector {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Box>) {
                Vector x(hc.size());
                for (Index k = 0; k < hc.size(); ++k) {
                    if (hc[k] > 0.0) x[k] = r.hi[k];
                    else if (hc[k] < 0.0) x[k] = r.lo[k];
                    else x[k] = 0.5 * (r.lo[k] + r.hi[k]);
                }
                return x;
            } else if constexpr (std::is_same_v<T, Ball>) {
                const double n = hc.norm();
                if (n == 0.0) return Vector::Zero(hc.size());
                return (r.radius / n) * hc;
            } else if constexpr (std::is_same_v<T, NonNegL1Cap>) {
                Vector x = Vector::Zero(hc.size());
                Index best = 0;
                const double top = hc.maxCoeff(&best);  // first maximal index
                if (top > 0.0) x[best] = r.cap;
                return x;
            } else {
                return shortest_path(*r.graph, -hc);
            }
        },
        region);
}

/// Projection of v onto the region.
inline Vector project(const FeasibleRegion& region, const Vector& v, const FwConfig& fw) {
    return std::visit(
        [&](const auto& r) -> Vector {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Box>) return project_box(v, r.lo, r.hi);
            else if constexpr (std::is_same_v<T, Ball>) return project_ball(v, r.radius);
            else if constexpr (std::is_same_v<T, NonNegL1Cap>) return project_nonneg_l1cap(v, r.cap);
            else return fw_project(*r.graph, v, fw);
        },
        region);
}

}  // namespace detail

/// Euclidean projection onto a feasible region.
inline Vector project_onto_region(const FeasibleRegion& region, const Vector& v, const FwConfig& fw = {}) {
    return detail::project(region, v, fw);
}

/// Maximizer of hc^T x - (quad/2)||x||^2 over the region for a canonical cost vector.
inline Vector canonical_argmax(const FeasibleRegion& region, const Vector& hc, double quad,
                               const FwConfig& fw = {}) {
    if (quad == 0.0) return detail::linear_argmax(region, hc);
    // Outside the ball the projection lands on the exact linear solution; sharing the
    // formula keeps the two bitwise equal there.
    if (const Ball* b = std::get_if<Ball>(&region); b && hc.norm() >= quad * b->radius)
        return detail::linear_argmax(region, hc);
    return detail::project(region, hc / quad, fw);
}

/// Tie-broken maximizer of the unregularized forward problem at a raw cost vector h.
inline Vector solve_exact_at_cost(const ForwardProblem& fp, const Vector& h, const FwConfig& fw = {}) {
    if (h.size() != fp.dim()) throw DimensionMismatch("cost length differs from decision length");
    return canonical_argmax(fp.region, fp.canonicalize(h), fp.base_quad, fw);
}

inline Vector solve_exact(const ForwardProblem& fp, const Parameter& theta, const Vector& u,
                          const FwConfig& fw = {}) {
    return canonical_argmax(fp.region, fp.canonical_cost(theta, u), fp.base_quad, fw);
}

/// Unique maximizer of hc^T x - (q/2)||x||^2 - (lambda/2)||x||^2.
inline Vector solve_regularized_canonical(const ForwardProblem& fp, const Vector& hc, double lambda,
                                          const FwConfig& fw = {}) {
    if (!(lambda > 0.0)) throw InvalidArgument("regularization lambda must be positive");
    return canonical_argmax(fp.region, hc, fp.base_quad + lambda, fw);
}

inline Vector solve_regularized(const ForwardProblem& fp, const Parameter& theta, const Vector& u,
                                double lambda, const FwConfig& fw = {}) {
    return solve_regularized_canonical(fp, fp.canonical_cost(theta, u), lambda, fw);
}

}  // namespace fyio

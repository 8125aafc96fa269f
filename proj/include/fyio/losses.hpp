#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "fyio/model.hpp"
#include "fyio/solvers.hpp"

namespace fyio {

struct LossEval {
    double value = 0.0;
    std::optional<Vector> gradient;
};

// ---------------------------------------------------------------------------
// Fenchel-Young loss
//
// V(x) = hc^T x - (q/2)||x||^2 - (lambda/2)||x||^2 and the loss is
// max_x V(x) - V(y). Its gradient in theta is Jc^T (x_lambda - y), where Jc is the
// Jacobian of the canonical (sign-folded) cost.

inline double regularized_value(const ForwardProblem& fp, const Vector& hc, const Vector& x,
                                double lambda) {
    return hc.dot(x) - 0.5 * (fp.base_quad + lambda) * x.squaredNorm();
}

/// Loss value and gradient sharing one regularized solve.
inline LossEval fy_eval(const ForwardProblem& fp, const Parameter& theta, const Vector& u,
                        const Vector& y, double lambda, const FwConfig& fw = {}) {
    if (y.size() != fp.dim()) throw DimensionMismatch("observation length differs from decision length");
    const Vector hc = fp.canonical_cost(theta, u);
    const Vector xl = solve_regularized_canonical(fp, hc, lambda, fw);
    LossEval out;
    out.value = regularized_value(fp, hc, xl, lambda) - regularized_value(fp, hc, y, lambda);
    out.gradient = fp.sign() * cost_jacobian(fp.cost_map, u).apply_transpose(xl - y);
    return out;
}

inline double fy_loss(const ForwardProblem& fp, const Parameter& theta, const Vector& u,
                      const Vector& y, double lambda, const FwConfig& fw = {}) {
    return fy_eval(fp, theta, u, y, lambda, fw).value;
}

inline Vector fy_grad(const ForwardProblem& fp, const Parameter& theta, const Vector& u,
                      const Vector& y, double lambda, const FwConfig& fw = {}) {
    return *fy_eval(fp, theta, u, y, lambda, fw).gradient;
}

/// Mean FY loss over a dataset.
inline double fy_risk(const ForwardProblem& fp, const Parameter& theta, const Dataset& data,
                      double lambda, const FwConfig& fw = {}) {
    if (data.empty()) throw InvalidArgument("fy_risk: empty dataset");
    double total = 0.0;
    for (const DataPoint& pt : data.points) total += fy_eval(fp, theta, pt.u, pt.y, lambda, fw).value;
    return total / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Suboptimality loss (equal to the VIA loss for linear objectives)

inline LossEval subopt_eval(const ForwardProblem& fp, const Parameter& theta, const Vector& u,
                            const Vector& y, const FwConfig& fw = {}) {
    if (y.size() != fp.dim()) throw DimensionMismatch("observation length differs from decision length");
    const Vector hc = fp.canonical_cost(theta, u);
    const Vector xs = canonical_argmax(fp.region, hc, fp.base_quad, fw);
    LossEval out;
    out.value = fp.objective(hc, xs) - fp.objective(hc, y);
    out.gradient = fp.sign() * cost_jacobian(fp.cost_map, u).apply_transpose(xs - y);
    return out;
}

inline double subopt_loss(const ForwardProblem& fp, const Parameter& theta, const Vector& u,
                          const Vector& y, const FwConfig& fw = {}) {
    return subopt_eval(fp, theta, u, y, fw).value;
}

/// A subgradient built from the tie-broken exact maximizer.
inline Vector subopt_subgrad(const ForwardProblem& fp, const Parameter& theta, const Vector& u,
                             const Vector& y, const FwConfig& fw = {}) {
    return *subopt_eval(fp, theta, u, y, fw).gradient;
}

inline double subopt_risk(const ForwardProblem& fp, const Parameter& theta, const Dataset& data,
                          const FwConfig& fw = {}) {
    if (data.empty()) throw InvalidArgument("subopt_risk: empty dataset");
    double total = 0.0;
    for (const DataPoint& pt : data.points) total += subopt_eval(fp, theta, pt.u, pt.y, fw).value;
    return total / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Squared distance loss, used as a test and benchmark oracle only.

inline double dist_loss_oracle(const ForwardProblem& fp, const Parameter& theta, const Vector& u,
                               const Vector& y, const FwConfig& fw = {}) {
    return (y - solve_exact(fp, theta, u, fw)).squaredNorm();
}

// ---------------------------------------------------------------------------
// KKT-approximation (KKA) loss
//
// Per point, the stationarity residual of the min-form problem
//     r = -(hc - q y) + sum_j dual_j grad g_j(y)
// and the complementary-slackness residuals dual_j * g_j(y). Box constraints use
// duals (upper, lower) of length 2d; the capped simplex uses (nonneg, cap) of
// length d + 1.

struct KkaState {
    Parameter theta;
    std::vector<Vector> duals;  // one block per data point
};

struct KkaGradient {
    Vector theta;
    std::vector<Vector> duals;
};

inline Index kka_dual_size(const FeasibleRegion& region, Index d) {
    if (std::holds_alternative<Box>(region)) return 2 * d;
    if (std::holds_alternative<NonNegL1Cap>(region)) return d + 1;
    throw UnsupportedRegion("KKA residuals are implemented for box and capped-simplex regions only, not " +
                            region_name(region));
}

inline KkaState kka_initial_state(const ForwardProblem& fp, const Parameter& theta0, std::size_t n) {
    const Index q = kka_dual_size(fp.region, fp.dim());
    return KkaState{theta0, std::vector<Vector>(n, Vector::Zero(q))};
}

namespace detail {

struct KkaResiduals {
    Vector stationarity;
    Vector complementary;  // same layout as the duals
    Vector slack;          // g_j(y), same layout as the duals
};

inline KkaResiduals kka_residuals(const ForwardProblem& fp, const Parameter& theta, const DataPoint& pt,
                                  const Vector& dual) {
    const Index d = fp.dim();
    const Vector hc = fp.canonical_cost(theta, pt.u);
    KkaResiduals r;
    r.stationarity = -(hc - fp.base_quad * pt.y);
    if (const Box* box = std::get_if<Box>(&fp.region)) {
        r.slack.resize(2 * d);
        r.slack.head(d) = pt.y - box->hi;
        r.slack.tail(d) = box->lo - pt.y;
        r.stationarity += dual.head(d) - dual.tail(d);
    } else if (const NonNegL1Cap* cap = std::get_if<NonNegL1Cap>(&fp.region)) {
        r.slack.resize(d + 1);
        r.slack.head(d) = -pt.y;
        r.slack[d] = pt.y.sum() - cap->cap;
        r.stationarity += -dual.head(d) + Vector::Constant(d, dual[d]);
    } else {
        kka_dual_size(fp.region, d);  // throws
    }
    r.complementary = dual.cwiseProduct(r.slack);
    return r;
}

inline void check_kka_state(const ForwardProblem& fp, const KkaState& state, const Dataset& data) {
    if (data.empty()) throw InvalidArgument("KKA: empty dataset");
    const Index q = kka_dual_size(fp.region, fp.dim());
    if (state.duals.size() != data.size()) throw DimensionMismatch("KKA: one dual block per data point");
    for (const Vector& v : state.duals)
        if (v.size() != q) throw DimensionMismatch("KKA: dual block length");
}

}  // namespace detail

inline double kka_objective(const ForwardProblem& fp, const KkaState& state, const Dataset& data) {
    detail::check_kka_state(fp, state, data);
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto r = detail::kka_residuals(fp, state.theta, data.points[i], state.duals[i]);
        total += r.stationarity.squaredNorm() + r.complementary.squaredNorm();
    }
    return total;
}

inline KkaGradient kka_grad(const ForwardProblem& fp, const KkaState& state, const Dataset& data) {
    detail::check_kka_state(fp, state, data);
    const Index d = fp.dim();
    KkaGradient g{Vector::Zero(state.theta.size()), {}};
    g.duals.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const DataPoint& pt = data.points[i];
        const auto r = detail::kka_residuals(fp, state.theta, pt, state.duals[i]);
        // d r / d theta = -Jc
        g.theta -= 2.0 * fp.sign() * cost_jacobian(fp.cost_map, pt.u).apply_transpose(r.stationarity);
        Vector gd = 2.0 * r.complementary.cwiseProduct(r.slack);
        if (std::holds_alternative<Box>(fp.region)) {
            gd.head(d) += 2.0 * r.stationarity;
            gd.tail(d) -= 2.0 * r.stationarity;
        } else {
            gd.head(d) -= 2.0 * r.stationarity;
            gd[d] += 2.0 * r.stationarity.sum();
        }
        g.duals.push_back(std::move(gd));
    }
    return g;
}

}  // namespace fyio

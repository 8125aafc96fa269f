#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fyio/losses.hpp"
#include "fyio/model.hpp"
#include "fyio/solvers.hpp"

namespace fyio {

struct MetricsReport {
    double parameter_error = 0.0;
    double decision_error = 0.0;
    double regret = 0.0;
    double relative_regret_ratio = std::numeric_limits<double>::quiet_NaN();  // percent; shortest path only
    std::size_t n_test = 0;
    double wall_time_seconds = 0.0;
};

/// l1 distance between parameters.
inline double parameter_error(const Parameter& estimate, const Parameter& truth) {
    if (estimate.size() != truth.size()) throw DimensionMismatch("parameter_error: shape mismatch");
    return (estimate.values - truth.values).lpNorm<1>();
}

inline void require_contexts(const std::vector<Vector>& contexts) {
    if (contexts.empty()) throw InvalidArgument("empty test context set");
}

/// Mean squared distance between the decisions induced by the estimate and the truth.
inline double decision_error(const ForwardProblem& fp, const Parameter& estimate, const Parameter& truth,
                             const std::vector<Vector>& contexts, const FwConfig& fw = {}) {
    require_contexts(contexts);
    double total = 0.0;
    for (const Vector& u : contexts)
        total += (solve_exact(fp, estimate, u, fw) - solve_exact(fp, truth, u, fw)).squaredNorm();
    return total / static_cast<double>(contexts.size());
}

/// Mean true-objective loss of acting on the estimate, oriented to be >= 0.
inline double regret(const ForwardProblem& fp, const Parameter& estimate, const Parameter& truth,
                     const std::vector<Vector>& contexts, const FwConfig& fw = {}) {
    require_contexts(contexts);
    double total = 0.0;
    for (const Vector& u : contexts) {
        const Vector hc = fp.canonical_cost(truth, u);
        total += fp.objective(hc, solve_exact(fp, truth, u, fw)) - fp.objective(hc, solve_exact(fp, estimate, u, fw));
    }
    return total / static_cast<double>(contexts.size());
}

/// 100 * (realized cost of the predicted decisions - clairvoyant cost) / clairvoyant cost,
/// with costs averaged over the records. Requires a Min-sense problem.
inline double relative_regret_ratio(const ForwardProblem& fp, const Parameter& estimate,
                                    const std::vector<TravelRecord>& records, const FwConfig& fw = {}) {
    if (fp.sense != Sense::Min) throw InvalidArgument("relative regret ratio needs a Min-sense problem");
    if (records.empty()) throw InvalidArgument("empty record set");
    double predicted = 0.0;
    double clairvoyant = 0.0;
    for (const TravelRecord& r : records) {
        predicted += r.times.dot(solve_exact(fp, estimate, r.u, fw));
        clairvoyant += r.times.dot(solve_exact_at_cost(fp, r.times, fw));
    }
    return 100.0 * (predicted - clairvoyant) / clairvoyant;
}

// ---------------------------------------------------------------------------
// Calibration bound:
//     D(theta) <= 2 E||x_lambda(theta) - x*(theta)||^2 + (4/lambda) [R_lambda(theta) - inf R_lambda]

struct CalibrationReport {
    double lhs = 0.0;
    double reg_error_term = 0.0;
    double excess_risk_term = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/// The inf over parameters is approximated by the minimum over `candidates`
/// (theta itself is always included). Risks are evaluated on the conditional-mean
/// surrogate y = x*(theta*; u).
inline CalibrationReport calibration_check(const ForwardProblem& fp, const Parameter& theta, const Parameter& truth,
                                           double lambda, const std::vector<Vector>& contexts,
                                           const std::vector<Parameter>& candidates, const FwConfig& fw = {}) {
    require_contexts(contexts);
    if (!(lambda > 0.0)) throw InvalidArgument("calibration_check: lambda must be positive");

    std::vector<DataPoint> pts;
    pts.reserve(contexts.size());
    for (const Vector& u : contexts) pts.push_back({u, solve_exact(fp, truth, u, fw)});
    const Dataset surrogate(std::move(pts), fp.cost_map.m, fp.dim());

    CalibrationReport rep;
    rep.lhs = decision_error(fp, theta, truth, contexts, fw);
    for (const Vector& u : contexts)
        rep.reg_error_term += (solve_regularized(fp, theta, u, lambda, fw) - solve_exact(fp, theta, u, fw)).squaredNorm();
    rep.reg_error_term /= static_cast<double>(contexts.size());

    const double risk = fy_risk(fp, theta, surrogate, lambda, fw);
    double best = risk;
    for (const Parameter& c : candidates) best = std::min(best, fy_risk(fp, c, surrogate, lambda, fw));
    rep.excess_risk_term = risk - best;
    rep.rhs = 2.0 * rep.reg_error_term + (4.0 / lambda) * std::max(rep.excess_risk_term, 0.0);
    rep.holds = rep.lhs <= rep.rhs + 1e-8;
    return rep;
}

// ---------------------------------------------------------------------------
// Regret bound in Cauchy-Schwarz form: Reg <= sqrt(B * D) with
// B = mean ||h(theta*; u)||^2 and D the decision error.

struct RegretBoundReport {
    double regret = 0.0;  // linear-objective regret
    double cost_scale = 0.0;
    double decision_error = 0.0;
    double bound = 0.0;
    bool holds = false;
};

inline RegretBoundReport regret_bound_check(const ForwardProblem& fp, const Parameter& estimate, const Parameter& truth,
                                            const std::vector<Vector>& contexts, const FwConfig& fw = {}) {
    require_contexts(contexts);
    RegretBoundReport rep;
    for (const Vector& u : contexts) {
        const Vector hc = fp.canonical_cost(truth, u);
        const Vector best = solve_exact(fp, truth, u, fw);
        const Vector acted = solve_exact(fp, estimate, u, fw);
        rep.regret += hc.dot(best - acted);
        rep.cost_scale += hc.squaredNorm();
        rep.decision_error += (acted - best).squaredNorm();
    }
    const double n = static_cast<double>(contexts.size());
    rep.regret /= n;
    rep.cost_scale /= n;
    rep.decision_error /= n;
    rep.bound = std::sqrt(rep.cost_scale * rep.decision_error);
    rep.holds = rep.regret <= rep.bound + 1e-8;
    return rep;
}

/// Distance between the regularized and exact ball solutions for a nonzero cost h:
/// zero when lambda <= ||h||/a, otherwise at most lambda a^2 / (2||h||).
inline double ball_regularization_bound(double cost_norm, double radius, double lambda) {
    if (lambda <= cost_norm / radius) return 0.0;
    return lambda * radius * radius / (2.0 * cost_norm);
}

}  // namespace fyio

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <variant>
#include <vector>

#include "fyio/losses.hpp"
#include "fyio/model.hpp"
#include "fyio/rng.hpp"
#include "fyio/solvers.hpp"

namespace fyio {

// ---------------------------------------------------------------------------
// Configuration

struct NoProjection {};
struct UnitL2Sphere {};
struct BoxTheta {
    double lo;
    double hi;
};
using ParamSpace = std::variant<NoProjection, UnitL2Sphere, BoxTheta>;

enum class StepSchedule { Constant, InvSqrt };

struct SgdConfig {
    double learning_rate = 0.05;
    std::size_t batch_size = 32;
    std::size_t max_iters = 10000;
    double tolerance = 1e-6;
    double lambda = 0.1;
    std::uint64_t seed = 0;
    std::optional<Parameter> theta0;  // zero vector when absent
    ParamSpace param_space = NoProjection{};
    StepSchedule schedule = StepSchedule::Constant;
    FwConfig fw;

    void validate() const {
        if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
        if (batch_size == 0) throw InvalidArgument("batch_size must be at least 1");
        if (max_iters == 0) throw InvalidArgument("max_iters must be at least 1");
        if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
        if (!(lambda > 0.0)) throw InvalidArgument("lambda must be positive");
        if (const auto* b = std::get_if<BoxTheta>(&param_space); b && !(b->lo <= b->hi))
            throw InvalidArgument("parameter box requires lo <= hi");
    }
};

struct FitResult {
    Parameter theta;
    std::size_t iterations = 0;
    double final_grad_norm = 0.0;
    std::vector<double> trace;  // batch risk (or objective) per iteration
    double wall_time = 0.0;     // seconds
    std::optional<double> selected_bandwidth;  // SPA only
};

/// How the suboptimality fitter aggregates per-point gaps.
enum class GapForm {
    Linear,         // mean gap, the plain suboptimality risk
    SquaredHinge,   // mean max(gap, 0)^2, the VIA program min ||eps||^2 s.t. eps_i >= gap_i
};

inline constexpr double kDivergenceNorm = 1e6;

inline Parameter default_theta0(const ForwardProblem& fp) {
    const CostMap& cm = fp.cost_map;
    if (cm.kind == CostKind::MatrixProduct) return Parameter::zeros(cm.d, cm.m);
    return Parameter::zeros(cm.p);
}

inline void project_param(Parameter& theta, const ParamSpace& space) {
    if (std::holds_alternative<UnitL2Sphere>(space)) {
        const double n = theta.values.norm();
        if (n > 0.0) theta.values /= n;
        else theta.values.setConstant(1.0 / std::sqrt(static_cast<double>(theta.size())));
    } else if (const auto* b = std::get_if<BoxTheta>(&space)) {
        theta.values = theta.values.cwiseMax(b->lo).cwiseMin(b->hi);
    }
}

namespace detail {

inline Parameter initial_theta(const ForwardProblem& fp, const SgdConfig& cfg) {
    Parameter theta = cfg.theta0 ? *cfg.theta0 : default_theta0(fp);
    if (theta.size() != fp.cost_map.p) throw DimensionMismatch("theta0 length differs from the cost map");
    project_param(theta, cfg.param_space);
    return theta;
}

inline void check_dataset(const Dataset& data, const ForwardProblem& fp) {
    if (data.empty()) throw InvalidArgument("dataset is empty");
    if (data.m != fp.cost_map.m || data.d != fp.dim())
        throw DimensionMismatch("dataset dimensions differ from the forward problem");
}

/// Mini-batch (sub)gradient descent shared by the gradient-based fitters.
/// `eval(theta, point)` returns the per-point loss and (sub)gradient.
template <class Eval>
FitResult minibatch_descent(const Dataset& data, const ForwardProblem& fp, const SgdConfig& cfg, Eval&& eval) {
    cfg.validate();
    check_dataset(data, fp);
    const auto start = std::chrono::steady_clock::now();

    FitResult res;
    res.theta = initial_theta(fp, cfg);
    const std::size_t n = data.size();
    const std::size_t m = std::min(cfg.batch_size, n);

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = n;  // forces a shuffle before the first batch

    Vector grad(res.theta.size());
    for (std::size_t t = 0; t < cfg.max_iters; ++t) {
        if (m < n && cursor + m > n) {
            std::shuffle(order.begin(), order.end(), rng.engine());
            cursor = 0;
        } else if (m == n) {
            cursor = 0;
        }
        grad.setZero();
        double risk = 0.0;
        for (std::size_t b = 0; b < m; ++b) {
            const LossEval e = eval(res.theta, data.points[order[cursor + b]]);
            risk += e.value;
            grad += *e.gradient;
        }
        cursor += m;
        grad /= static_cast<double>(m);
        res.trace.push_back(risk / static_cast<double>(m));

        const double step = cfg.schedule == StepSchedule::Constant
                                ? cfg.learning_rate
                                : cfg.learning_rate / std::sqrt(static_cast<double>(t + 1));
        res.theta.values -= step * grad;
        project_param(res.theta, cfg.param_space);
        if (!res.theta.finite() || res.theta.values.norm() > kDivergenceNorm) throw Diverged(t);

        res.iterations = t + 1;
        res.final_grad_norm = grad.norm();
        if (res.final_grad_norm <= cfg.tolerance) {
            // A small batch can be stationary long before the full risk is; confirm on all points.
            if (m < n) {
                grad.setZero();
                for (const DataPoint& pt : data.points) grad += *eval(res.theta, pt).gradient;
                res.final_grad_norm = grad.norm() / static_cast<double>(n);
            }
            if (res.final_grad_norm <= cfg.tolerance) break;
        }
    }
    res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Fitters

/// Empirical FY risk minimization by mini-batch SGD.
inline FitResult fy_sgd_fit(const Dataset& data, const ForwardProblem& fp, const SgdConfig& cfg) {
    return detail::minibatch_descent(data, fp, cfg, [&](const Parameter& theta, const DataPoint& pt) {
        return fy_eval(fp, theta, pt.u, pt.y, cfg.lambda, cfg.fw);
    });
}

/// Subgradient descent on the suboptimality (VIA) risk.
inline FitResult subopt_fit(const Dataset& data, const ForwardProblem& fp, const SgdConfig& cfg,
                            GapForm form = GapForm::SquaredHinge) {
    return detail::minibatch_descent(data, fp, cfg, [&](const Parameter& theta, const DataPoint& pt) {
        LossEval e = subopt_eval(fp, theta, pt.u, pt.y, cfg.fw);
        if (form == GapForm::SquaredHinge) {
            const double gap = std::max(e.value, 0.0);
            e.value = gap * gap;
            *e.gradient *= 2.0 * gap;
        }
        return e;
    });
}

struct KkaFit {
    FitResult fit;
    KkaState state;
    double objective = 0.0;
};

/// Projected gradient descent with backtracking on the KKA objective over
/// (theta, duals >= 0). `cfg.learning_rate` is the initial trial step.
inline KkaFit kka_fit_detailed(const Dataset& data, const ForwardProblem& fp, const SgdConfig& cfg) {
    cfg.validate();
    detail::check_dataset(data, fp);
    const auto start = std::chrono::steady_clock::now();

    KkaFit out;
    out.state = kka_initial_state(fp, detail::initial_theta(fp, cfg), data.size());
    double obj = kka_objective(fp, out.state, data);
    double step = cfg.learning_rate;

    for (std::size_t t = 0; t < cfg.max_iters; ++t) {
        out.fit.trace.push_back(obj);
        const KkaGradient g = kka_grad(fp, out.state, data);

        KkaState trial;
        double trial_obj = obj;
        double moved_sq = 0.0;
        for (int halving = 0; halving < 60; ++halving) {
            trial.theta = out.state.theta;
            trial.theta.values -= step * g.theta;
            project_param(trial.theta, cfg.param_space);
            trial.duals.resize(out.state.duals.size());
            moved_sq = (trial.theta.values - out.state.theta.values).squaredNorm();
            for (std::size_t i = 0; i < trial.duals.size(); ++i) {
                trial.duals[i] = (out.state.duals[i] - step * g.duals[i]).cwiseMax(0.0);
                moved_sq += (trial.duals[i] - out.state.duals[i]).squaredNorm();
            }
            trial_obj = kka_objective(fp, trial, data);
            // Armijo condition for the projected step
            if (trial_obj <= obj - 0.5 / step * moved_sq) break;
            step *= 0.5;
        }
        const double step_used = step;
        if (trial_obj <= obj) {
            out.state = std::move(trial);
            obj = trial_obj;
        }
        if (!out.state.theta.finite() || out.state.theta.values.norm() > kDivergenceNorm) throw Diverged(t);

        out.fit.iterations = t + 1;
        out.fit.final_grad_norm = std::sqrt(moved_sq) / step_used;  // projected-gradient mapping
        if (out.fit.final_grad_norm <= cfg.tolerance || obj <= 1e-300) break;
        step = std::min(step * 2.0, 1e6);
    }
    out.objective = obj;
    out.fit.theta = out.state.theta;
    out.fit.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

inline FitResult kka_fit(const Dataset& data, const ForwardProblem& fp, const SgdConfig& cfg) {
    return kka_fit_detailed(data, fp, cfg).fit;
}

// ---------------------------------------------------------------------------
// Nadaraya-Watson denoising and the semi-parametric (SPA) pipeline

namespace detail {

inline double gaussian_weight(const Vector& a, const Vector& b, double bandwidth) {
    return std::exp(-0.5 * (a - b).squaredNorm() / (bandwidth * bandwidth));
}

}  // namespace detail

/// Kernel-weighted average of the observations of `train` at context u.
inline Vector nw_predict(const Dataset& train, const Vector& u, double bandwidth) {
    if (!(bandwidth > 0.0)) throw InvalidArgument("bandwidth must be positive");
    if (train.empty()) throw InvalidArgument("nw_predict: empty training set");
    Vector acc = Vector::Zero(train.d);
    double total = 0.0;
    for (const DataPoint& pt : train.points) {
        const double w = std::isinf(bandwidth) ? 1.0 : detail::gaussian_weight(u, pt.u, bandwidth);
        acc += w * pt.y;
        total += w;
    }
    if (!(total > 0.0)) throw DegenerateKernel();
    return acc / total;
}

inline std::vector<Vector> nw_denoise(const Dataset& data, double bandwidth) {
    if (data.size() < 2) throw InvalidArgument("nw_denoise needs at least two points");
    std::vector<Vector> out;
    out.reserve(data.size());
    for (const DataPoint& pt : data.points) out.push_back(nw_predict(data, pt.u, bandwidth));
    return out;
}

/// k-fold cross-validated bandwidth minimizing held-out reconstruction MSE.
/// Bandwidths whose kernel degenerates on some fold are skipped.
inline double select_bandwidth(const Dataset& data, const std::vector<double>& grid, std::size_t folds,
                               std::uint64_t seed) {
    if (grid.empty()) throw InvalidArgument("empty bandwidth grid");
    if (data.size() < 2) throw InvalidArgument("cross-validation needs at least two points");
    for (double bw : grid)
        if (!(bw > 0.0)) throw InvalidArgument("bandwidths must be positive");
    folds = std::clamp<std::size_t>(folds, 2, data.size());

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng.engine());

    double best_bw = 0.0;
    double best_mse = std::numeric_limits<double>::infinity();
    for (double bw : grid) {
        double sse = 0.0;
        bool degenerate = false;
        for (std::size_t f = 0; f < folds && !degenerate; ++f) {
            std::vector<std::size_t> train_idx, test_idx;
            for (std::size_t i = 0; i < order.size(); ++i) (i % folds == f ? test_idx : train_idx).push_back(order[i]);
            const Dataset train = data.subset(train_idx);
            for (std::size_t i : test_idx) {
                try {
                    sse += (nw_predict(train, data.points[i].u, bw) - data.points[i].y).squaredNorm();
                } catch (const DegenerateKernel&) {
                    degenerate = true;
                    break;
                }
            }
        }
        if (degenerate) continue;
        const double mse = sse / static_cast<double>(data.size());
        if (mse < best_mse) {
            best_mse = mse;
            best_bw = bw;
        }
    }
    if (!std::isfinite(best_mse)) throw DegenerateKernel();
    return best_bw;
}

struct SpaConfig {
    std::vector<double> bandwidths{0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0};
    std::size_t folds = 5;
    SgdConfig inner;
    GapForm gap_form = GapForm::Linear;
};

/// Denoise with Nadaraya-Watson, project onto X(u), then fit the suboptimality risk.
inline FitResult spa_fit(const Dataset& data, const ForwardProblem& fp, const SpaConfig& cfg) {
    detail::check_dataset(data, fp);
    const auto start = std::chrono::steady_clock::now();
    const double bw = select_bandwidth(data, cfg.bandwidths, cfg.folds, cfg.inner.seed);
    const std::vector<Vector> smooth = nw_denoise(data, bw);
    std::vector<DataPoint> pts;
    pts.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i)
        pts.push_back({data.points[i].u, project_onto_region(fp.region, smooth[i], cfg.inner.fw)});
    const Dataset cleaned(std::move(pts), data.m, data.d, data.truth);
    FitResult res = subopt_fit(cleaned, fp, cfg.inner, cfg.gap_form);
    res.selected_bandwidth = bw;
    res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

}  // namespace fyio

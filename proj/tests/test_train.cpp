#include <gtest/gtest.h>

#include "fyio/experiment.hpp"
#include "fyio/metrics.hpp"
#include "fyio/train.hpp"

using namespace fyio;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Index>(xs.size()));
    Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

SgdConfig sgd(double lr, std::size_t batch, std::size_t iters, double lambda = 0.1, std::uint64_t seed = 1) {
    SgdConfig c;
    c.learning_rate = lr;
    c.batch_size = batch;
    c.max_iters = iters;
    c.lambda = lambda;
    c.seed = seed;
    return c;
}

double held_out_decision_error(const ExampleSpec& spec, const Parameter& theta, std::uint64_t seed = 99) {
    const Example ex = build_example(spec);
    return decision_error(ex.problem, theta, ex.truth, sample_contexts(spec.contexts(), 1000, seed));
}

bool signs_match(const Vector& a, const Vector& b) {
    for (Index i = 0; i < a.size(); ++i)
        if (!(a[i] * b[i] > 0.0)) return false;
    return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// FY-SGD

TEST(FySgd, NoiselessExampleCRecoversTheta) {
    const ExampleSpec spec = ExampleSpec::defaults(ExampleKind::C);
    const Example ex = build_example(spec);
    const Dataset data = generate(spec, 300, Noiseless{}, 1);
    const FitResult fit = fy_sgd_fit(data, ex.problem, sgd(0.05, 32, 5000, 0.01));
    EXPECT_LE(parameter_error(fit.theta, ex.truth), 0.15);
}

TEST(FySgd, StationaryStartStopsAtFirstIteration) {
    const ExampleSpec spec = ExampleSpec::defaults(ExampleKind::C, 4);
    const Example ex = build_example(spec);
    const Dataset raw = generate(spec, 20, Noiseless{}, 2);
    SgdConfig cfg = sgd(0.05, 8, 100, 0.3);
    cfg.theta0 = Parameter(vec({0.2, -0.1, 0.4, 0.0}));
    std::vector<DataPoint> pts;
    for (const DataPoint& pt : raw.points) pts.push_back({pt.u, solve_regularized(ex.problem, *cfg.theta0, pt.u, 0.3)});
    const FitResult fit = fy_sgd_fit(Dataset(pts, 4, 4), ex.problem, cfg);
    EXPECT_EQ(fit.iterations, 1u);
    EXPECT_EQ(fit.final_grad_norm, 0.0);
    EXPECT_EQ(fit.theta.values, cfg.theta0->values);
}

TEST(FySgd, NoisyExampleCDecisionError) {
    const ExampleSpec spec = ExampleSpec::defaults(ExampleKind::C);
    const Example ex = build_example(spec);
    const Dataset data = generate(spec, 1000, NoisyDecision{1.0}, 3);
    const FitResult fit = fy_sgd_fit(data, ex.problem, sgd(0.05, 32, 10000, 0.1));
    EXPECT_LE(held_out_decision_error(spec, fit.theta), 1.0);
}

TEST(FySgd, TraceLengthMatchesIterations) {
    const ExampleSpec spec = ExampleSpec::defaults(ExampleKind::A, 5);
    const Dataset data = generate(spec, 50, NoisyDecision{1.0}, 4);
    const FitResult fit = fy_sgd_fit(data, build_example(spec).problem, sgd(0.05, 16, 123));
    EXPECT_EQ(fit.iterations, 123u);
    EXPECT_EQ(fit.trace.size(), fit.iterations);
}

TEST(FySgd, DivergenceGuard) {
    const ExampleSpec spec = ExampleSpec::defaults(ExampleKind::C, 4);
    const Dataset data = generate(spec, 30, NoisyDecision{1.0}, 5);
    EXPECT_THROW(fy_sgd_fit(data, build_example(spec).problem, sgd(1e8, 8, 10)), Diverged);
}

TEST(FySgd, RejectsBadConfigAndData) {
    const ExampleSpec spec = ExampleSpec::defaults(ExampleKind::C, 4);
    const ForwardProblem fp = build_example(spec).problem;
    const Dataset data = generate(spec, 10, Noiseless{}, 6);
    EXPECT_THROW(fy_sgd_fit(data, fp, sgd(0.05, 8, 10, 0.0)), InvalidArgument);
    EXPECT_THROW(fy_sgd_fit(data, fp, sgd(0.05, 0, 10)), InvalidArgument);
    EXPECT_THROW(fy_sgd_fit(data, fp, sgd(-1.0, 8, 10)), InvalidArgument);
    EXPECT_THROW(fy_sgd_fit(generate(ExampleSpec::defaults(ExampleKind::C, 3), 10, Noiseless{}, 6), fp, sgd(0.05, 8, 10)),
                 DimensionMismatch);
}

TEST(FySgd, Deterministic) {
    const ExampleSpec spec = ExampleSpec::defaults(ExampleKind::E, 5);
    const Dataset data = generate(spec, 100, NoisyDecision{1.0}, 7);
    const ForwardProblem fp = build_example(spec).problem;
    const FitResult a = fy_sgd_fit(data, fp, sgd(0.05, 16, 200));
    const FitResult b = fy_sgd_fit(data, fp, sgd(0.05, 16, 200));
    EXPECT_EQ(a.theta.values, b.theta.values);
    EXPECT_EQ(a.trace, b.trace);
    EXPECT_NE(a.theta.values, fy_sgd_fit(data, fp, sgd(0.05, 16, 200, 0.1, 2)).theta.values);
}

TEST(FySgd, FullBatchRiskIsMonotone) {
    for (char k = 'A'; k <= 'E'; ++k) {
        const ExampleSpec spec = ExampleSpec::defaults(parse_example_kind(std::string(1, k)), 5);
        const Dataset data = generate(spec, 60, NoisyDecision{1.0}, 8);
        const FitResult fit = fy_sgd_fit(data, build_example(spec).problem, sgd(0.01, 60, 300));
        for (std::size_t t = 1; t < fit.trace.size(); ++t) EXPECT_LE(fit.trace[t], fit.trace[t - 1] + 1e-12) << k;
    }
}

TEST(FySgd, ParamSpaceProjection) {
    const ExampleSpec spec = ExampleSpec::defaults(ExampleKind::C, 4);
    const Dataset data = generate(spec, 50, NoisyDecision{1.0}, 9);
    SgdConfig cfg = sgd(0.05, 16, 100);
    cfg.param_space = UnitL2Sphere{};
    EXPECT_NEAR(fy_sgd_fit(data, build_example(spec).problem, cfg).theta.values.norm(), 1.0, 1e-12);
    cfg.param_space = BoxTheta{-0.1, 0.1};
    EXPECT_LE(fy_sgd_fit(data, build_example(spec).problem, cfg).theta.values.lpNorm<Eigen::Infinity>(), 0.1);
}

// ---------------------------------------------------------------------------
// Suboptimality fit

TEST(SuboptFit, NoiselessLinearInstanceReachesZeroLoss) {
    const ExampleSpec spec = ExampleSpec::defaults(ExampleKind::C);
    const Example ex = build_example(spec);
    const Dataset data = generate(spec, 300, Noiseless{}, 10);
    const FitResult fit = subopt_fit(data, ex.problem, sgd(0.05, 300, 2000), GapForm::Linear);
    EXPECT_LE(subopt_risk(ex.problem, fit.theta, data), 1e-4);
}

TEST(SuboptFit, HadamardCollapsesWithoutNormConstraint) {
    const ExampleSpec spec = ExampleSpec::defaults(ExampleKind::B);
    const Example ex = build_example(spec);
    const Dataset data = generate(spec, 100, NoisyDecision{1.0}, 11);
    SgdConfig cfg = sgd(0.05, 100, 5000);
    cfg.theta0 = Parameter(Vector::Ones(10));
    const FitResult fit = subopt_fit(data, ex.problem, cfg);
    EXPECT_LT(fit.theta.values.norm(), 1e-2);
}

TEST(SuboptFit, HadamardSignsRecoveredDespiteCollapse) {
    const ExampleSpec spec = ExampleSpec::defaults(ExampleKind::B);
    const Example ex = build_example(spec);
    const Dataset data = generate(spec, 100, Noiseless{}, 12);
    const FitResult fit = subopt_fit(data, ex.problem, sgd(1e-3, 100, 2000), GapForm::Linear);
    EXPECT_LT(fit.theta.values.norm(), 1e-2);
    EXPECT_TRUE(signs_match(fit.theta.values, ex.truth.values)) << fit.theta.values.transpose();
    EXPECT_EQ(held_out_decision_error(spec, fit.theta), 0.0);
}

TEST(SuboptFit, LambdaSensitivityOnExampleB) {
    // A positive lambda escapes the zero-cost degeneracy that traps the plain gap fit.
    const ExampleSpec spec = ExampleSpec::defaults(ExampleKind::B);
    const Example ex = build_example(spec);
    const Dataset data = generate(spec, 100, NoisyDecision{1.0}, 13);
    const FitResult collapsed = subopt_fit(data, ex.problem, sgd(0.05, 32, 2000));
    const FitResult fy = fy_sgd_fit(data, ex.problem, sgd(0.05, 32, 2000, 0.1));
    EXPECT_LT(held_out_decision_error(spec, fy.theta), held_out_decision_error(spec, collapsed.theta));
}

// ---------------------------------------------------------------------------
// KKA fit

TEST(KkaFit, NoiselessVertexObservationsReachZero) {
    const ExampleSpec spec = ExampleSpec::defaults(ExampleKind::C, 5);
    const Dataset data = generate(spec, 50, Noiseless{}, 14);
    const KkaFit fit = kka_fit_detailed(data, build_example(spec).problem, sgd(1.0, 1, 20000));
    EXPECT_LE(fit.objective, 1e-6);
}

TEST(KkaFit, NoisyObservationsStayBoundedAwayFromZero) {
    const ExampleSpec spec = ExampleSpec::defaults(ExampleKind::C, 5);
    const Dataset data = generate(spec, 50, NoisyDecision{1.0}, 15);
    const KkaFit fit = kka_fit_detailed(data, build_example(spec).problem, sgd(1.0, 1, 5000));
    EXPECT_GT(fit.objective / static_cast<double>(data.size()), 1e-3);
}

TEST(KkaFit, SinglePointMatchesGridSearch) {
    // d = 1 box problem with q = 2, an infeasible observation and theta restricted to
    // [-1, 1], so the minimum is positive; the oracle is a grid over theta and both duals.
    const ForwardProblem fp(CostMap::additive(1), make_box(1, -1, 1), Sense::Max, 2.0);
    const Dataset data({{vec({0.3}), vec({1.4})}}, 1, 1);
    SgdConfig cfg = sgd(0.1, 1, 20000);
    cfg.param_space = BoxTheta{-1.0, 1.0};
    const KkaFit fit = kka_fit_detailed(data, fp, cfg);

    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 200; ++i) {
        const double theta = -1.0 + 0.01 * i;
        for (int up = 0; up <= 20; ++up) {
            for (int lo = 0; lo <= 400; ++lo) {
                const KkaState st{Parameter(vec({theta})), {vec({0.01 * up, 0.005 * lo})}};
                best = std::min(best, kka_objective(fp, st, data));
            }
        }
    }
    EXPECT_GT(best, 1.0);
    EXPECT_LE(fit.objective, best + 1e-6);
    EXPECT_GE(fit.objective, best - 1e-3);
    EXPECT_NEAR(fit.state.theta.values[0], 1.0, 1e-9);
}

TEST(KkaFit, UnsupportedRegion) {
    const ExampleSpec spec = ExampleSpec::defaults(ExampleKind::E, 3);
    const Dataset data = generate(spec, 5, Noiseless{}, 16);
    EXPECT_THROW(kka_fit(data, build_example(spec).problem, sgd(0.1, 1, 10)), UnsupportedRegion);
}

// ---------------------------------------------------------------------------
// Nadaraya-Watson and SPA

TEST(Nw, ConstantObservationsAreFixed) {
    Rng rng(17);
    std::vector<DataPoint> pts;
    for (int i = 0; i < 20; ++i) pts.push_back({rng.uniform_vector(2, -1, 1), vec({0.25, -3.0})});
    const Dataset data(pts, 2, 2);
    for (double bw : {0.05, 0.5, 5.0})
        for (const Vector& v : nw_denoise(data, bw)) EXPECT_LE((v - vec({0.25, -3.0})).norm(), 1e-12);
}

TEST(Nw, InfiniteBandwidthGivesGlobalMean) {
    Rng rng(18);
    std::vector<DataPoint> pts;
    Vector mean = Vector::Zero(3);
    for (int i = 0; i < 30; ++i) {
        pts.push_back({rng.uniform_vector(2, -1, 1), rng.normal_vector(3)});
        mean += pts.back().y / 30.0;
    }
    const Dataset data(pts, 2, 3);
    for (const Vector& v : nw_denoise(data, std::numeric_limits<double>::infinity()))
        EXPECT_LE((v - mean).norm(), 1e-12);
    for (const Vector& v : nw_denoise(data, 1e6)) EXPECT_LE((v - mean).norm(), 1e-9);
}

TEST(Nw, DegenerateKernel) {
    const Dataset data({{vec({0.0}), vec({1.0})}, {vec({100.0}), vec({2.0})}}, 1, 1);
    EXPECT_THROW(nw_predict(data.subset({0}), vec({100.0}), 1e-3), DegenerateKernel);
    EXPECT_THROW(select_bandwidth(data, {1e-3}, 2, 0), DegenerateKernel);
    EXPECT_THROW(nw_denoise(data, 0.0), InvalidArgument);
}

TEST(Spa, NoisyExampleCNearReportedError) {
    const ExampleSpec spec = ExampleSpec::defaults(ExampleKind::C);
    const Example ex = build_example(spec);
    const Dataset data = generate(spec, 300, NoisyDecision{1.0}, 19);
    SpaConfig cfg;
    cfg.inner = sgd(0.05, 32, 2000);
    const FitResult fit = spa_fit(data, ex.problem, cfg);
    ASSERT_TRUE(fit.selected_bandwidth.has_value());
    const double err = held_out_decision_error(spec, fit.theta);
    EXPECT_LE(err, 2.0 * 1.46);
    EXPECT_GE(err, 1.46 / 2.0);
}

// ---------------------------------------------------------------------------
// Shared properties

TEST(Fitters, RiskAtEstimateNotAboveInitialRisk) {
    const ExampleSpec spec = ExampleSpec::defaults(ExampleKind::C, 5);
    const Example ex = build_example(spec);
    const Dataset data = generate(spec, 80, NoisyDecision{1.0}, 20);
    SgdConfig cfg = sgd(0.02, 80, 500);
    cfg.theta0 = Parameter(Vector::Constant(5, -0.7));

    const FitResult fy = fy_sgd_fit(data, ex.problem, cfg);
    EXPECT_LE(fy_risk(ex.problem, fy.theta, data, cfg.lambda), fy_risk(ex.problem, *cfg.theta0, data, cfg.lambda));

    const FitResult sub = subopt_fit(data, ex.problem, cfg, GapForm::Linear);
    EXPECT_LE(subopt_risk(ex.problem, sub.theta, data), subopt_risk(ex.problem, *cfg.theta0, data));

    SgdConfig kcfg = cfg;
    kcfg.learning_rate = 1.0;
    const KkaFit kka = kka_fit_detailed(data, ex.problem, kcfg);
    EXPECT_LE(kka.objective, kka_objective(ex.problem, kka_initial_state(ex.problem, *cfg.theta0, data.size()), data));
}

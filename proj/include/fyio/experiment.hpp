#pragma once

// Replicated experiment grids, report emission and numerical check suites.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fyio/losses.hpp"
#include "fyio/metrics.hpp"
#include "fyio/spath.hpp"
#include "fyio/synth.hpp"
#include "fyio/train.hpp"

namespace fyio {

struct SpathOptions {
    SynthGraphSpec synth;  // used when no files are given; synth.n is overridden by the sample size
    std::optional<std::string> edge_file;
    std::optional<std::string> records_file;
    std::string source;
    std::string sink;
    SpRunConfig run;

    bool from_files() const { return edge_file.has_value(); }
};

struct RunConfig {
    std::string experiment = "C";  // A-E or "spath"
    std::vector<Method> methods{Method::FY};
    NoiseModel noise = NoisyDecision{1.0};
    std::vector<std::size_t> sample_sizes{50, 100, 300, 500, 1000};
    std::size_t replications = 20;
    std::vector<double> lambda_grid;  // FY sensitivity sweep; 0 falls back to the suboptimality fit
    std::uint64_t seed = 0;
    std::string output = "out";
    Index dimension = 10;
    std::size_t test_size = 1000;
    std::size_t parallel = 1;
    SgdConfig sgd;
    SpaConfig spa;
    SpathOptions spath;

    bool is_spath() const { return experiment == "spath"; }

    void validate() const {
        if (!is_spath()) parse_example_kind(experiment);
        if (methods.empty()) throw InvalidArgument("method list is empty");
        if (replications == 0) throw InvalidArgument("replications must be at least 1");
        if (sample_sizes.empty()) throw InvalidArgument("sample size list is empty");
        for (std::size_t n : sample_sizes)
            if (n == 0) throw InvalidArgument("sample sizes must be at least 1");
        for (double l : lambda_grid)
            if (!(l >= 0.0) || !std::isfinite(l)) throw InvalidArgument("lambda grid values must be >= 0");
        if (test_size == 0) throw InvalidArgument("test_size must be at least 1");
        if (parallel == 0) throw InvalidArgument("parallel must be at least 1");
        if (is_spath() && spath.from_files() && !spath.records_file)
            throw InvalidArgument("spath: edge_file requires records_file");
        sgd.validate();
    }
};

// ---------------------------------------------------------------------------
// Grid execution

struct Cell {
    Method method = Method::FY;
    std::size_t n = 0;
    std::optional<double> lambda;  // set for FY cells
};

struct MetricSummary {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double se = std::numeric_limits<double>::quiet_NaN();
};

inline MetricSummary summarize(const std::vector<double>& xs) {
    MetricSummary s;
    if (xs.empty()) return s;
    const double k = static_cast<double>(xs.size());
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / k;
    if (xs.size() < 2) {
        s.se = 0.0;
        return s;
    }
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / (k - 1.0)) / std::sqrt(k);
    return s;
}

struct CellResult {
    Cell cell;
    std::vector<MetricsReport> reps;  // successful replications, in replication order
    std::vector<std::string> errors;  // "rep i: message"

    MetricSummary metric(double MetricsReport::*field) const {
        std::vector<double> xs;
        for (const MetricsReport& r : reps) xs.push_back(r.*field);
        return summarize(xs);
    }
};

struct RunReport {
    RunConfig config;
    std::vector<CellResult> cells;

    bool ok() const {
        return std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.errors.empty(); });
    }
};

inline std::vector<Cell> expand_cells(const RunConfig& cfg) {
    std::vector<Cell> cells;
    for (Method m : cfg.methods) {
        for (std::size_t n : cfg.sample_sizes) {
            if (m == Method::FY) {
                if (cfg.lambda_grid.empty()) {
                    cells.push_back({m, n, cfg.is_spath() ? cfg.spath.run.fy.lambda : cfg.sgd.lambda});
                } else {
                    for (double l : cfg.lambda_grid) cells.push_back({m, n, l});
                }
            } else {
                cells.push_back({m, n, std::nullopt});
            }
        }
    }
    return cells;
}

/// Seed shared by every method at a given (sample size, replication), so methods
/// are compared on identical data.
inline std::uint64_t data_seed(const RunConfig& cfg, std::size_t n, std::size_t rep) {
    return Rng(cfg.seed).split(n).split(rep).seed();
}

inline std::vector<Vector> sample_contexts(const ContextDistribution& dist, std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Vector> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(rng.uniform_vector(dist.m, dist.lo, dist.hi));
    return out;
}

/// Fits one method on a synthetic example dataset. A zero lambda on an FY cell runs the
/// suboptimality fit instead.
inline FitResult fit_method(const Dataset& data, const ForwardProblem& fp, Method method, std::optional<double> lambda,
                            const SgdConfig& sgd, const SpaConfig& spa, std::uint64_t seed) {
    SgdConfig c = sgd;
    c.seed = seed;
    switch (method) {
        case Method::FY:
            if (lambda && *lambda == 0.0) return subopt_fit(data, fp, c);
            if (lambda) c.lambda = *lambda;
            return fy_sgd_fit(data, fp, c);
        case Method::SUBOPT: return subopt_fit(data, fp, c);
        case Method::KKA: return kka_fit(data, fp, c);
        case Method::SPA: {
            SpaConfig s = spa;
            s.inner = c;
            return spa_fit(data, fp, s);
        }
    }
    throw InvalidArgument("unknown method");
}

inline MetricsReport run_synth_rep(const RunConfig& cfg, const Cell& cell, std::size_t rep) {
    const ExampleSpec spec = ExampleSpec::defaults(parse_example_kind(cfg.experiment), cfg.dimension);
    const Example ex = build_example(spec);
    const Rng seeds(data_seed(cfg, cell.n, rep));
    const Dataset data = generate(spec, cell.n, cfg.noise, seeds.split(0).seed());
    const std::vector<Vector> test = sample_contexts(spec.contexts(), cfg.test_size, seeds.split(1).seed());

    const FitResult fit = fit_method(data, ex.problem, cell.method, cell.lambda, cfg.sgd, cfg.spa, seeds.split(2).seed());
    MetricsReport r;
    r.parameter_error = parameter_error(fit.theta, ex.truth);
    r.decision_error = decision_error(ex.problem, fit.theta, ex.truth, test, cfg.sgd.fw);
    r.regret = regret(ex.problem, fit.theta, ex.truth, test, cfg.sgd.fw);
    r.n_test = test.size();
    r.wall_time_seconds = fit.wall_time;
    return r;
}

inline SpDataset load_spath_dataset(const RunConfig& cfg, std::size_t n, std::size_t rep) {
    const SpathOptions& o = cfg.spath;
    if (o.from_files()) {
        auto graph = std::make_shared<const Graph>(load_graph(*o.edge_file, o.source, o.sink));
        return load_records(*o.records_file, std::move(graph));
    }
    SynthGraphSpec spec = o.synth;
    spec.n = n;
    return synth_graph_instance(spec, data_seed(cfg, n, rep));
}

inline MetricsReport run_spath_rep(const RunConfig& cfg, const Cell& cell, std::size_t rep) {
    const SpDataset sp = load_spath_dataset(cfg, cell.n, rep);
    SpRunConfig run = cfg.spath.run;
    if (cell.lambda) run.fy.lambda = *cell.lambda;
    Method method = cell.method;
    if (method == Method::FY && cell.lambda && *cell.lambda == 0.0) method = Method::SUBOPT;
    return sp_run(sp, method, run, Rng(data_seed(cfg, cell.n, rep)).split(3).seed());
}

/// Executes every (cell, replication) task on a pool of cfg.parallel threads.
/// Errors are recorded per replication and never abort sibling tasks.
inline RunReport run_experiment(const RunConfig& cfg) {
    cfg.validate();
    RunReport report{cfg, {}};
    const std::vector<Cell> cells = expand_cells(cfg);
    const std::size_t reps = cfg.replications;
    const std::size_t total = cells.size() * reps;

    std::vector<std::optional<MetricsReport>> results(total);
    std::vector<std::string> messages(total);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t task = next++; task < total; task = next++) {
            const Cell& cell = cells[task / reps];
            const std::size_t rep = task % reps;
            try {
                results[task] = cfg.is_spath() ? run_spath_rep(cfg, cell, rep) : run_synth_rep(cfg, cell, rep);
            } catch (const std::exception& e) {
                messages[task] = e.what();
            }
        }
    };
    const std::size_t threads = std::min(cfg.parallel, std::max<std::size_t>(total, 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (std::thread& th : pool) th.join();

    for (std::size_t c = 0; c < cells.size(); ++c) {
        CellResult cr{cells[c], {}, {}};
        for (std::size_t rep = 0; rep < reps; ++rep) {
            const std::size_t task = c * reps + rep;
            if (results[task]) {
                cr.reps.push_back(*results[task]);
            } else {
                cr.errors.push_back("rep " + std::to_string(rep) + ": " + messages[task]);
            }
        }
        report.cells.push_back(std::move(cr));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Report files
//
// report.csv columns, one row per cell:
//   experiment,method,noise,n,lambda,identifiable,reps_ok,reps_failed,
//   parameter_error_mean,parameter_error_se,decision_error_mean,decision_error_se,
//   regret_mean,regret_se,relative_regret_ratio_mean,relative_regret_ratio_se,
//   wall_time_mean,wall_time_se
// lambda is empty for methods without one; unavailable metrics are empty. identifiable is
// false when only part of the parameter is recoverable (Example B: signs only), in which
// case parameter_error is not a meaningful accuracy measure.

inline const std::vector<std::string>& report_columns() {
    static const std::vector<std::string> cols{
        "experiment",          "method",           "noise",
        "n",                   "lambda",           "identifiable",
        "reps_ok",             "reps_failed",         "parameter_error_mean", "parameter_error_se",
        "decision_error_mean", "decision_error_se", "regret_mean",
        "regret_se",           "relative_regret_ratio_mean", "relative_regret_ratio_se",
        "wall_time_mean",      "wall_time_se"};
    return cols;
}

inline std::string format_number(double v) {
    if (!std::isfinite(v)) return "";
    std::ostringstream ss;
    ss << std::setprecision(10) << v;
    return ss.str();
}

inline std::string experiment_noise_name(const RunConfig& cfg) { return cfg.is_spath() ? "realized_times" : noise_name(cfg.noise); }

inline bool experiment_identifiable(const RunConfig& cfg) {
    return cfg.is_spath() || ExampleSpec::defaults(parse_example_kind(cfg.experiment)).identifiable();
}

inline void write_report_csv(std::ostream& out, const RunReport& rep) {
    const auto& cols = report_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
    out << '\n';
    for (const CellResult& c : rep.cells) {
        const MetricSummary pe = c.metric(&MetricsReport::parameter_error);
        const MetricSummary de = c.metric(&MetricsReport::decision_error);
        const MetricSummary rg = c.metric(&MetricsReport::regret);
        const MetricSummary rr = c.metric(&MetricsReport::relative_regret_ratio);
        const MetricSummary wt = c.metric(&MetricsReport::wall_time_seconds);
        out << rep.config.experiment << ',' << to_string(c.cell.method) << ',' << experiment_noise_name(rep.config)
            << ',' << c.cell.n << ',' << (c.cell.lambda ? format_number(*c.cell.lambda) : "") << ','
            << (experiment_identifiable(rep.config) ? "true" : "false") << ',' << c.reps.size() << ',' << c.errors.size();
        for (const MetricSummary* s : {&pe, &de, &rg, &rr, &wt}) out << ',' << format_number(s->mean) << ',' << format_number(s->se);
        out << '\n';
    }
}

inline nlohmann::json summary_json(const RunReport& rep) {
    auto num = [](double v) -> nlohmann::json { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); };
    nlohmann::json j;
    const RunConfig& cfg = rep.config;
    j["experiment"] = cfg.experiment;
    j["noise"] = experiment_noise_name(cfg);
    j["identifiable"] = experiment_identifiable(cfg);
    j["replications"] = cfg.replications;
    j["seed"] = cfg.seed;
    j["ok"] = rep.ok();
    j["cells"] = nlohmann::json::array();
    for (const CellResult& c : rep.cells) {
        nlohmann::json cj;
        cj["method"] = to_string(c.cell.method);
        cj["n"] = c.cell.n;
        cj["lambda"] = c.cell.lambda ? nlohmann::json(*c.cell.lambda) : nlohmann::json();
        cj["reps_ok"] = c.reps.size();
        cj["errors"] = c.errors;
        const std::pair<const char*, double MetricsReport::*> fields[] = {
            {"parameter_error", &MetricsReport::parameter_error},
            {"decision_error", &MetricsReport::decision_error},
            {"regret", &MetricsReport::regret},
            {"relative_regret_ratio", &MetricsReport::relative_regret_ratio},
            {"wall_time_seconds", &MetricsReport::wall_time_seconds}};
        for (const auto& [name, field] : fields) {
            const MetricSummary s = c.metric(field);
            cj[name] = {{"mean", num(s.mean)}, {"se", num(s.se)}};
        }
        j["cells"].push_back(std::move(cj));
    }
    return j;
}

// ---------------------------------------------------------------------------
// Check suites

/// Relative error max|g - fd| / max(1, max|g|).
inline double relative_gradient_error(const Vector& g, const Vector& fd) {
    return (g - fd).lpNorm<Eigen::Infinity>() / std::max(1.0, g.lpNorm<Eigen::Infinity>());
}

/// Central finite differences of the FY loss in theta.
inline Vector fy_grad_fd(const ForwardProblem& fp, const Parameter& theta, const Vector& u, const Vector& y,
                         double lambda, double h = 1e-6, const FwConfig& fw = {}) {
    Vector fd(theta.size());
    Parameter tp = theta;
    for (Index i = 0; i < theta.size(); ++i) {
        const double orig = tp.values[i];
        tp.values[i] = orig + h;
        const double up = fy_loss(fp, tp, u, y, lambda, fw);
        tp.values[i] = orig - h;
        const double down = fy_loss(fp, tp, u, y, lambda, fw);
        tp.values[i] = orig;
        fd[i] = (up - down) / (2.0 * h);
    }
    return fd;
}

struct GradCheckReport {
    std::string problem;
    std::size_t trials = 0;
    double max_relative_error = 0.0;
    double tolerance = 1e-5;
    bool pass() const { return max_relative_error <= tolerance; }
};

/// Random (theta, u, y, lambda in {0.1, 1}) triples; `draw` returns (theta, u, y).
template <class Draw>
GradCheckReport grad_check_problem(const ForwardProblem& fp, const std::string& name, std::size_t trials,
                                   std::uint64_t seed, Draw&& draw) {
    if (trials == 0) throw InvalidArgument("grad check needs at least one trial");
    GradCheckReport rep{name, trials, 0.0};
    Rng rng(seed);
    for (std::size_t t = 0; t < trials; ++t) {
        Rng local = rng.split(t);
        const auto [theta, u, y] = draw(local);
        const double lambda = (t % 2 == 0) ? 0.1 : 1.0;
        const Vector g = fy_grad(fp, theta, u, y, lambda);
        rep.max_relative_error =
            std::max(rep.max_relative_error, relative_gradient_error(g, fy_grad_fd(fp, theta, u, y, lambda)));
    }
    return rep;
}

inline GradCheckReport grad_check(ExampleKind kind, std::size_t trials, std::uint64_t seed) {
    const ExampleSpec spec = ExampleSpec::defaults(kind, 5);
    const Example ex = build_example(spec);
    const ContextDistribution ctx = spec.contexts();
    return grad_check_problem(ex.problem, "example " + to_string(kind), trials, seed, [&](Rng& rng) {
        Parameter theta(ex.truth.values + rng.normal_vector(spec.p, 1.0));
        Vector u = rng.uniform_vector(ctx.m, ctx.lo, ctx.hi);
        Vector y = solve_exact(ex.problem, ex.truth, u) + rng.normal_vector(spec.p, 0.5);
        return std::make_tuple(theta, u, y);
    });
}

/// Same check on the path polytope of a small synthetic grid.
inline GradCheckReport grad_check_flow(std::size_t trials, std::uint64_t seed) {
    auto graph = std::make_shared<const Graph>(synth_grid_graph(3, 4, 20, seed));
    const Index d = static_cast<Index>(graph->num_edges());
    const Index m = 3;
    const ForwardProblem fp(CostMap::matrix_product(d, m), FlowPolytope{graph}, Sense::Min);
    return grad_check_problem(fp, "flow polytope", trials, seed, [&](Rng& rng) {
        Parameter theta(rng.normal_vector(d * m, 1.0), d, m);
        Vector u = rng.uniform_vector(m, 0.0, 1.0);
        u[m - 1] = 1.0;
        Vector y = shortest_path(*graph, rng.uniform_vector(d, 0.5, 2.0));
        return std::make_tuple(theta, u, y);
    });
}

struct CalibSuiteReport {
    std::size_t samples = 0;
    std::size_t holds = 0;
    double fraction() const { return samples ? static_cast<double>(holds) / static_cast<double>(samples) : 0.0; }
};

/// Calibration inequality on perturbations theta* + s z, z ~ N(0, I), s ~ Uniform(0, 1).
/// The candidate set holds theta* and the FY minimizer on the conditional-mean surrogate.
inline CalibSuiteReport calibration_suite(ExampleKind kind, double lambda, std::size_t samples, std::size_t contexts,
                                          std::uint64_t seed) {
    const ExampleSpec spec = ExampleSpec::defaults(kind);
    const Example ex = build_example(spec);
    const Rng root(seed);
    const std::vector<Vector> ctx = sample_contexts(spec.contexts(), contexts, root.split(0).seed());

    std::vector<DataPoint> pts;
    for (const Vector& u : ctx) pts.push_back({u, solve_exact(ex.problem, ex.truth, u)});
    const Dataset surrogate(std::move(pts), spec.p, spec.p, ex.truth);
    SgdConfig sgd;
    sgd.lambda = lambda;
    sgd.batch_size = surrogate.size();
    sgd.max_iters = 2000;
    sgd.seed = root.split(1).seed();
    const std::vector<Parameter> candidates{ex.truth, fy_sgd_fit(surrogate, ex.problem, sgd).theta};

    CalibSuiteReport rep{samples, 0};
    Rng rng = root.split(2);
    for (std::size_t i = 0; i < samples; ++i) {
        const double s = rng.uniform(0.0, 1.0);
        const Parameter theta(ex.truth.values + s * rng.normal_vector(spec.p, 1.0));
        if (calibration_check(ex.problem, theta, ex.truth, lambda, ctx, candidates).holds) ++rep.holds;
    }
    return rep;
}

struct BallSuiteReport {
    std::size_t trials = 0;
    std::size_t violations = 0;
    double max_excess = 0.0;  // largest ||x_lambda - x*|| minus its bound
};

/// Regularized vs exact solutions on the ball: exact equality when lambda <= ||h||/a,
/// otherwise within lambda a^2 / (2||h||).
inline BallSuiteReport ball_exactness_suite(std::size_t trials, std::uint64_t seed) {
    const ExampleSpec spec = ExampleSpec::defaults(ExampleKind::E, 5);
    const Example ex = build_example(spec);
    const double a = spec.scale;
    BallSuiteReport rep{trials, 0, -std::numeric_limits<double>::infinity()};
    Rng rng(seed);
    for (std::size_t t = 0; t < trials; ++t) {
        const Parameter theta(rng.normal_vector(spec.p, 1.0));
        const Vector u = rng.uniform_vector(spec.p, 0.0, 2.0);
        const double lambda = std::exp(rng.uniform(std::log(0.01), std::log(10.0)));
        const double hn = cost(ex.problem.cost_map, theta, u).norm();
        const double dist =
            (solve_regularized(ex.problem, theta, u, lambda) - solve_exact(ex.problem, theta, u)).norm();
        const double bound = ball_regularization_bound(hn, a, lambda);
        const bool ok = lambda <= hn / a ? dist == 0.0 : dist <= bound + 1e-12;
        rep.max_excess = std::max(rep.max_excess, dist - bound);
        if (!ok) ++rep.violations;
    }
    return rep;
}

struct RegretSuiteReport {
    std::size_t trials = 0;
    std::size_t holds = 0;
};

inline RegretSuiteReport regret_bound_suite(ExampleKind kind, std::size_t trials, std::size_t contexts,
                                            std::uint64_t seed) {
    const ExampleSpec spec = ExampleSpec::defaults(kind);
    const Example ex = build_example(spec);
    const Rng root(seed);
    const std::vector<Vector> ctx = sample_contexts(spec.contexts(), contexts, root.split(0).seed());
    RegretSuiteReport rep{trials, 0};
    Rng rng = root.split(1);
    for (std::size_t t = 0; t < trials; ++t) {
        const Parameter theta(rng.normal_vector(spec.p, 1.0));
        if (regret_bound_check(ex.problem, theta, ex.truth, ctx).holds) ++rep.holds;
    }
    return rep;
}

}  // namespace fyio

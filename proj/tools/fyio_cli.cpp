#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fyio/config.hpp"
#include "fyio/fyio.hpp"

namespace {

struct Overrides {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    std::optional<std::size_t> parallel;
};

void add_common(CLI::App* cmd, Overrides& o, bool config_required) {
    auto* c = cmd->add_option("--config", o.config, "YAML run configuration");
    if (config_required) c->required();
    c->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "output directory (overrides the config)");
    cmd->add_option("--seed", o.seed, "master seed (overrides the config)");
    cmd->add_option("--reps", o.reps, "replications (overrides the config)")->check(CLI::PositiveNumber);
    cmd->add_option("--parallel", o.parallel, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
}

int run_grid(const Overrides& o, bool spath) {
    fyio::RunConfig cfg;
    try {
        if (!o.config.empty()) {
            cfg = fyio::load_run_config(o.config);
        } else {
            cfg.experiment = "spath";
            cfg.sample_sizes = {2000};
            cfg.methods = {fyio::Method::FY, fyio::Method::SUBOPT};
        }
    } catch (const fyio::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    if (cfg.is_spath() != spath) {
        std::cerr << "config error: experiment '" << cfg.experiment << "' does not belong to this subcommand\n";
        return 2;
    }
    if (!o.out.empty()) cfg.output = o.out;
    if (o.seed) cfg.seed = *o.seed;
    if (o.reps) cfg.replications = *o.reps;
    if (o.parallel) cfg.parallel = *o.parallel;

    const fyio::RunReport report = fyio::run_experiment(cfg);
    std::filesystem::create_directories(cfg.output);
    const std::filesystem::path dir(cfg.output);
    {
        std::ofstream csv(dir / "report.csv");
        fyio::write_report_csv(csv, report);
    }
    {
        std::ofstream js(dir / "summary.json");
        js << fyio::summary_json(report).dump(2) << '\n';
    }

    for (const fyio::CellResult& c : report.cells) {
        std::printf("%-7s n=%-5zu lambda=%-6s ok=%zu/%zu  param=%.4f  decision=%.4f  regret=%.4f",
                    fyio::to_string(c.cell.method).c_str(), c.cell.n,
                    c.cell.lambda ? fyio::format_number(*c.cell.lambda).c_str() : "-", c.reps.size(),
                    cfg.replications, c.metric(&fyio::MetricsReport::parameter_error).mean,
                    c.metric(&fyio::MetricsReport::decision_error).mean, c.metric(&fyio::MetricsReport::regret).mean);
        if (spath) std::printf("  ratio=%.3f%%", c.metric(&fyio::MetricsReport::relative_regret_ratio).mean);
        std::printf("  time=%.3fs\n", c.metric(&fyio::MetricsReport::wall_time_seconds).mean);
        for (const std::string& e : c.errors) std::fprintf(stderr, "  error: %s\n", e.c_str());
    }
    std::printf("wrote %s and %s\n", (dir / "report.csv").c_str(), (dir / "summary.json").c_str());
    return report.ok() ? 0 : 1;
}

int grad_check(const std::string& example, std::size_t trials, std::uint64_t seed) {
    std::vector<fyio::GradCheckReport> reports;
    if (example == "all" || example == "flow") {
        if (example == "all")
            for (char k = 'A'; k <= 'E'; ++k)
                reports.push_back(fyio::grad_check(fyio::parse_example_kind(std::string(1, k)), trials, seed));
        reports.push_back(fyio::grad_check_flow(trials, seed));
    } else {
        reports.push_back(fyio::grad_check(fyio::parse_example_kind(example), trials, seed));
    }
    bool ok = true;
    for (const auto& r : reports) {
        std::printf("%-4s %-14s trials=%zu max_rel_error=%.3e (tol %.0e)\n", r.pass() ? "PASS" : "FAIL",
                    r.problem.c_str(), r.trials, r.max_relative_error, r.tolerance);
        ok = ok && r.pass();
    }
    return ok ? 0 : 1;
}

int calib_check(const std::string& example, double lambda, std::size_t samples, std::uint64_t seed) {
    const auto kind = fyio::parse_example_kind(example);
    const auto cal = fyio::calibration_suite(kind, lambda, samples, 200, seed);
    const bool cal_ok = cal.fraction() >= 0.95;
    std::printf("%-4s calibration bound, example %s, lambda=%g: holds on %zu/%zu\n", cal_ok ? "PASS" : "FAIL",
                example.c_str(), lambda, cal.holds, cal.samples);

    const auto ball = fyio::ball_exactness_suite(1000, seed);
    std::printf("%-4s ball regularization exactness: %zu violations in %zu trials\n",
                ball.violations == 0 ? "PASS" : "FAIL", ball.violations, ball.trials);

    bool ok = cal_ok && ball.violations == 0;
    for (auto k : {fyio::ExampleKind::C, fyio::ExampleKind::E}) {
        const auto reg = fyio::regret_bound_suite(k, 50, 200, seed);
        std::printf("%-4s regret bound, example %s: holds on %zu/%zu\n", reg.holds == reg.trials ? "PASS" : "FAIL",
                    fyio::to_string(k).c_str(), reg.holds, reg.trials);
        ok = ok && reg.holds == reg.trials;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fyio: fit forward-problem parameters to observed decisions"};
    app.require_subcommand(1);

    Overrides synth_o;
    auto* synth = app.add_subcommand("synth", "run a synthetic example grid (A-E)");
    add_common(synth, synth_o, true);

    Overrides spath_o;
    auto* spath = app.add_subcommand("spath", "run the shortest-path pipeline");
    add_common(spath, spath_o, false);

    std::string grad_example = "all";
    std::size_t grad_trials = 100;
    std::uint64_t grad_seed = 0;
    auto* grad = app.add_subcommand("grad-check", "compare FY gradients with finite differences");
    grad->add_option("--example", grad_example, "A-E, flow, or all")->capture_default_str();
    grad->add_option("--trials", grad_trials, "random trials per problem")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    grad->add_option("--seed", grad_seed)->capture_default_str();

    std::string calib_example = "C";
    double calib_lambda = 0.1;
    std::size_t calib_samples = 100;
    std::uint64_t calib_seed = 0;
    auto* calib = app.add_subcommand("calib-check", "calibration, ball-exactness and regret-bound suites");
    calib->add_option("--example", calib_example, "example for the calibration suite")->capture_default_str();
    calib->add_option("--lambda", calib_lambda)->check(CLI::PositiveNumber)->capture_default_str();
    calib->add_option("--samples", calib_samples)->check(CLI::PositiveNumber)->capture_default_str();
    calib->add_option("--seed", calib_seed)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) return run_grid(synth_o, false);
        if (*spath) return run_grid(spath_o, true);
        if (*grad) return grad_check(grad_example, grad_trials, grad_seed);
        if (*calib) return calib_check(calib_example, calib_lambda, calib_samples, calib_seed);
    } catch (const fyio::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

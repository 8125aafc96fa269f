#pragma once

// YAML run configuration. Schema (every key optional):
//
//   experiment: C                 # A-E or spath
//   methods: [FY, SUBOPT]         # FY, SUBOPT (alias VIA), KKA, SPA
//   noise: noisy_decision         # noiseless | noisy_decision | noisy_objective
//   sigma: 1.0
//   sample_sizes: [50, 100, 300, 500, 1000]
//   replications: 20
//   lambda_grid: [0, 0.01, 0.1, 0.5]
//   seed: 0
//   output: out
//   dimension: 10
//   test_size: 1000
//   parallel: 1
//   sgd: {learning_rate, batch_size, max_iters, tolerance, lambda, schedule: constant|inv_sqrt}
//   spa: {bandwidths: [...], folds: 5}
//   spath:
//     rows: 5, cols: 9, edges: 93, features: 11, sigma: 0.1, train_fraction: 0.6
//     edge_file, records_file, source, sink      # load data instead of generating it
//     baseline_sgd: {...}                        # SUBOPT and SPA settings; same keys as sgd
//
// For spath experiments the sgd section configures FY.

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <yaml-cpp/yaml.h>

#include "fyio/experiment.hpp"

namespace fyio {

namespace detail {

inline std::size_t yaml_line(const YAML::Node& n) { return static_cast<std::size_t>(n.Mark().line + 1); }

inline void check_keys(const YAML::Node& map, const std::set<std::string>& allowed, const std::string& where) {
    if (!map.IsMap()) throw ParseError(yaml_line(map), where + " must be a mapping");
    for (const auto& kv : map) {
        const std::string key = kv.first.as<std::string>();
        if (!allowed.count(key)) throw ParseError(yaml_line(kv.first), "unknown key '" + key + "' in " + where);
    }
}

template <class T>
T yaml_get(const YAML::Node& n, const std::string& key) {
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        throw ParseError(yaml_line(n), "invalid value for '" + key + "'");
    }
}

template <class T>
void read(const YAML::Node& map, const std::string& key, T& out) {
    if (const YAML::Node n = map[key]) out = yaml_get<T>(n, key);
}

inline void read_sgd(const YAML::Node& n, SgdConfig& sgd, const std::string& where) {
    check_keys(n, {"learning_rate", "batch_size", "max_iters", "tolerance", "lambda", "schedule"}, where);
    read(n, "learning_rate", sgd.learning_rate);
    read(n, "batch_size", sgd.batch_size);
    read(n, "max_iters", sgd.max_iters);
    read(n, "tolerance", sgd.tolerance);
    read(n, "lambda", sgd.lambda);
    if (const YAML::Node s = n["schedule"]) {
        const std::string v = yaml_get<std::string>(s, "schedule");
        if (v == "constant") sgd.schedule = StepSchedule::Constant;
        else if (v == "inv_sqrt") sgd.schedule = StepSchedule::InvSqrt;
        else throw ParseError(yaml_line(s), "schedule must be constant or inv_sqrt");
    }
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(static_cast<std::size_t>(e.mark.line + 1), e.msg);
    }
    RunConfig cfg;
    if (root.IsNull()) return cfg;
    detail::check_keys(root,
                       {"experiment", "methods", "noise", "sigma", "sample_sizes", "replications", "lambda_grid",
                        "seed", "output", "dimension", "test_size", "parallel", "sgd", "spa", "spath"},
                       "config");

    detail::read(root, "experiment", cfg.experiment);
    if (cfg.experiment != "spath") {
        try {
            cfg.experiment = to_string(parse_example_kind(cfg.experiment));
        } catch (const InvalidArgument& e) {
            throw ParseError(detail::yaml_line(root["experiment"]), e.what());
        }
    }
    if (const YAML::Node ms = root["methods"]) {
        if (!ms.IsSequence()) throw ParseError(detail::yaml_line(ms), "methods must be a list");
        cfg.methods.clear();
        for (const YAML::Node& m : ms) {
            try {
                cfg.methods.push_back(parse_method(detail::yaml_get<std::string>(m, "methods")));
            } catch (const InvalidArgument& e) {
                throw ParseError(detail::yaml_line(m), e.what());
            }
        }
    }
    double sigma = 1.0;
    detail::read(root, "sigma", sigma);
    if (!(sigma >= 0.0)) throw ParseError(detail::yaml_line(root["sigma"]), "sigma must be nonnegative");
    std::string noise = "noisy_decision";
    detail::read(root, "noise", noise);
    if (noise == "noisy_decision") cfg.noise = NoisyDecision{sigma};
    else if (noise == "noisy_objective") cfg.noise = NoisyObjective{sigma};
    else if (noise == "noiseless") cfg.noise = Noiseless{};
    else throw ParseError(detail::yaml_line(root["noise"]), "unknown noise setting '" + noise + "'");

    detail::read(root, "sample_sizes", cfg.sample_sizes);
    detail::read(root, "replications", cfg.replications);
    detail::read(root, "lambda_grid", cfg.lambda_grid);
    detail::read(root, "seed", cfg.seed);
    detail::read(root, "output", cfg.output);
    detail::read(root, "dimension", cfg.dimension);
    detail::read(root, "test_size", cfg.test_size);
    detail::read(root, "parallel", cfg.parallel);

    if (cfg.is_spath()) cfg.sample_sizes = root["sample_sizes"] ? cfg.sample_sizes : std::vector<std::size_t>{2000};
    if (const YAML::Node s = root["sgd"]) detail::read_sgd(s, cfg.is_spath() ? cfg.spath.run.fy : cfg.sgd, "sgd");
    if (const YAML::Node s = root["spa"]) {
        detail::check_keys(s, {"bandwidths", "folds"}, "spa");
        detail::read(s, "bandwidths", cfg.spa.bandwidths);
        detail::read(s, "folds", cfg.spa.folds);
        cfg.spath.run.spa.bandwidths = cfg.spa.bandwidths;
        cfg.spath.run.spa.folds = cfg.spa.folds;
    }
    if (const YAML::Node s = root["spath"]) {
        detail::check_keys(s,
                           {"rows", "cols", "edges", "features", "sigma", "train_fraction", "edge_file",
                            "records_file", "source", "sink", "baseline_sgd"},
                           "spath");
        SpathOptions& o = cfg.spath;
        detail::read(s, "rows", o.synth.rows);
        detail::read(s, "cols", o.synth.cols);
        detail::read(s, "edges", o.synth.edges);
        if (const YAML::Node f = s["features"]) o.synth.m = detail::yaml_get<Index>(f, "features") + 1;
        detail::read(s, "sigma", o.synth.sigma);
        detail::read(s, "train_fraction", o.run.train_fraction);
        if (const YAML::Node f = s["edge_file"]) o.edge_file = detail::yaml_get<std::string>(f, "edge_file");
        if (const YAML::Node f = s["records_file"]) o.records_file = detail::yaml_get<std::string>(f, "records_file");
        detail::read(s, "source", o.source);
        detail::read(s, "sink", o.sink);
        if (const YAML::Node b = s["baseline_sgd"]) {
            detail::read_sgd(b, o.run.subopt, "baseline_sgd");
            o.run.spa.inner = o.run.subopt;
        }
    }
    try {
        cfg.validate();
    } catch (const InvalidArgument& e) {
        throw ParseError(0, e.what());
    }
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

}  // namespace fyio

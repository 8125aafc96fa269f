#pragma once

// Contextual shortest-path pipeline.
//
// Edge CSV:    edge_id,tail,head           (edge ids dense 0..d-1, node ids are strings)
// Records CSV: t_0,...,t_{d-1},f_1,...,f_{m-1}
//              realized edge times followed by context features; an intercept
//              coordinate fixed at 1 is appended as the last entry of u.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fyio/metrics.hpp"
#include "fyio/model.hpp"
#include "fyio/rng.hpp"
#include "fyio/solvers.hpp"
#include "fyio/train.hpp"

namespace fyio {

struct SpDataset {
    std::shared_ptr<const Graph> graph;
    std::vector<TravelRecord> records;
    std::vector<Vector> observations;  // clairvoyant shortest path of each record
    Index m = 0;                       // context length including the intercept
    std::optional<Parameter> truth;    // planted parameter of synthetic instances

    Index d() const { return static_cast<Index>(graph->num_edges()); }
    std::size_t size() const { return records.size(); }

    ForwardProblem problem() const {
        return ForwardProblem(CostMap::matrix_product(d(), m), FlowPolytope{graph}, Sense::Min);
    }

    Dataset dataset(const std::vector<std::size_t>& idx) const {
        std::vector<DataPoint> pts;
        pts.reserve(idx.size());
        for (std::size_t i : idx) pts.push_back({records.at(i).u, observations.at(i)});
        return Dataset(std::move(pts), m, d(), truth);
    }

    Dataset dataset() const {
        std::vector<std::size_t> idx(size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        return dataset(idx);
    }
};

/// Builds the dataset, deriving each observation as the shortest path under the realized times.
inline SpDataset make_sp_dataset(std::shared_ptr<const Graph> graph, std::vector<TravelRecord> records, Index m,
                                 std::optional<Parameter> truth = std::nullopt) {
    SpDataset sp{std::move(graph), std::move(records), {}, m, std::move(truth)};
    sp.observations.reserve(sp.records.size());
    for (const TravelRecord& r : sp.records) {
        if (r.u.size() != m || r.times.size() != sp.d()) throw DimensionMismatch("travel record dimensions");
        sp.observations.push_back(shortest_path(*sp.graph, r.times));
    }
    return sp;
}

// ---------------------------------------------------------------------------
// CSV ingestion

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string() : field.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double parse_double(const std::string& s, std::size_t line) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || s.empty()) throw ParseError(line, "not a number: '" + s + "'");
    return v;
}

inline bool next_content_line(std::istream& in, std::string& line, std::size_t& lineno) {
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("cannot open '" + path + "'");
    return in;
}

}  // namespace detail

inline Graph load_graph(std::istream& in, const std::string& source, const std::string& sink) {
    std::string line;
    std::size_t lineno = 0;
    if (!detail::next_content_line(in, line, lineno)) throw ParseError(lineno, "empty edge file");
    if (detail::split_csv_line(line) != std::vector<std::string>{"edge_id", "tail", "head"})
        throw ParseError(lineno, "expected header 'edge_id,tail,head'");

    std::map<std::string, std::size_t> ids;
    std::vector<std::string> names;
    auto node = [&](const std::string& name) {
        auto [it, fresh] = ids.emplace(name, names.size());
        if (fresh) names.push_back(name);
        return it->second;
    };
    std::vector<Edge> edges;
    while (detail::next_content_line(in, line, lineno)) {
        const auto f = detail::split_csv_line(line);
        if (f.size() != 3) throw ParseError(lineno, "expected 3 fields");
        const double id = detail::parse_double(f[0], lineno);
        if (id != static_cast<double>(edges.size()))
            throw ParseError(lineno, "edge ids must be dense and ordered from 0");
        if (f[1].empty() || f[2].empty()) throw ParseError(lineno, "empty node id");
        edges.push_back({node(f[1]), node(f[2])});
    }
    if (edges.empty()) throw ParseError(lineno, "edge file has no edges");
    auto s = ids.find(source);
    auto t = ids.find(sink);
    if (s == ids.end() || t == ids.end()) throw InvalidArgument("source or sink does not appear in the edge file");
    const std::size_t n = names.size();
    return Graph(n, std::move(edges), s->second, t->second, std::move(names));
}

inline Graph load_graph(const std::string& path, const std::string& source, const std::string& sink) {
    auto in = detail::open_input(path);
    return load_graph(in, source, sink);
}

inline SpDataset load_records(std::istream& in, std::shared_ptr<const Graph> graph) {
    const std::size_t d = graph->num_edges();
    std::string line;
    std::size_t lineno = 0;
    if (!detail::next_content_line(in, line, lineno)) throw ParseError(lineno, "empty records file");
    const auto header = detail::split_csv_line(line);
    if (header.size() < d) throw ParseError(lineno, "header has fewer time columns than edges");
    for (std::size_t k = 0; k < d; ++k)
        if (header[k] != "t_" + std::to_string(k)) throw ParseError(lineno, "expected column t_" + std::to_string(k));
    const std::size_t features = header.size() - d;
    for (std::size_t j = 0; j < features; ++j)
        if (header[d + j] != "f_" + std::to_string(j + 1))
            throw ParseError(lineno, "expected column f_" + std::to_string(j + 1));

    const Index m = static_cast<Index>(features + 1);
    std::vector<TravelRecord> records;
    while (detail::next_content_line(in, line, lineno)) {
        const auto f = detail::split_csv_line(line);
        if (f.size() != header.size()) throw ParseError(lineno, "wrong number of fields");
        TravelRecord r{Vector(m), Vector(static_cast<Index>(d))};
        for (std::size_t k = 0; k < d; ++k) {
            const double t = detail::parse_double(f[k], lineno);
            if (!(t > 0.0) || !std::isfinite(t)) throw ParseError(lineno, "edge times must be positive");
            r.times[static_cast<Index>(k)] = t;
        }
        for (std::size_t j = 0; j < features; ++j) r.u[static_cast<Index>(j)] = detail::parse_double(f[d + j], lineno);
        r.u[m - 1] = 1.0;
        records.push_back(std::move(r));
    }
    return make_sp_dataset(std::move(graph), std::move(records), m);
}

inline SpDataset load_records(const std::string& path, std::shared_ptr<const Graph> graph) {
    auto in = detail::open_input(path);
    return load_records(in, std::move(graph));
}

inline void write_graph_csv(std::ostream& out, const Graph& g) {
    out << "edge_id,tail,head\n";
    for (std::size_t k = 0; k < g.num_edges(); ++k)
        out << k << ',' << g.node_name(g.edge(k).tail) << ',' << g.node_name(g.edge(k).head) << '\n';
}

inline void write_records_csv(std::ostream& out, const SpDataset& sp) {
    const Index d = sp.d();
    for (Index k = 0; k < d; ++k) out << (k ? "," : "") << "t_" << k;
    for (Index j = 1; j < sp.m; ++j) out << ",f_" << j;
    out << '\n';
    out.precision(17);
    for (const TravelRecord& r : sp.records) {
        for (Index k = 0; k < d; ++k) out << (k ? "," : "") << r.times[k];
        for (Index j = 0; j + 1 < sp.m; ++j) out << ',' << r.u[j];
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Synthetic instances

/// rows x cols grid with right and down edges plus randomly chosen forward
/// shortcuts (diagonals and two-step skips), source top-left and sink bottom-right.
/// Every edge points forward in row-major order, so the graph is acyclic.
inline Graph synth_grid_graph(std::size_t rows, std::size_t cols, std::size_t num_edges, std::uint64_t seed) {
    if (rows < 2 || cols < 2) throw InvalidArgument("grid needs at least 2 rows and 2 columns");
    auto id = [cols](std::size_t r, std::size_t c) { return r * cols + c; };
    std::vector<Edge> edges;
    std::vector<Edge> extra;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            if (c + 1 < cols) edges.push_back({id(r, c), id(r, c + 1)});
            if (r + 1 < rows) edges.push_back({id(r, c), id(r + 1, c)});
            if (r + 1 < rows && c + 1 < cols) extra.push_back({id(r, c), id(r + 1, c + 1)});
            if (c + 2 < cols) extra.push_back({id(r, c), id(r, c + 2)});
            if (r + 2 < rows) extra.push_back({id(r, c), id(r + 2, c)});
        }
    }
    if (num_edges < edges.size() || num_edges > edges.size() + extra.size())
        throw InvalidArgument("requested edge count is outside the range this grid supports");
    Rng rng(seed);
    std::shuffle(extra.begin(), extra.end(), rng.engine());
    extra.resize(num_edges - edges.size());
    edges.insert(edges.end(), extra.begin(), extra.end());
    std::stable_sort(edges.begin(), edges.end(),
                     [](const Edge& a, const Edge& b) { return a.tail != b.tail ? a.tail < b.tail : a.head < b.head; });
    return Graph(rows * cols, std::move(edges), id(0, 0), id(rows - 1, cols - 1));
}

/// Positive planted parameter: feature weights Uniform(0,1), intercept Uniform(1,2).
inline Parameter planted_theta(Index d, Index m, std::uint64_t seed) {
    Rng rng(seed);
    Parameter theta = Parameter::zeros(d, m);
    for (Index k = 0; k < d; ++k) {
        for (Index j = 0; j + 1 < m; ++j) theta.values[k * m + j] = rng.uniform(0.0, 1.0);
        theta.values[k * m + m - 1] = rng.uniform(1.0, 2.0);
    }
    return theta;
}

/// n records with contexts Uniform[0,1]^{m-1} plus intercept and realized times
/// t = (Theta u) o (1 + sigma xi), xi ~ N(0, I), clamped below at 0.01.
inline SpDataset synth_graph_instance(std::shared_ptr<const Graph> graph, const Parameter& theta, std::size_t n,
                                      double sigma, std::uint64_t seed) {
    const Index d = static_cast<Index>(graph->num_edges());
    if (theta.rows != d || theta.cols < 1) throw DimensionMismatch("planted parameter must be d x m");
    if (!(sigma >= 0.0)) throw InvalidArgument("sigma must be nonnegative");
    const Index m = theta.cols;
    Rng rng(seed);
    std::vector<TravelRecord> records;
    records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        TravelRecord r{Vector::Ones(m), Vector()};
        r.u.head(m - 1) = rng.uniform_vector(m - 1, 0.0, 1.0);
        const Vector mean = theta.matrix() * r.u;
        r.times = mean.cwiseProduct((Vector::Ones(d) + sigma * rng.normal_vector(d, 1.0))).cwiseMax(0.01);
        records.push_back(std::move(r));
    }
    return make_sp_dataset(std::move(graph), std::move(records), m, theta);
}

/// Reference layout: 5 x 9 grid (45 nodes), 93 edges, m = 12.
struct SynthGraphSpec {
    std::size_t rows = 5;
    std::size_t cols = 9;
    std::size_t edges = 93;
    Index m = 12;
    std::size_t n = 2000;
    double sigma = 0.1;
};

inline SpDataset synth_graph_instance(const SynthGraphSpec& spec, std::uint64_t seed) {
    const Rng root(seed);
    auto graph = std::make_shared<const Graph>(synth_grid_graph(spec.rows, spec.cols, spec.edges, root.split(0).seed()));
    const Parameter theta = planted_theta(static_cast<Index>(spec.edges), spec.m, root.split(1).seed());
    return synth_graph_instance(std::move(graph), theta, spec.n, spec.sigma, root.split(2).seed());
}

// ---------------------------------------------------------------------------
// Training and evaluation

enum class Method { FY, SUBOPT, KKA, SPA };

inline std::string to_string(Method m) {
    switch (m) {
        case Method::FY: return "FY";
        case Method::SUBOPT: return "SUBOPT";
        case Method::KKA: return "KKA";
        case Method::SPA: return "SPA";
    }
    return "?";
}

inline Method parse_method(const std::string& s) {
    std::string up(s);
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (up == "FY") return Method::FY;
    if (up == "SUBOPT" || up == "VIA") return Method::SUBOPT;
    if (up == "KKA") return Method::KKA;
    if (up == "SPA") return Method::SPA;
    throw InvalidArgument("unknown method '" + s + "' (expected FY, SUBOPT, KKA or SPA)");
}

inline SgdConfig make_sgd_config(double learning_rate, std::size_t batch_size, std::size_t max_iters,
                                 double lambda = 0.1) {
    SgdConfig c;
    c.learning_rate = learning_rate;
    c.batch_size = batch_size;
    c.max_iters = max_iters;
    c.lambda = lambda;
    return c;
}

struct SpRunConfig {
    double train_fraction = 0.6;
    SgdConfig fy = make_sgd_config(0.05, 32, 300, 0.1);
    SgdConfig subopt = make_sgd_config(0.05, 0, 300);  // batch_size 0 means the full training set
    SpaConfig spa = [] {
        SpaConfig s;
        s.inner = make_sgd_config(0.05, 0, 300);
        return s;
    }();
};

/// Deterministic train/test index split.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t n, double train_fraction,
                                                                                  std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidArgument("train fraction must be in (0, 1)");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    const auto k = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
    if (k == 0 || k == n) throw InvalidArgument("split leaves an empty train or test set");
    std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
    return {std::move(train), std::move(test)};
}

inline FitResult sp_fit(const SpDataset& sp, const Dataset& train, Method method, const SpRunConfig& cfg,
                        std::uint64_t seed) {
    const ForwardProblem fp = sp.problem();
    auto with_seed = [&](SgdConfig c) {
        c.seed = seed;
        if (c.batch_size == 0) c.batch_size = train.size();
        return c;
    };
    switch (method) {
        case Method::FY: return fy_sgd_fit(train, fp, with_seed(cfg.fy));
        case Method::SUBOPT: return subopt_fit(train, fp, with_seed(cfg.subopt), GapForm::Linear);
        case Method::KKA:
            throw UnsupportedRegion("KKA residuals are not defined for the path polytope");
        case Method::SPA: {
            SpaConfig spa = cfg.spa;
            spa.inner = with_seed(spa.inner);
            return spa_fit(train, fp, spa);
        }
    }
    throw InvalidArgument("unknown method");
}

/// Trains on a 60/40 (configurable) split and evaluates on the held-out records.
/// parameter_error is NaN when the dataset has no planted parameter.
inline MetricsReport sp_run(const SpDataset& sp, Method method, const SpRunConfig& cfg, std::uint64_t seed) {
    if (method == Method::KKA) throw UnsupportedRegion("KKA residuals are not defined for the path polytope");
    const auto [train_idx, test_idx] = split_indices(sp.size(), cfg.train_fraction, seed);
    const Dataset train = sp.dataset(train_idx);
    const ForwardProblem fp = sp.problem();

    const auto start = std::chrono::steady_clock::now();
    const FitResult fit = sp_fit(sp, train, method, cfg, Rng(seed).split(1).seed());
    MetricsReport rep;
    rep.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::vector<TravelRecord> test;
    test.reserve(test_idx.size());
    double dec = 0.0;
    double reg = 0.0;
    for (std::size_t i : test_idx) {
        const TravelRecord& r = sp.records[i];
        const Vector x = solve_exact(fp, fit.theta, r.u);
        dec += (x - sp.observations[i]).squaredNorm();
        reg += r.times.dot(x - sp.observations[i]);
        test.push_back(r);
    }
    const double n_test = static_cast<double>(test_idx.size());
    rep.decision_error = dec / n_test;
    rep.regret = reg / n_test;
    rep.relative_regret_ratio = relative_regret_ratio(fp, fit.theta, test);
    rep.parameter_error =
        sp.truth ? parameter_error(fit.theta, *sp.truth) : std::numeric_limits<double>::quiet_NaN();
    rep.n_test = test_idx.size();
    return rep;
}

}  // namespace fyio

#include <gtest/gtest.h>

#include <sstream>

#include "fyio/spath.hpp"

using namespace fyio;

namespace {

const char* kTriangleEdges =
    "edge_id,tail,head\n"
    "0,s,a\n"
    "1,a,t\n"
    "2,s,t\n";

std::shared_ptr<const Graph> triangle() {
    std::istringstream in(kTriangleEdges);
    return std::make_shared<const Graph>(load_graph(in, "s", "t"));
}

bool is_unit_path(const Graph& g, const Vector& y) {
    for (Index k = 0; k < y.size(); ++k)
        if (y[k] != 0.0 && y[k] != 1.0) return false;
    return (g.incidence() * y - g.supply()).lpNorm<Eigen::Infinity>() == 0.0;
}

SpDataset reference_instance(std::size_t n, double sigma, std::uint64_t seed) {
    SynthGraphSpec spec;
    spec.n = n;
    spec.sigma = sigma;
    return synth_graph_instance(spec, seed);
}

}  // namespace

TEST(LoadGraph, TriangleFromCsv) {
    const auto g = triangle();
    EXPECT_EQ(g->num_nodes(), 3u);
    EXPECT_EQ(g->num_edges(), 3u);
    EXPECT_EQ(g->node_name(g->source()), "s");
    EXPECT_EQ(g->node_name(g->sink()), "t");
}

TEST(LoadGraph, RejectsMalformedFiles) {
    std::istringstream bad_header("id,tail,head\n0,s,t\n");
    EXPECT_THROW(load_graph(bad_header, "s", "t"), ParseError);
    std::istringstream sparse("edge_id,tail,head\n1,s,t\n");
    EXPECT_THROW(load_graph(sparse, "s", "t"), ParseError);
    std::istringstream missing("edge_id,tail,head\n0,s,a\n");
    EXPECT_THROW(load_graph(missing, "s", "t"), InvalidArgument);
    try {
        std::istringstream fields("edge_id,tail,head\n0,s,a\n1,a\n");
        load_graph(fields, "s", "a");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(LoadRecords, TriangleObservation) {
    std::istringstream in("t_0,t_1,t_2,f_1\n1,1,3,0.5\n");
    const SpDataset sp = load_records(in, triangle());
    ASSERT_EQ(sp.size(), 1u);
    Vector want(3);
    want << 1, 1, 0;
    EXPECT_EQ(sp.observations[0], want);
    EXPECT_EQ(sp.m, 2);
    EXPECT_EQ(sp.records[0].u[0], 0.5);
    EXPECT_EQ(sp.records[0].u[1], 1.0);
}

TEST(LoadRecords, RejectsNonpositiveTimes) {
    std::istringstream zero("t_0,t_1,t_2\n1,0,3\n");
    EXPECT_THROW(load_records(zero, triangle()), ParseError);
    std::istringstream neg("t_0,t_1,t_2\n1,1,-3\n");
    EXPECT_THROW(load_records(neg, triangle()), ParseError);
    std::istringstream junk("t_0,t_1,t_2\n1,x,3\n");
    EXPECT_THROW(load_records(junk, triangle()), ParseError);
}

TEST(LoadRecords, CsvRoundTrip) {
    const SpDataset sp = reference_instance(20, 0.1, 1);
    std::stringstream edges, records;
    write_graph_csv(edges, *sp.graph);
    write_records_csv(records, sp);
    const auto g = std::make_shared<const Graph>(
        load_graph(edges, sp.graph->node_name(sp.graph->source()), sp.graph->node_name(sp.graph->sink())));
    const SpDataset back = load_records(records, g);
    ASSERT_EQ(back.size(), sp.size());
    EXPECT_EQ(back.m, sp.m);
    for (std::size_t i = 0; i < sp.size(); ++i) {
        EXPECT_EQ(back.records[i].times, sp.records[i].times);
        EXPECT_EQ(back.records[i].u, sp.records[i].u);
        EXPECT_EQ(back.observations[i], sp.observations[i]);
    }
}

TEST(SynthGraph, ReferenceLayoutYieldsUnitPaths) {
    const SpDataset sp = reference_instance(200, 0.1, 2);
    EXPECT_EQ(sp.graph->num_nodes(), 45u);
    EXPECT_EQ(sp.graph->num_edges(), 93u);
    EXPECT_EQ(sp.m, 12);
    for (std::size_t i = 0; i < sp.size(); ++i) {
        EXPECT_TRUE(is_unit_path(*sp.graph, sp.observations[i]));
        EXPECT_GT(sp.records[i].times.minCoeff(), 0.0);
        EXPECT_EQ(sp.records[i].u[sp.m - 1], 1.0);
    }
}

TEST(SynthGraph, NoiselessObservationsFollowPlantedCosts) {
    const SpDataset sp = reference_instance(100, 0.0, 3);
    ASSERT_TRUE(sp.truth.has_value());
    for (std::size_t i = 0; i < sp.size(); ++i)
        EXPECT_EQ(sp.observations[i], shortest_path(*sp.graph, sp.truth->matrix() * sp.records[i].u));
}

TEST(SynthGraph, Deterministic) {
    const SpDataset a = reference_instance(50, 0.1, 4);
    const SpDataset b = reference_instance(50, 0.1, 4);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.records[i].times, b.records[i].times);
        EXPECT_EQ(a.records[i].u, b.records[i].u);
    }
    EXPECT_NE(a.records[0].times, reference_instance(50, 0.1, 5).records[0].times);
}

TEST(SynthGraph, RejectsImpossibleEdgeCounts) {
    EXPECT_THROW(synth_grid_graph(5, 9, 10, 0), InvalidArgument);
    EXPECT_THROW(synth_grid_graph(5, 9, 1000, 0), InvalidArgument);
}

TEST(Split, DeterministicAndDisjoint) {
    const auto [tr, te] = split_indices(100, 0.6, 7);
    EXPECT_EQ(tr.size(), 60u);
    EXPECT_EQ(te.size(), 40u);
    EXPECT_EQ(split_indices(100, 0.6, 7).first, tr);
    std::vector<std::size_t> all(tr);
    all.insert(all.end(), te.begin(), te.end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(all[i], i);
    EXPECT_THROW(split_indices(100, 1.0, 7), InvalidArgument);
}

TEST(Methods, ParseNames) {
    EXPECT_EQ(parse_method("fy"), Method::FY);
    EXPECT_EQ(parse_method("VIA"), Method::SUBOPT);
    EXPECT_EQ(parse_method("spa"), Method::SPA);
    EXPECT_THROW(parse_method("lasso"), InvalidArgument);
}

TEST(SpRun, KkaUnsupported) {
    const SpDataset sp = reference_instance(20, 0.1, 6);
    EXPECT_THROW(sp_run(sp, Method::KKA, SpRunConfig{}, 0), UnsupportedRegion);
}

TEST(SpRun, RegularizedDecisionsStayOnThePathPolytope) {
    const SpDataset sp = reference_instance(30, 0.1, 7);
    const ForwardProblem fp = sp.problem();
    const auto& g = *sp.graph;
    Rng rng(8);
    for (int t = 0; t < 30; ++t) {
        const Parameter theta(rng.normal_vector(fp.cost_map.p), sp.d(), sp.m);
        const Vector x = solve_regularized(fp, theta, sp.records[static_cast<std::size_t>(t)].u, t % 2 ? 0.1 : 1.0);
        EXPECT_LE((g.incidence() * x - g.supply()).lpNorm<Eigen::Infinity>(), 1e-8);
        EXPECT_GE(x.minCoeff(), -1e-8);
        EXPECT_LE(x.maxCoeff(), 1.0 + 1e-8);
    }
}

TEST(SpRun, FyBeatsSuboptOnSyntheticInstance) {
    const SpDataset sp = reference_instance(600, 0.1, 9);
    const SpRunConfig cfg;
    const MetricsReport fy = sp_run(sp, Method::FY, cfg, 10);
    const MetricsReport sub = sp_run(sp, Method::SUBOPT, cfg, 10);
    EXPECT_LT(fy.decision_error, sub.decision_error);
    EXPECT_LT(fy.relative_regret_ratio, sub.relative_regret_ratio);
    EXPECT_LE(fy.relative_regret_ratio, 5.0);
    EXPECT_EQ(fy.n_test, 240u);
    EXPECT_TRUE(std::isfinite(fy.parameter_error));
}

TEST(SpRun, RealizableNoiselessFitIsNearClairvoyant) {
    const SpDataset sp = reference_instance(500, 0.0, 11);
    SgdConfig cfg = make_sgd_config(0.05, 32, 1000, 0.1);
    const FitResult fit = fy_sgd_fit(sp.dataset(), sp.problem(), cfg);
    EXPECT_LE(relative_regret_ratio(sp.problem(), fit.theta, sp.records), 1.0);
    EXPECT_GT(relative_regret_ratio(sp.problem(), Parameter::zeros(sp.d(), sp.m), sp.records),
              relative_regret_ratio(sp.problem(), fit.theta, sp.records));
}

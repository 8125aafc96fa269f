#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "fyio/model.hpp"
#include "fyio/rng.hpp"
#include "fyio/solvers.hpp"

namespace fyio {

/// Draws n contexts and the matching observed decisions under a noise model.
///
/// NoisyDecision adds Gaussian noise to the optimal decision (the observation
/// may leave the feasible region). NoisyObjective perturbs the raw cost h and
/// solves exactly, so observations stay feasible.
inline Dataset sample_dataset(const ForwardProblem& fp, const Parameter& truth, std::size_t n,
                              const NoiseModel& noise, const ContextDistribution& contexts,
                              std::uint64_t seed) {
    if (n == 0) throw InvalidArgument("sample_dataset: n must be at least 1");
    if (contexts.m != fp.cost_map.m) throw DimensionMismatch("context distribution length");
    if (truth.size() != fp.cost_map.p) throw DimensionMismatch("truth length");
    if (!(contexts.lo < contexts.hi)) throw InvalidArgument("context distribution needs lo < hi");

    Rng rng(seed);
    const Index d = fp.dim();
    std::vector<DataPoint> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vector u = rng.uniform_vector(contexts.m, contexts.lo, contexts.hi);
        Vector y = std::visit(
            [&](const auto& nm) -> Vector {
                using T = std::decay_t<decltype(nm)>;
                if constexpr (std::is_same_v<T, NoisyDecision>) {
                    Vector x = solve_exact(fp, truth, u);
                    return x + rng.normal_vector(d, nm.sigma);
                } else if constexpr (std::is_same_v<T, NoisyObjective>) {
                    Vector h = cost(fp.cost_map, truth, u) + rng.normal_vector(d, nm.sigma);
                    return solve_exact_at_cost(fp, h);
                } else {
                    return solve_exact(fp, truth, u);
                }
            },
            noise);
        pts.push_back({std::move(u), std::move(y)});
    }
    return Dataset(std::move(pts), contexts.m, d, truth);
}

}  // namespace fyio

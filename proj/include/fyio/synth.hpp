#pragma once

// The five synthetic benchmark problems:
//   A  min (theta+u)^T x        over {x >= 0, ||x||_1 <= a}
//   B  min (theta o u)^T x      over [-1, 1]^p
//   C  min (theta+u)^T x        over [-1, 1]^p
//   D  min x^T x - (theta+u)^T x over [0, 1]^p
//   E  min -(theta+u)^T x       over {||x||_2 <= a}

#include <cstdint>
#include <string>
#include <utility>

#include "fyio/model.hpp"
#include "fyio/sampling.hpp"

namespace fyio {

enum class ExampleKind { A, B, C, D, E };

inline std::string to_string(ExampleKind k) { return std::string(1, static_cast<char>('A' + static_cast<int>(k))); }

inline ExampleKind parse_example_kind(const std::string& s) {
    if (s.size() == 1 && s[0] >= 'A' && s[0] <= 'E') return static_cast<ExampleKind>(s[0] - 'A');
    if (s.size() == 1 && s[0] >= 'a' && s[0] <= 'e') return static_cast<ExampleKind>(s[0] - 'a');
    throw InvalidArgument("unknown example kind '" + s + "' (expected A-E)");
}

struct ExampleSpec {
    ExampleKind kind = ExampleKind::C;
    Index p = 10;
    double scale = 3.0;  // l1 cap for A, ball radius for E

    static ExampleSpec defaults(ExampleKind k, Index p = 10) { return {k, p, 3.0}; }

    /// Only the signs of theta matter for Example B.
    bool identifiable() const { return kind != ExampleKind::B; }

    ContextDistribution contexts() const {
        if (kind == ExampleKind::D || kind == ExampleKind::E) return {p, 0.0, 2.0};
        return {p, -1.0, 1.0};
    }

    Parameter truth() const {
        Vector t = Vector::Constant(p, 0.5);
        if (kind == ExampleKind::B) {
            // (0.5, -0.5, ..., -0.5, 0.5, 1)
            t.setConstant(-0.5);
            t[0] = 0.5;
            if (p >= 3) t[p - 2] = 0.5;
            t[p - 1] = 1.0;
        }
        return Parameter(t);
    }
};

struct Example {
    ForwardProblem problem;
    Parameter truth;
};

inline Example build_example(const ExampleSpec& spec) {
    if (spec.p < 2) throw InvalidArgument("example dimension must be at least 2");
    if (!(spec.scale > 0.0)) throw InvalidArgument("example scale must be positive");
    const Index p = spec.p;
    switch (spec.kind) {
        case ExampleKind::A:
            return {ForwardProblem(CostMap::additive(p), NonNegL1Cap{spec.scale}, Sense::Min), spec.truth()};
        case ExampleKind::B:
            return {ForwardProblem(CostMap::hadamard(p), make_box(p, -1.0, 1.0), Sense::Min), spec.truth()};
        case ExampleKind::C:
            return {ForwardProblem(CostMap::additive(p), make_box(p, -1.0, 1.0), Sense::Min), spec.truth()};
        case ExampleKind::D:
            // max (theta+u)^T x - ||x||^2, i.e. quadratic coefficient q = 2
            return {ForwardProblem(CostMap::additive(p), make_box(p, 0.0, 1.0), Sense::Max, 2.0), spec.truth()};
        case ExampleKind::E:
            return {ForwardProblem(CostMap::additive(p), Ball{spec.scale}, Sense::Max), spec.truth()};
    }
    throw InvalidArgument("unknown example kind");
}

/// Dataset of n observations with the ground truth attached.
inline Dataset generate(const ExampleSpec& spec, std::size_t n, const NoiseModel& noise, std::uint64_t seed) {
    const Example ex = build_example(spec);
    return sample_dataset(ex.problem, ex.truth, n, noise, spec.contexts(), seed);
}

}  // namespace fyio

#pragma once

// Domain types for forward/inverse optimization problems.
//
// Every forward problem is held in a canonical maximization form
//
//     max_{x in X(u)}  h_c(theta; u)^T x - (q/2) ||x||^2
//
// with h_c = h for Max-sense problems and h_c = -h for Min-sense problems.

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "fyio/error.hpp"
#include "fyio/graph.hpp"

namespace fyio {

using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Real parameter vector; matrix parameters are stored row-major with their shape.
struct Parameter {
    Vector values;
    Index rows = 0;
    Index cols = 1;

    Parameter() = default;
    explicit Parameter(Vector v) : values(std::move(v)), rows(values.size()), cols(1) {}
    Parameter(Vector v, Index r, Index c) : values(std::move(v)), rows(r), cols(c) {
        if (rows * cols != values.size())
            throw DimensionMismatch("parameter shape does not match its length");
    }

    static Parameter zeros(Index p) { return Parameter(Vector::Zero(p)); }
    static Parameter zeros(Index r, Index c) { return Parameter(Vector::Zero(r * c), r, c); }

    Index size() const { return values.size(); }
    bool finite() const { return values.allFinite(); }
    bool is_matrix() const { return cols > 1; }

    /// Row-major view of a matrix parameter.
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
    matrix() const {
        return {values.data(), rows, cols};
    }
};

enum class CostKind { Additive, Hadamard, MatrixProduct, Identity };

inline std::string to_string(CostKind k) {
    switch (k) {
        case CostKind::Additive: return "additive";
        case CostKind::Hadamard: return "hadamard";
        case CostKind::MatrixProduct: return "matrix_product";
        case CostKind::Identity: return "identity";
    }
    return "?";
}

/// Cost map h(theta; u) = A(u) theta, linear in theta.
struct CostMap {
    CostKind kind = CostKind::Additive;
    Index p = 0;  // parameter length
    Index m = 0;  // context length
    Index d = 0;  // decision length

    static CostMap additive(Index d) { return {CostKind::Additive, d, d, d}; }
    static CostMap hadamard(Index d) { return {CostKind::Hadamard, d, d, d}; }
    static CostMap matrix_product(Index d, Index m) { return {CostKind::MatrixProduct, d * m, m, d}; }
    static CostMap identity(Index d, Index m = 0) { return {CostKind::Identity, d, m, d}; }

    void validate() const {
        bool ok = p > 0 && d > 0 && m >= 0;
        switch (kind) {
            case CostKind::Additive:
            case CostKind::Hadamard: ok = ok && p == d && m == d; break;
            case CostKind::MatrixProduct: ok = ok && m > 0 && p == d * m; break;
            case CostKind::Identity: ok = ok && p == d; break;
        }
        if (!ok) throw DimensionMismatch("inconsistent cost map dimensions");
    }
};

inline void check_dims(const CostMap& cm, const Vector& theta, const Vector& u) {
    if (theta.size() != cm.p) throw DimensionMismatch("parameter length does not match cost map");
    if (u.size() != cm.m) throw DimensionMismatch("context length does not match cost map");
}

inline Vector cost(const CostMap& cm, const Vector& theta, const Vector& u) {
    check_dims(cm, theta, u);
    switch (cm.kind) {
        case CostKind::Additive: return theta + u;
        case CostKind::Hadamard: return theta.cwiseProduct(u);
        case CostKind::MatrixProduct: {
            Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
                mat(theta.data(), cm.d, cm.m);
            return mat * u;
        }
        case CostKind::Identity: return theta;
    }
    return {};
}

inline Vector cost(const CostMap& cm, const Parameter& theta, const Vector& u) {
    return cost(cm, theta.values, u);
}

/// The Jacobian dh/dtheta = A(u) as a linear operator (it does not depend on theta).
class CostJacobian {
public:
    CostJacobian(const CostMap& cm, Vector u) : cm_(cm), u_(std::move(u)) {
        if (u_.size() != cm_.m) throw DimensionMismatch("context length does not match cost map");
    }

    Index rows() const { return cm_.d; }
    Index cols() const { return cm_.p; }

    /// A(u) * dtheta
    Vector apply(const Vector& dtheta) const {
        if (dtheta.size() != cm_.p) throw DimensionMismatch("jacobian apply: wrong length");
        switch (cm_.kind) {
            case CostKind::Additive:
            case CostKind::Identity: return dtheta;
            case CostKind::Hadamard: return u_.cwiseProduct(dtheta);
            case CostKind::MatrixProduct: {
                Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                              Eigen::RowMajor>>
                    mat(dtheta.data(), cm_.d, cm_.m);
                return mat * u_;
            }
        }
        return {};
    }

    /// A(u)^T * r; for matrix parameters this is the row-major flattening of r u^T.
    Vector apply_transpose(const Vector& r) const {
        if (r.size() != cm_.d) throw DimensionMismatch("jacobian transpose: wrong length");
        switch (cm_.kind) {
            case CostKind::Additive:
            case CostKind::Identity: return r;
            case CostKind::Hadamard: return u_.cwiseProduct(r);
            case CostKind::MatrixProduct: {
                Vector out(cm_.p);
                for (Index k = 0; k < cm_.d; ++k) out.segment(k * cm_.m, cm_.m) = r[k] * u_;
                return out;
            }
        }
        return {};
    }

    Eigen::MatrixXd dense() const {
        Eigen::MatrixXd j(cm_.d, cm_.p);
        for (Index c = 0; c < cm_.p; ++c) j.col(c) = apply(Vector::Unit(cm_.p, c));
        return j;
    }

private:
    CostMap cm_;
    Vector u_;
};

inline CostJacobian cost_jacobian(const CostMap& cm, const Vector& u) { return {cm, u}; }

// ---------------------------------------------------------------------------
// Feasible regions

struct Box {
    Vector lo;
    Vector hi;
};

struct Ball {
    double radius;
};

/// {x >= 0, sum(x) <= cap}
struct NonNegL1Cap {
    double cap;
};

/// Convex hull of unit source-sink path flows of a graph.
struct FlowPolytope {
    std::shared_ptr<const Graph> graph;
};

using FeasibleRegion = std::variant<Box, Ball, NonNegL1Cap, FlowPolytope>;

inline Box make_box(Index d, double lo, double hi) {
    return Box{Vector::Constant(d, lo), Vector::Constant(d, hi)};
}

inline void validate_region(const FeasibleRegion& region, Index d) {
    std::visit(
        [d](const auto& r) {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Box>) {
                if (r.lo.size() != d || r.hi.size() != d)
                    throw DimensionMismatch("box bounds do not match decision length");
                if ((r.lo.array() > r.hi.array()).any())
                    throw InvalidArgument("box requires lo <= hi");
            } else if constexpr (std::is_same_v<T, Ball>) {
                if (!(r.radius > 0.0)) throw InvalidArgument("ball radius must be positive");
            } else if constexpr (std::is_same_v<T, NonNegL1Cap>) {
                if (!(r.cap > 0.0)) throw InvalidArgument("l1 cap must be positive");
            } else {
                if (!r.graph) throw InvalidArgument("flow polytope without a graph");
                if (static_cast<Index>(r.graph->num_edges()) != d)
                    throw DimensionMismatch("edge count does not match decision length");
            }
        },
        region);
}

/// Membership test with an absolute tolerance.
inline bool contains(const FeasibleRegion& region, const Vector& x, double tol = 1e-9) {
    return std::visit(
        [&](const auto& r) -> bool {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Box>) {
                return ((x.array() >= r.lo.array() - tol) && (x.array() <= r.hi.array() + tol)).all();
            } else if constexpr (std::is_same_v<T, Ball>) {
                return x.norm() <= r.radius + tol;
            } else if constexpr (std::is_same_v<T, NonNegL1Cap>) {
                return (x.array() >= -tol).all() && x.sum() <= r.cap + tol;
            } else {
                if ((x.array() < -tol).any() || (x.array() > 1.0 + tol).any()) return false;
                Vector residual = r.graph->incidence() * x - r.graph->supply();
                return residual.cwiseAbs().maxCoeff() <= tol;
            }
        },
        region);
}

inline std::string region_name(const FeasibleRegion& region) {
    static const char* names[] = {"box", "ball", "nonneg_l1cap", "flow_polytope"};
    return names[region.index()];
}

// ---------------------------------------------------------------------------

enum class Sense { Min, Max };

struct ForwardProblem {
    CostMap cost_map;
    FeasibleRegion region;
    Sense sense = Sense::Min;
    double base_quad = 0.0;  // q in the canonical objective

    ForwardProblem(CostMap cm, FeasibleRegion reg, Sense s, double q = 0.0)
        : cost_map(cm), region(std::move(reg)), sense(s), base_quad(q) {
        cost_map.validate();
        validate_region(region, cost_map.d);
        if (!(base_quad >= 0.0) || !std::isfinite(base_quad))
            throw InvalidArgument("base_quad must be finite and nonnegative");
    }

    Index dim() const { return cost_map.d; }
    double sign() const { return sense == Sense::Max ? 1.0 : -1.0; }

    /// h_c(theta; u), the cost of the canonical maximization.
    Vector canonical_cost(const Vector& theta, const Vector& u) const {
        return sign() * cost(cost_map, theta, u);
    }
    Vector canonical_cost(const Parameter& theta, const Vector& u) const {
        return canonical_cost(theta.values, u);
    }
    /// Folds the sense into a raw cost vector h.
    Vector canonicalize(const Vector& h) const { return sign() * h; }

    /// Unregularized canonical objective h_c^T x - (q/2)||x||^2.
    double objective(const Vector& hc, const Vector& x) const {
        return hc.dot(x) - 0.5 * base_quad * x.squaredNorm();
    }
};

// ---------------------------------------------------------------------------
// Data

struct DataPoint {
    Vector u;
    Vector y;
};

struct Dataset {
    std::vector<DataPoint> points;
    Index m = 0;
    Index d = 0;
    std::optional<Parameter> truth;

    Dataset() = default;
    Dataset(std::vector<DataPoint> pts, Index m_, Index d_, std::optional<Parameter> t = std::nullopt)
        : points(std::move(pts)), m(m_), d(d_), truth(std::move(t)) {
        for (const DataPoint& pt : points) {
            if (pt.u.size() != m || pt.y.size() != d)
                throw DimensionMismatch("data point dimensions differ from the dataset");
        }
    }

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }

    Dataset subset(const std::vector<std::size_t>& idx) const {
        std::vector<DataPoint> pts;
        pts.reserve(idx.size());
        for (std::size_t i : idx) pts.push_back(points.at(i));
        return Dataset(std::move(pts), m, d, truth);
    }
};

struct NoisyDecision {
    double sigma = 1.0;
};
struct NoisyObjective {
    double sigma = 1.0;
};
struct Noiseless {};

using NoiseModel = std::variant<NoisyDecision, NoisyObjective, Noiseless>;

inline std::string noise_name(const NoiseModel& noise) {
    static const char* names[] = {"noisy_decision", "noisy_objective", "noiseless"};
    return names[noise.index()];
}

/// A context together with the realized cost vector observed alongside it
/// (edge travel times in the shortest-path pipeline).
struct TravelRecord {
    Vector u;
    Vector times;
};

/// Contexts drawn iid Uniform(lo, hi) in every coordinate.
struct ContextDistribution {
    Index m = 0;
    double lo = -1.0;
    double hi = 1.0;
};

}  // namespace fyio

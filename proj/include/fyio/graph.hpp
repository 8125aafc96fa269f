#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fyio/error.hpp"

namespace fyio {

struct Edge {
    std::size_t tail;
    std::size_t head;
};

/// Directed graph with a designated source and sink carrying one unit of flow.
///
/// Edge k is column k of the incidence matrix (+1 at its tail, -1 at its
/// head); the supply vector is +1 at the source and -1 at the sink, so a unit
/// source-sink path flow x satisfies incidence() * x == supply().
class Graph {
public:
    Graph(std::size_t num_nodes, std::vector<Edge> edges, std::size_t source, std::size_t sink,
          std::vector<std::string> node_names = {})
        : num_nodes_(num_nodes),
          edges_(std::move(edges)),
          source_(source),
          sink_(sink),
          names_(std::move(node_names)) {
        if (source_ >= num_nodes_ || sink_ >= num_nodes_)
            throw InvalidArgument("source/sink out of range");
        if (source_ == sink_) throw InvalidArgument("source and sink must differ");
        for (const Edge& e : edges_) {
            if (e.tail >= num_nodes_ || e.head >= num_nodes_)
                throw InvalidArgument("edge endpoint out of range");
            if (e.tail == e.head) throw InvalidArgument("self-loop edges are not allowed");
        }
        if (!names_.empty() && names_.size() != num_nodes_)
            throw InvalidArgument("node name count does not match node count");
        if (!sink_reachable()) throw Unreachable();
    }

    std::size_t num_nodes() const { return num_nodes_; }
    std::size_t num_edges() const { return edges_.size(); }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(std::size_t k) const { return edges_[k]; }
    std::size_t source() const { return source_; }
    std::size_t sink() const { return sink_; }

    std::string node_name(std::size_t v) const {
        return names_.empty() ? std::to_string(v) : names_[v];
    }

    Eigen::MatrixXd incidence() const {
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(num_nodes_),
                                                  static_cast<Eigen::Index>(edges_.size()));
        for (std::size_t k = 0; k < edges_.size(); ++k) {
            a(static_cast<Eigen::Index>(edges_[k].tail), static_cast<Eigen::Index>(k)) = 1.0;
            a(static_cast<Eigen::Index>(edges_[k].head), static_cast<Eigen::Index>(k)) = -1.0;
        }
        return a;
    }

    Eigen::VectorXd supply() const {
        Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_nodes_));
        b[static_cast<Eigen::Index>(source_)] = 1.0;
        b[static_cast<Eigen::Index>(sink_)] = -1.0;
        return b;
    }

private:
    bool sink_reachable() const {
        std::vector<char> seen(num_nodes_, 0);
        std::vector<std::size_t> stack{source_};
        seen[source_] = 1;
        while (!stack.empty()) {
            std::size_t v = stack.back();
            stack.pop_back();
            for (const Edge& e : edges_) {
                if (e.tail == v && !seen[e.head]) {
                    seen[e.head] = 1;
                    stack.push_back(e.head);
                }
            }
        }
        return seen[sink_] != 0;
    }

    std::size_t num_nodes_;
    std::vector<Edge> edges_;
    std::size_t source_;
    std::size_t sink_;
    std::vector<std::string> names_;
};

}  // namespace fyio

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace mplx {

using NodeIds = std::vector<std::string>;

// Raised for malformed or inconsistent inputs; the CLI maps it to exit code 1.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Edge = std::pair<std::size_t, std::size_t>;

// One interaction channel over a fixed, ordered node set. Binary adjacency,
// no self-ties; undirected layers are kept symmetric.
class Layer {
public:
    Layer(std::string name, bool directed, NodeIds node_ids);
    Layer(std::string name, bool directed, NodeIds node_ids,
          std::span<const Edge> edges);

    const std::string& name() const { return name_; }
    bool directed() const { return directed_; }
    const NodeIds& node_ids() const { return node_ids_; }
    std::size_t size() const { return node_ids_.size(); }

    bool has_edge(std::size_t i, std::size_t j) const { return adj_[i * size() + j] != 0; }
    // Edge in either direction.
    bool connected(std::size_t i, std::size_t j) const {
        return has_edge(i, j) || has_edge(j, i);
    }

    void add_edge(std::size_t i, std::size_t j);

    // Directed layers: all (i,j) with a_ij = 1. Undirected: i < j only.
    std::vector<Edge> edges() const;
    std::size_t edge_count() const;
    // Nodes with at least one incident edge.
    std::size_t active_node_count() const;
    std::size_t out_degree(std::size_t i) const;
    std::size_t in_degree(std::size_t i) const;

    // Undirected copy with an edge wherever either direction is present.
    Layer symmetrized() const;
    Layer renamed(std::string name) const;

    // Same node ids and the same undirected edge set.
    bool same_edges(const Layer& other) const;

    friend bool operator==(const Layer&, const Layer&) = default;

private:
    std::string name_;
    bool directed_;
    NodeIds node_ids_;
    std::vector<std::uint8_t> adj_;
};

class MultiplexGraph {
public:
    MultiplexGraph(NodeIds node_ids, std::vector<Layer> layers);

    const NodeIds& node_ids() const { return node_ids_; }
    const std::vector<Layer>& layers() const { return layers_; }
    std::size_t size() const { return node_ids_.size(); }
    std::size_t layer_count() const { return layers_.size(); }

    const Layer& layer(const std::string& name) const;
    std::vector<std::string> layer_names() const;
    std::optional<std::size_t> index_of(const std::string& node_id) const;

    MultiplexGraph symmetrized() const;

    friend bool operator==(const MultiplexGraph&, const MultiplexGraph&) = default;

private:
    NodeIds node_ids_;
    std::vector<Layer> layers_;
};

enum class MatrixKind { multiplex_weight, similarity, distance };

std::string to_string(MatrixKind kind);

// Dense N x N real matrix over a node ordering. Undefined entries (similarity
// only) are stored as NaN.
class WeightedMatrix {
public:
    WeightedMatrix(MatrixKind kind, NodeIds node_ids, double fill = 0.0);

    MatrixKind kind() const { return kind_; }
    const NodeIds& node_ids() const { return node_ids_; }
    std::size_t size() const { return node_ids_.size(); }

    double operator()(std::size_t i, std::size_t j) const { return values_[i * size() + j]; }
    double& operator()(std::size_t i, std::size_t j) { return values_[i * size() + j]; }
    bool defined(std::size_t i, std::size_t j) const;

    std::span<const double> row(std::size_t i) const {
        return {values_.data() + i * size(), size()};
    }
    std::span<const double> values() const { return values_; }

    bool symmetric() const;

private:
    MatrixKind kind_;
    NodeIds node_ids_;
    std::vector<double> values_;
};

// Aggregations operate on symmetrized copies of the selected layers; the
// result is always undirected.
Layer union_of(const MultiplexGraph& m, const std::vector<std::string>& layer_subset);
Layer intersection_of(const MultiplexGraph& m, const std::vector<std::string>& layer_subset);
// Edges of `layer` that appear on no other layer.
Layer exclusive_edges(const MultiplexGraph& m, const std::string& layer);

// Fraction of layers on which the directed pair (i, j) is connected.
double multiplex_weight(const MultiplexGraph& m, std::size_t i, std::size_t j);
WeightedMatrix weight_matrix(const MultiplexGraph& m);

// Edge-length scale that keeps single-layer edges at length 0.2.
double default_distance_scale(std::size_t layer_count);

// Shortest paths over edge lengths scale * (1 - mw) for mw > 0, clamped to
// 1.0; unreachable pairs are 1.0. Runs one Dijkstra per source, fanned out
// over `threads` workers (0 = hardware concurrency).
WeightedMatrix distance_matrix(const WeightedMatrix& weights, double scale,
                               unsigned threads = 1);

nlohmann::json to_json(const MultiplexGraph& m);
MultiplexGraph multiplex_from_json(const nlohmann::json& doc);

inline constexpr int kMultiplexFormatVersion = 1;

}  // namespace mplx

#include "mplx/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "mplx/parallel.hpp"

namespace mplx {

namespace {

void check_node_ids(const NodeIds& ids) {
    std::set<std::string> seen;
    for (const auto& id : ids) {
        if (id.empty()) throw InputError("empty node id");
        if (!seen.insert(id).second) throw InputError(fmt::format("duplicate node id '{}'", id));
    }
}

std::vector<const Layer*> select_layers(const MultiplexGraph& m,
                                        const std::vector<std::string>& subset) {
    if (subset.empty()) throw InputError("layer subset is empty");
    std::vector<std::string> names = subset;
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    std::vector<const Layer*> out;
    for (const auto& name : names) out.push_back(&m.layer(name));
    return out;
}

std::string join_names(const std::vector<std::string>& subset, const char* op) {
    std::vector<std::string> names = subset;
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    std::string out;
    for (const auto& n : names) {
        if (!out.empty()) out += op;
        out += n;
    }
    return out;
}

}  // namespace

// --- Layer -------------------------------------------------------------------

Layer::Layer(std::string name, bool directed, NodeIds node_ids)
    : name_(std::move(name)),
      directed_(directed),
      node_ids_(std::move(node_ids)),
      adj_(node_ids_.size() * node_ids_.size(), 0) {
    if (name_.empty()) throw InputError("layer name is empty");
}

Layer::Layer(std::string name, bool directed, NodeIds node_ids, std::span<const Edge> edges)
    : Layer(std::move(name), directed, std::move(node_ids)) {
    for (const auto& [i, j] : edges) add_edge(i, j);
}

void Layer::add_edge(std::size_t i, std::size_t j) {
    const std::size_t n = size();
    if (i >= n || j >= n)
        throw InputError(fmt::format("layer '{}': edge ({}, {}) outside {} nodes", name_, i, j, n));
    if (i == j) throw InputError(fmt::format("layer '{}': self-tie on node {}", name_, i));
    adj_[i * n + j] = 1;
    if (!directed_) adj_[j * n + i] = 1;
}

std::vector<Edge> Layer::edges() const {
    std::vector<Edge> out;
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = directed_ ? 0 : i + 1; j < n; ++j)
            if (has_edge(i, j)) out.emplace_back(i, j);
    return out;
}

std::size_t Layer::edge_count() const {
    const auto total = static_cast<std::size_t>(std::count(adj_.begin(), adj_.end(), 1));
    return directed_ ? total : total / 2;
}

std::size_t Layer::active_node_count() const {
    std::size_t active = 0;
    for (std::size_t i = 0; i < size(); ++i)
        if (out_degree(i) + in_degree(i) > 0) ++active;
    return active;
}

std::size_t Layer::out_degree(std::size_t i) const {
    std::size_t d = 0;
    for (std::size_t j = 0; j < size(); ++j) d += adj_[i * size() + j];
    return d;
}

std::size_t Layer::in_degree(std::size_t i) const {
    std::size_t d = 0;
    for (std::size_t j = 0; j < size(); ++j) d += adj_[j * size() + i];
    return d;
}

Layer Layer::symmetrized() const {
    Layer out(name_, false, node_ids_);
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (adj_[i * n + j]) out.add_edge(i, j);
    return out;
}

Layer Layer::renamed(std::string name) const {
    Layer out = *this;
    out.name_ = std::move(name);
    return out;
}

bool Layer::same_edges(const Layer& other) const {
    if (node_ids_ != other.node_ids_) return false;
    for (std::size_t i = 0; i < size(); ++i)
        for (std::size_t j = i + 1; j < size(); ++j)
            if (connected(i, j) != other.connected(i, j)) return false;
    return true;
}

// --- MultiplexGraph ----------------------------------------------------------

MultiplexGraph::MultiplexGraph(NodeIds node_ids, std::vector<Layer> layers)
    : node_ids_(std::move(node_ids)), layers_(std::move(layers)) {
    check_node_ids(node_ids_);
    if (layers_.empty()) throw InputError("multiplex needs at least one layer");
    std::set<std::string> names;
    for (const auto& layer : layers_) {
        if (!names.insert(layer.name()).second)
            throw InputError(fmt::format("duplicate layer name '{}'", layer.name()));
        if (layer.node_ids() != node_ids_)
            throw InputError(fmt::format("layer '{}' does not share the multiplex node ordering",
                                         layer.name()));
    }
}

const Layer& MultiplexGraph::layer(const std::string& name) const {
    for (const auto& l : layers_)
        if (l.name() == name) return l;
    throw InputError(fmt::format("unknown layer '{}'", name));
}

std::vector<std::string> MultiplexGraph::layer_names() const {
    std::vector<std::string> out;
    for (const auto& l : layers_) out.push_back(l.name());
    return out;
}

std::optional<std::size_t> MultiplexGraph::index_of(const std::string& node_id) const {
    auto it = std::find(node_ids_.begin(), node_ids_.end(), node_id);
    if (it == node_ids_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - node_ids_.begin());
}

MultiplexGraph MultiplexGraph::symmetrized() const {
    std::vector<Layer> layers;
    for (const auto& l : layers_) layers.push_back(l.symmetrized());
    return {node_ids_, std::move(layers)};
}

// --- WeightedMatrix ----------------------------------------------------------

std::string to_string(MatrixKind kind) {
    switch (kind) {
        case MatrixKind::multiplex_weight: return "multiplex_weight";
        case MatrixKind::similarity: return "similarity";
        case MatrixKind::distance: return "distance";
    }
    return "unknown";
}

WeightedMatrix::WeightedMatrix(MatrixKind kind, NodeIds node_ids, double fill)
    : kind_(kind), node_ids_(std::move(node_ids)), values_(node_ids_.size() * node_ids_.size(), fill) {}

bool WeightedMatrix::defined(std::size_t i, std::size_t j) const {
    return !std::isnan((*this)(i, j));
}

bool WeightedMatrix::symmetric() const {
    for (std::size_t i = 0; i < size(); ++i)
        for (std::size_t j = i + 1; j < size(); ++j) {
            const double a = (*this)(i, j), b = (*this)(j, i);
            if (std::isnan(a) != std::isnan(b)) return false;
            if (!std::isnan(a) && a != b) return false;
        }
    return true;
}

// --- aggregations ------------------------------------------------------------

Layer union_of(const MultiplexGraph& m, const std::vector<std::string>& layer_subset) {
    const auto layers = select_layers(m, layer_subset);
    Layer out(join_names(layer_subset, "|"), false, m.node_ids());
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = i + 1; j < m.size(); ++j)
            if (std::any_of(layers.begin(), layers.end(),
                            [&](const Layer* l) { return l->connected(i, j); }))
                out.add_edge(i, j);
    return out;
}

Layer intersection_of(const MultiplexGraph& m, const std::vector<std::string>& layer_subset) {
    const auto layers = select_layers(m, layer_subset);
    Layer out(join_names(layer_subset, "&"), false, m.node_ids());
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = i + 1; j < m.size(); ++j)
            if (std::all_of(layers.begin(), layers.end(),
                            [&](const Layer* l) { return l->connected(i, j); }))
                out.add_edge(i, j);
    return out;
}

Layer exclusive_edges(const MultiplexGraph& m, const std::string& layer) {
    const Layer& base = m.layer(layer);
    Layer out(layer + "_only", false, m.node_ids());
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = i + 1; j < m.size(); ++j) {
            if (!base.connected(i, j)) continue;
            const bool elsewhere = std::any_of(
                m.layers().begin(), m.layers().end(),
                [&](const Layer& l) { return l.name() != layer && l.connected(i, j); });
            if (!elsewhere) out.add_edge(i, j);
        }
    return out;
}

// --- multiplex weight and distance -------------------------------------------

double multiplex_weight(const MultiplexGraph& m, std::size_t i, std::size_t j) {
    if (i >= m.size() || j >= m.size())
        throw InputError(fmt::format("node pair ({}, {}) outside {} nodes", i, j, m.size()));
    if (i == j) throw InputError("multiplex weight of a self-tie is undefined");
    std::size_t present = 0;
    for (const auto& l : m.layers()) present += l.has_edge(i, j) ? 1 : 0;
    return static_cast<double>(present) / static_cast<double>(m.layer_count());
}

WeightedMatrix weight_matrix(const MultiplexGraph& m) {
    WeightedMatrix w(MatrixKind::multiplex_weight, m.node_ids());
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j)
            if (i != j) w(i, j) = multiplex_weight(m, i, j);
    return w;
}

double default_distance_scale(std::size_t layer_count) {
    if (layer_count == 0) throw InputError("layer count must be positive");
    // With one layer every edge has mw = 1 and length 0, so the scale is moot.
    if (layer_count == 1) return 0.1;
    const double m = static_cast<double>(layer_count);
    return 0.2 * m / (m - 1.0);
}

WeightedMatrix distance_matrix(const WeightedMatrix& weights, double scale, unsigned threads) {
    if (weights.kind() != MatrixKind::multiplex_weight)
        throw InputError("distance_matrix expects a multiplex-weight matrix");
    if (!(scale >= 0.0)) throw InputError("distance scale must be non-negative");
    const std::size_t n = weights.size();
    for (double v : weights.values())
        if (!(v >= 0.0 && v <= 1.0)) throw InputError("multiplex weights must lie in [0, 1]");

    WeightedMatrix dist(MatrixKind::distance, weights.node_ids(), 1.0);
    constexpr double inf = std::numeric_limits<double>::infinity();

    parallel_for(n, threads, [&](std::size_t source) {
        std::vector<double> best(n, inf);
        std::vector<bool> settled(n, false);
        best[source] = 0.0;
        for (std::size_t step = 0; step < n; ++step) {
            std::size_t u = n;
            for (std::size_t v = 0; v < n; ++v)
                if (!settled[v] && best[v] < inf && (u == n || best[v] < best[u])) u = v;
            if (u == n) break;
            settled[u] = true;
            for (std::size_t v = 0; v < n; ++v) {
                const double mw = weights(u, v);
                if (v == u || settled[v] || mw <= 0.0) continue;
                const double candidate = best[u] + scale * (1.0 - mw);
                if (candidate < best[v]) best[v] = candidate;
            }
        }
        for (std::size_t v = 0; v < n; ++v) dist(source, v) = std::min(1.0, best[v]);
    });
    // Path sums accumulated from opposite ends can differ in the last bit.
    if (weights.symmetric())
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                dist(i, j) = dist(j, i) = std::min(dist(i, j), dist(j, i));
    return dist;
}

// --- serialization -----------------------------------------------------------

nlohmann::json to_json(const MultiplexGraph& m) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : m.layers()) {
        nlohmann::json edges = nlohmann::json::array();
        for (const auto& [i, j] : l.edges()) edges.push_back({i, j});
        layers.push_back({{"name", l.name()}, {"directed", l.directed()}, {"edges", std::move(edges)}});
    }
    return {{"version", kMultiplexFormatVersion}, {"node_ids", m.node_ids()}, {"layers", std::move(layers)}};
}

MultiplexGraph multiplex_from_json(const nlohmann::json& doc) {
    try {
        const int version = doc.at("version").get<int>();
        if (version != kMultiplexFormatVersion)
            throw InputError(fmt::format("unsupported multiplex format version {}", version));
        auto ids = doc.at("node_ids").get<NodeIds>();
        std::vector<Layer> layers;
        for (const auto& l : doc.at("layers")) {
            Layer layer(l.at("name").get<std::string>(), l.at("directed").get<bool>(), ids);
            for (const auto& e : l.at("edges")) {
                if (!e.is_array() || e.size() != 2) throw InputError("edge must be a pair of indices");
                layer.add_edge(e[0].get<std::size_t>(), e[1].get<std::size_t>());
            }
            layers.push_back(std::move(layer));
        }
        return {std::move(ids), std::move(layers)};
    } catch (const nlohmann::json::exception& e) {
        throw InputError(fmt::format("malformed multiplex document: {}", e.what()));
    }
}

}  // namespace mplx

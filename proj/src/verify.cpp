#include "mplx/verify.hpp"

#include <cmath>

#include <fmt/format.h>

namespace mplx {

namespace {

std::optional<double> lookup(const nlohmann::json& doc, const std::vector<std::string>& path) {
    const nlohmann::json* node = &doc;
    for (const auto& key : path) {
        if (!node->is_object() || !node->contains(key)) return std::nullopt;
        node = &(*node)[key];
    }
    if (!node->is_number()) return std::nullopt;
    return node->get<double>();
}

std::optional<double> layer_field(const nlohmann::json& summary, const std::string& layer, const char* field) {
    if (!summary.contains("layers")) return std::nullopt;
    for (const auto& l : summary["layers"])
        if (l.value("name", "") == layer && l.contains(field) && l[field].is_number()) return l[field].get<double>();
    return std::nullopt;
}

std::optional<double> pmf_probability(const nlohmann::json& summary, const std::string& aggregation,
                                      const std::string& label) {
    if (!summary.contains("pmf")) return std::nullopt;
    for (const auto& p : summary["pmf"])
        if (p.value("aggregation", "") == aggregation) return lookup(p, {"probabilities", label});
    return std::nullopt;
}

Check compare(std::string name, double expected, double tolerance, std::optional<double> observed) {
    Check c{std::move(name), expected, tolerance, observed, false, {}};
    if (!observed) {
        c.note = "missing from summary";
    } else if (tolerance == 0.0) {
        c.passed = *observed == expected;
    } else {
        c.passed = std::abs(*observed - expected) <= tolerance + 1e-12;
    }
    return c;
}

}  // namespace

std::vector<Check> verify_reference(const nlohmann::json& summary) {
    std::vector<Check> out;
    const struct {
        const char* layer;
        double nodes, edges;
    } layers[] = {{"calls", 69, 401}, {"sms", 33, 70}, {"proximity", 74, 4526}};
    for (const auto& l : layers) {
        out.push_back(compare(fmt::format("layer {} nodes", l.layer), l.nodes, 0, layer_field(summary, l.layer, "nodes")));
        out.push_back(compare(fmt::format("layer {} edges", l.layer), l.edges, 0, layer_field(summary, l.layer, "edges")));
    }
    const std::pair<const char*, double> labels[] = {
        {"None", 2179}, {"FBOnly", 1299}, {"Socialize", 586}, {"CloseFriend", 462}};
    for (const auto& [label, count] : labels)
        out.push_back(compare(fmt::format("label count {}", label), count, 0,
                              lookup(summary, {"label_counts", "connected_pairs", label})));
    out.push_back(compare("sms-calls overlap", 0.92, 0.01, lookup(summary, {"overlap", "sms_calls_overlap"})));
    out.push_back(compare("intersection_all P(CloseFriend)", 0.75, 0.05,
                          pmf_probability(summary, "intersection_all", "CloseFriend")));
    const std::pair<const char*, double> corr[] = {
        {"political", 0.6}, {"music", 0.49}, {"health", 0.6}, {"situational", 0.56}};
    for (const auto& [cat, value] : corr)
        out.push_back(compare(fmt::format("graph correlation {}", cat), value, 0.05,
                              lookup(summary, {"correlation", cat, "graph_correlation"})));
    const std::pair<const char*, double> rho[] = {
        {"political", 0.78}, {"health", 0.79}, {"music", 0.81}, {"situational", 0.73}};
    for (const auto& [cat, value] : rho)
        out.push_back(compare(fmt::format("spearman {}", cat), value, 0.05,
                              lookup(summary, {"correlation", cat, "spearman_rho"})));
    return out;
}

std::string format_check(const Check& c) {
    const std::string observed = c.observed ? fmt::format("{:.4g}", *c.observed) : "n/a";
    const std::string expected =
        c.tolerance == 0.0 ? fmt::format("{:g}", c.expected) : fmt::format("{:g} ± {:g}", c.expected, c.tolerance);
    return fmt::format("{} {}: observed {}, expected {}{}", c.passed ? "PASS" : "FAIL", c.name, observed, expected,
                       c.note.empty() ? "" : " (" + c.note + ")");
}

nlohmann::json to_json(const Check& c) {
    return {{"name", c.name},
            {"expected", c.expected},
            {"tolerance", c.tolerance},
            {"observed", c.observed ? nlohmann::json(*c.observed) : nlohmann::json(nullptr)},
            {"passed", c.passed},
            {"note", c.note}};
}

}  // namespace mplx

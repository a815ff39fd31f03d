#include "mplx/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "mplx/csv.hpp"
#include "mplx/parallel.hpp"
#include "mplx/random.hpp"

namespace mplx {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Bin-edge slack so that path sums like 0.1 + 0.2 land in the (0.2, 0.3] bin.
constexpr double kEdgeSlack = 1e-9;

void require_same_shape(const WeightedMatrix& a, const WeightedMatrix& b) {
    if (a.node_ids() != b.node_ids())
        throw InputError("matrices must share the same node ordering");
}

nlohmann::json number_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
        syy += (y[k] - my) * (y[k] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

// Weighted degrees are sums of k/M terms; summation order can move them by an
// ulp, which must not split a tie.
bool same_value(double x, double y) {
    return std::abs(x - y) <= 1e-12 * std::max(1.0, std::max(std::abs(x), std::abs(y)));
}

std::string bin_label(const std::vector<double>& edges, std::size_t k) {
    return fmt::format("{}{},{}]", k == 0 ? "[" : "(", format_number(edges[k]),
                       format_number(edges[k + 1]));
}

std::size_t locate(const std::vector<double>& edges, double v) {
    for (std::size_t k = 0; k + 1 < edges.size(); ++k)
        if (v <= edges[k + 1] + kEdgeSlack) return k;
    return edges.size() - 2;
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "";
    return fmt::format("{}", v);
}

// --- PMFs ----------------------------------------------------------------------

PairMode parse_pair_mode(const std::string& name) {
    if (name == "directed") return PairMode::directed;
    if (name == "unordered") return PairMode::unordered;
    throw InputError(fmt::format("unknown pair mode '{}'", name));
}

std::string to_string(PairMode mode) { return mode == PairMode::directed ? "directed" : "unordered"; }

double RelationshipPMF::probability(Label l) const {
    if (support_count == 0) return kNaN;
    return static_cast<double>(counts[static_cast<std::size_t>(l)]) /
           static_cast<double>(support_count);
}

RelationshipPMF relationship_pmf(const Layer& aggregation, const LabelMap& labels, PairMode mode) {
    if (aggregation.node_ids() != labels.node_ids())
        throw InputError("aggregation and labels must share the roster");
    RelationshipPMF pmf;
    pmf.aggregation = aggregation.name();
    const std::size_t n = aggregation.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!aggregation.connected(i, j)) continue;
            if (mode == PairMode::directed) {
                ++pmf.counts[static_cast<std::size_t>(labels(i, j))];
                ++pmf.counts[static_cast<std::size_t>(labels(j, i))];
                pmf.support_count += 2;
            } else {
                ++pmf.counts[static_cast<std::size_t>(std::max(labels(i, j), labels(j, i)))];
                ++pmf.support_count;
            }
        }
    return pmf;
}

// --- correlation --------------------------------------------------------------------

CorrelationMode parse_correlation_mode(const std::string& name) {
    if (name == "product_over_sums") return CorrelationMode::product_over_sums;
    if (name == "cosine") return CorrelationMode::cosine;
    throw InputError(fmt::format("unknown correlation mode '{}'", name));
}

std::string to_string(CorrelationMode mode) {
    return mode == CorrelationMode::product_over_sums ? "product_over_sums" : "cosine";
}

std::optional<double> node_correlation(const WeightedMatrix& a, const WeightedMatrix& b,
                                       std::size_t i, const CorrelationOptions& options) {
    require_same_shape(a, b);
    if (i >= a.size()) throw InputError(fmt::format("node {} outside {} nodes", i, a.size()));
    double num = 0.0, sa = 0.0, sb = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (j == i) continue;
        const double wa = a(i, j), wb = b(i, j);
        if (std::isnan(wa) || std::isnan(wb)) continue;
        if (options.mask_to_support && !(wa > 0.0)) continue;
        num += wa * wb;
        if (options.mode == CorrelationMode::product_over_sums) {
            sa += wa;
            sb += wb;
        } else {
            sa += wa * wa;
            sb += wb * wb;
        }
    }
    if (!(sa > 0.0) || !(sb > 0.0)) return std::nullopt;
    return num / std::sqrt(sa * sb);
}

GraphCorrelation graph_correlation(const WeightedMatrix& a, const WeightedMatrix& b,
                                   const CorrelationOptions& options) {
    require_same_shape(a, b);
    GraphCorrelation out;
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (auto c = node_correlation(a, b, i, options)) {
            sum += *c;
            ++out.defined_nodes;
        } else {
            out.excluded.push_back(a.node_ids()[i]);
        }
    }
    if (out.defined_nodes == 0) throw InputError("graph correlation undefined: no node has both row sums positive");
    out.value = sum / static_cast<double>(out.defined_nodes);
    return out;
}

PermutationTest significance(const WeightedMatrix& a, const WeightedMatrix& b, std::size_t n_perm,
                             std::uint64_t seed, const CorrelationOptions& options, unsigned threads) {
    if (n_perm < 100) throw InputError("significance needs at least 100 permutations");
    const double observed = graph_correlation(a, b, options).value;
    const std::size_t n = b.size();
    const Rng root(seed);

    std::vector<double> null(n_perm, kNaN);
    parallel_for(n_perm, threads, [&](std::size_t k) {
        Rng rng = root.split("permutation", k);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        rng.shuffle(perm);
        WeightedMatrix shuffled(b.kind(), b.node_ids());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) shuffled(i, j) = b(perm[i], perm[j]);
        try {
            null[k] = graph_correlation(a, shuffled, options).value;
        } catch (const InputError&) {
            // No defined node under this relabelling; leave NaN.
        }
    });

    PermutationTest out;
    out.observed = observed;
    out.permutations = n_perm;
    std::size_t at_least = 0, defined = 0;
    double sum = 0.0;
    for (double v : null) {
        if (std::isnan(v)) continue;
        ++defined;
        sum += v;
        if (v >= observed - 1e-12) ++at_least;
    }
    out.p_value = static_cast<double>(at_least) / static_cast<double>(n_perm);
    if (defined > 0) {
        out.null_mean = sum / static_cast<double>(defined);
        double ss = 0.0;
        for (double v : null)
            if (!std::isnan(v)) ss += (v - out.null_mean) * (v - out.null_mean);
        out.null_sd = defined > 1 ? std::sqrt(ss / static_cast<double>(defined - 1)) : 0.0;
    }
    return out;
}

// --- Spearman --------------------------------------------------------------------------

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
    std::vector<double> ranks(values.size());
    for (std::size_t start = 0; start < order.size();) {
        std::size_t end = start + 1;
        while (end < order.size() && same_value(values[order[end]], values[order[start]])) ++end;
        // Positions start..end-1 (0-based) share rank mean((start+1)..end).
        const double rank = (static_cast<double>(start + 1) + static_cast<double>(end)) / 2.0;
        for (std::size_t k = start; k < end; ++k) ranks[order[k]] = rank;
        start = end;
    }
    return ranks;
}

DegreeRankCorrelation spearman_degree_rank(const WeightedMatrix& a, const WeightedMatrix& b,
                                           bool mask_to_support) {
    require_same_shape(a, b);
    const std::size_t n = a.size();
    std::vector<double> deg_a, deg_b;
    for (std::size_t i = 0; i < n; ++i) {
        bool any_b = false;
        double da = 0.0, db = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const double aij = std::isnan(a(i, j)) ? 0.0 : a(i, j);
            const double aji = std::isnan(a(j, i)) ? 0.0 : a(j, i);
            const double sym = (aij + aji) / 2.0;
            da += sym;
            if (std::isnan(b(i, j))) continue;
            any_b = true;
            if (mask_to_support && !(sym > 0.0)) continue;
            db += b(i, j);
        }
        if (!any_b) continue;
        deg_a.push_back(da);
        deg_b.push_back(db);
    }
    DegreeRankCorrelation out;
    out.nodes = deg_a.size();
    if (out.nodes < 2) return out;
    const auto constant = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [&](double x) { return same_value(x, v.front()); });
    };
    if (constant(deg_a) || constant(deg_b)) return out;
    out.rho = pearson(average_ranks(deg_a), average_ranks(deg_b));
    return out;
}

// --- conditional similarity ------------------------------------------------------------------

Binning Binning::standard() {
    Binning b;
    for (int k = 0; k <= 10; ++k) {
        b.distance_edges.push_back(k / 10.0);
        b.similarity_edges.push_back(k / 10.0);
    }
    return b;
}

void Binning::validate() const {
    for (const auto* edges : {&distance_edges, &similarity_edges}) {
        if (edges->size() < 2) throw InputError("bin edges need at least two values");
        for (std::size_t k = 1; k < edges->size(); ++k)
            if (!((*edges)[k] > (*edges)[k - 1]))
                throw InputError("bin edges must be strictly increasing");
        if (edges->front() > 0.0 || edges->back() < 1.0)
            throw InputError("bin edges must cover [0, 1]");
    }
}

ConditionalSimilarityTable conditional_similarity(const WeightedMatrix& distance,
                                                  const WeightedMatrix& similarity,
                                                  const Binning& bins, const std::string& category) {
    bins.validate();
    require_same_shape(distance, similarity);
    if (distance.kind() != MatrixKind::distance) throw InputError("expected a distance matrix");

    ConditionalSimilarityTable t;
    t.category = category;
    const std::size_t n_dist = bins.distance_edges.size() - 1 + (bins.separate_no_path ? 1 : 0);
    const std::size_t n_sim = bins.similarity_edges.size() - 1;
    for (std::size_t k = 0; k + 1 < bins.distance_edges.size(); ++k) {
        std::string label = bin_label(bins.distance_edges, k);
        // The last regular column stops short of 1.0 when no-path is separate.
        if (bins.separate_no_path && k + 2 == bins.distance_edges.size() &&
            bins.distance_edges.back() == 1.0)
            label.back() = ')';
        t.distance_labels.push_back(std::move(label));
    }
    if (bins.separate_no_path) t.distance_labels.push_back("no_path");
    for (std::size_t k = 0; k < n_sim; ++k) t.similarity_labels.push_back(bin_label(bins.similarity_edges, k));

    t.counts.assign(n_dist, std::vector<std::size_t>(n_sim, 0));
    std::vector<double> sim_sum(n_dist, 0.0);
    const std::size_t n = distance.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = similarity(i, j);
            if (std::isnan(s)) continue;
            const double d = distance(i, j);
            const std::size_t dbin = bins.separate_no_path && d >= 1.0 - kEdgeSlack
                                         ? n_dist - 1
                                         : locate(bins.distance_edges, d);
            ++t.counts[dbin][locate(bins.similarity_edges, s)];
            sim_sum[dbin] += s;
            ++t.total_pairs;
        }
    if (t.total_pairs == 0) throw InputError("conditional similarity: no pair has a defined similarity");

    t.probabilities.assign(n_dist, std::vector<double>(n_sim, kNaN));
    t.mean_similarity.assign(n_dist, kNaN);
    for (std::size_t d = 0; d < n_dist; ++d) {
        const std::size_t column = std::accumulate(t.counts[d].begin(), t.counts[d].end(), std::size_t{0});
        if (column == 0) continue;
        for (std::size_t s = 0; s < n_sim; ++s)
            t.probabilities[d][s] = static_cast<double>(t.counts[d][s]) / static_cast<double>(column);
        t.mean_similarity[d] = sim_sum[d] / static_cast<double>(column);
    }
    return t;
}

// --- diversity --------------------------------------------------------------------------

DiversityDelta diversity_delta(const LabelMap& labels, const Layer& aggregation,
                               const WeightedMatrix& similarity, std::size_t participant,
                               const std::string& category) {
    if (labels.node_ids() != aggregation.node_ids() || labels.node_ids() != similarity.node_ids())
        throw InputError("labels, aggregation and similarity must share the roster");
    if (participant >= labels.size())
        throw InputError(fmt::format("participant index {} outside roster", participant));
    DiversityDelta out;
    out.participant = labels.node_ids()[participant];
    out.category = category;
    double on = 0.0, off = 0.0;
    for (std::size_t j = 0; j < labels.size(); ++j) {
        if (j == participant) continue;
        const double s = similarity(participant, j);
        if (std::isnan(s)) continue;
        if (labels(participant, j) != Label::None) {
            on += s;
            ++out.n_online;
        } else if (aggregation.connected(participant, j)) {
            off += s;
            ++out.n_offline;
        }
    }
    if (out.n_online > 0 && out.n_offline > 0)
        out.delta = off / static_cast<double>(out.n_offline) - on / static_cast<double>(out.n_online);
    return out;
}

std::vector<DiversityDelta> diversity_deltas(const LabelMap& labels, const Layer& aggregation,
                                             const WeightedMatrix& similarity,
                                             const std::string& category) {
    std::vector<DiversityDelta> out;
    for (std::size_t i = 0; i < labels.size(); ++i)
        out.push_back(diversity_delta(labels, aggregation, similarity, i, category));
    return out;
}

FiveNumberSummary delta_distribution(std::span<const DiversityDelta> deltas,
                                     const std::string& category) {
    std::vector<double> v;
    for (const auto& d : deltas)
        if (d.category == category && d.delta) v.push_back(*d.delta);
    if (v.empty()) throw InputError(fmt::format("no defined diversity delta for '{}'", category));
    std::sort(v.begin(), v.end());
    const auto quantile = [&](double q) {
        const double h = q * static_cast<double>(v.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
    };
    FiveNumberSummary s;
    s.category = category;
    s.count = v.size();
    s.min = v.front();
    s.q1 = quantile(0.25);
    s.median = quantile(0.5);
    s.q3 = quantile(0.75);
    s.max = v.back();
    s.fraction_positive = static_cast<double>(std::count_if(v.begin(), v.end(), [](double x) { return x > 0; })) /
                          static_cast<double>(v.size());
    return s;
}

// --- serialization -----------------------------------------------------------------------

nlohmann::json to_json(const RelationshipPMF& pmf) {
    nlohmann::json probs = nlohmann::json::object(), counts = nlohmann::json::object();
    for (std::size_t k = 0; k < kLabelCount; ++k) {
        const auto label = static_cast<Label>(k);
        probs[to_string(label)] = number_or_null(pmf.probability(label));
        counts[to_string(label)] = pmf.counts[k];
    }
    return {{"aggregation", pmf.aggregation},
            {"support_count", pmf.support_count},
            {"probabilities", std::move(probs)},
            {"counts", std::move(counts)}};
}

void write_pmf_csv(std::ostream& out, std::span<const RelationshipPMF> pmfs) {
    csv::write_row(out, {"aggregation", "label", "probability", "count"});
    for (const auto& pmf : pmfs)
        for (std::size_t k = 0; k < kLabelCount; ++k) {
            const auto label = static_cast<Label>(k);
            csv::write_row(out, {pmf.aggregation, to_string(label), format_number(pmf.probability(label)),
                                 std::to_string(pmf.counts[k])});
        }
}

nlohmann::json to_json(const ConditionalSimilarityTable& t) {
    nlohmann::json probs = nlohmann::json::array(), means = nlohmann::json::array();
    for (const auto& col : t.probabilities) {
        nlohmann::json c = nlohmann::json::array();
        for (double p : col) c.push_back(number_or_null(p));
        probs.push_back(std::move(c));
    }
    for (double m : t.mean_similarity) means.push_back(number_or_null(m));
    return {{"category", t.category},
            {"distance_bins", t.distance_labels},
            {"similarity_bins", t.similarity_labels},
            {"counts", t.counts},
            {"probabilities", std::move(probs)},
            {"mean_similarity", std::move(means)},
            {"total_pairs", t.total_pairs}};
}

void write_conditional_csv(std::ostream& out, const ConditionalSimilarityTable& t) {
    std::vector<std::string> header{"similarity\\distance"};
    header.insert(header.end(), t.distance_labels.begin(), t.distance_labels.end());
    csv::write_row(out, header);
    // Highest similarity first, like a plot's y axis.
    for (std::size_t s = t.similarity_labels.size(); s-- > 0;) {
        std::vector<std::string> row{t.similarity_labels[s]};
        for (std::size_t d = 0; d < t.distance_labels.size(); ++d)
            row.push_back(format_number(t.probabilities[d][s]));
        csv::write_row(out, row);
    }
}

nlohmann::json to_json(const FiveNumberSummary& s) {
    return {{"category", s.category}, {"count", s.count},   {"min", s.min},
            {"q1", s.q1},             {"median", s.median}, {"q3", s.q3},
            {"max", s.max},           {"fraction_positive", s.fraction_positive}};
}

void write_summary_csv(std::ostream& out, std::span<const FiveNumberSummary> summaries) {
    csv::write_row(out, {"category", "count", "min", "q1", "median", "q3", "max", "fraction_positive"});
    for (const auto& s : summaries)
        csv::write_row(out, {s.category, std::to_string(s.count), format_number(s.min), format_number(s.q1),
                             format_number(s.median), format_number(s.q3), format_number(s.max),
                             format_number(s.fraction_positive)});
}

void write_deltas_csv(std::ostream& out, std::span<const DiversityDelta> deltas) {
    csv::write_row(out, {"participant", "category", "delta", "n_offline", "n_online"});
    for (const auto& d : deltas)
        csv::write_row(out, {d.participant, d.category, d.delta ? format_number(*d.delta) : "",
                             std::to_string(d.n_offline), std::to_string(d.n_online)});
}

void write_matrix_csv(std::ostream& out, const WeightedMatrix& m) {
    std::vector<std::string> header{""};
    header.insert(header.end(), m.node_ids().begin(), m.node_ids().end());
    csv::write_row(out, header);
    for (std::size_t i = 0; i < m.size(); ++i) {
        std::vector<std::string> row{m.node_ids()[i]};
        for (double v : m.row(i)) row.push_back(format_number(v));
        csv::write_row(out, row);
    }
}

}  // namespace mplx

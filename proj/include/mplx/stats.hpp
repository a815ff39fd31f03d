#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mplx/core.hpp"
#include "mplx/ingest.hpp"

namespace mplx {

// --- relationship PMFs -------------------------------------------------------------

// Directed: every ordered pair (i,j) whose undirected edge is in the
// aggregation counts once. Unordered: each edge counts once, labelled with the
// stronger of its two directed labels.
enum class PairMode { directed, unordered };

PairMode parse_pair_mode(const std::string& name);
std::string to_string(PairMode mode);

struct RelationshipPMF {
    std::string aggregation;
    std::array<std::size_t, kLabelCount> counts{};
    std::size_t support_count = 0;

    bool defined() const { return support_count > 0; }
    // NaN when the aggregation is empty.
    double probability(Label l) const;
};

RelationshipPMF relationship_pmf(const Layer& aggregation, const LabelMap& labels,
                                 PairMode mode = PairMode::directed);

// --- graph correlation ----------------------------------------------------------------

// product_over_sums: C_i = sum_j a_ij b_ij / sqrt(sum_j a_ij * sum_j b_ij).
// cosine: the same numerator over sqrt(sum_j a_ij^2 * sum_j b_ij^2).
enum class CorrelationMode { product_over_sums, cosine };

CorrelationMode parse_correlation_mode(const std::string& name);
std::string to_string(CorrelationMode mode);

struct CorrelationOptions {
    // Restrict row sums to j with a_ij > 0.
    bool mask_to_support = true;
    CorrelationMode mode = CorrelationMode::product_over_sums;
};

// Undefined (nullopt) when either row sum is zero. Pairs where either entry is
// NaN are skipped.
std::optional<double> node_correlation(const WeightedMatrix& a, const WeightedMatrix& b,
                                       std::size_t i, const CorrelationOptions& options = {});

struct GraphCorrelation {
    double value = 0.0;
    std::size_t defined_nodes = 0;
    NodeIds excluded;
};

// Mean of the defined per-node coefficients. Throws when none is defined.
GraphCorrelation graph_correlation(const WeightedMatrix& a, const WeightedMatrix& b,
                                   const CorrelationOptions& options = {});

struct PermutationTest {
    double observed = 0.0;
    double p_value = 0.0;
    double null_mean = 0.0;
    double null_sd = 0.0;
    std::size_t permutations = 0;
};

// Node-label permutation test for graph_correlation. Each permutation k draws
// from its own stream derived from (seed, k), so results do not depend on
// `threads`.
PermutationTest significance(const WeightedMatrix& a, const WeightedMatrix& b, std::size_t n_perm,
                             std::uint64_t seed, const CorrelationOptions& options = {},
                             unsigned threads = 1);

// --- degree-rank correlation --------------------------------------------------------------

// 1-based ranks; tied values (equal within 1e-12 relative) share the mean of
// their positions.
std::vector<double> average_ranks(std::span<const double> values);

struct DegreeRankCorrelation {
    std::optional<double> rho;  // nullopt when either degree vector is constant
    std::size_t nodes = 0;
};

// Spearman correlation between weighted degrees of the symmetrized `a` and of
// `b`, over nodes that have at least one defined entry in `b`. With masking,
// b's degree only sums over a's neighbours.
DegreeRankCorrelation spearman_degree_rank(const WeightedMatrix& a, const WeightedMatrix& b,
                                           bool mask_to_support = true);

// --- similarity given distance -------------------------------------------------------------

struct Binning {
    // Strictly increasing, first <= 0 and last >= 1. Bins are right-closed,
    // the first one also closed on the left.
    std::vector<double> distance_edges;
    std::vector<double> similarity_edges;
    // Distances of 1.0 (no path) get their own column.
    bool separate_no_path = true;

    static Binning standard();
    void validate() const;
};

struct ConditionalSimilarityTable {
    std::string category;
    std::vector<std::string> distance_labels;
    std::vector<std::string> similarity_labels;
    // [distance bin][similarity bin]
    std::vector<std::vector<std::size_t>> counts;
    // P(similarity bin | distance bin); NaN for empty columns.
    std::vector<std::vector<double>> probabilities;
    std::vector<double> mean_similarity;  // per distance bin, NaN if empty
    std::size_t total_pairs = 0;
};

ConditionalSimilarityTable conditional_similarity(const WeightedMatrix& distance,
                                                  const WeightedMatrix& similarity,
                                                  const Binning& bins,
                                                  const std::string& category = "");

// --- online vs offline diversity ----------------------------------------------------------------

struct DiversityDelta {
    std::string participant;
    std::string category;
    std::optional<double> delta;  // mean offline similarity - mean online similarity
    std::size_t n_offline = 0;
    std::size_t n_online = 0;
};

// Online neighbours: any declared relationship from the ego. Offline
// neighbours: connected in `aggregation` with no declared relationship. Only
// neighbours with a defined similarity count.
DiversityDelta diversity_delta(const LabelMap& labels, const Layer& aggregation,
                               const WeightedMatrix& similarity, std::size_t participant,
                               const std::string& category = "");

std::vector<DiversityDelta> diversity_deltas(const LabelMap& labels, const Layer& aggregation,
                                             const WeightedMatrix& similarity,
                                             const std::string& category);

struct FiveNumberSummary {
    std::string category;
    std::size_t count = 0;
    double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
    double fraction_positive = 0;
};

// Quartiles by linear interpolation between order statistics. Throws when no
// delta for the category is defined.
FiveNumberSummary delta_distribution(std::span<const DiversityDelta> deltas,
                                     const std::string& category);

// --- serialization --------------------------------------------------------------------

nlohmann::json to_json(const RelationshipPMF& pmf);
void write_pmf_csv(std::ostream& out, std::span<const RelationshipPMF> pmfs);

nlohmann::json to_json(const ConditionalSimilarityTable& table);
// Dense probability matrix: one row per similarity bin, one column per
// distance bin.
void write_conditional_csv(std::ostream& out, const ConditionalSimilarityTable& table);

nlohmann::json to_json(const FiveNumberSummary& summary);
void write_summary_csv(std::ostream& out, std::span<const FiveNumberSummary> summaries);
void write_deltas_csv(std::ostream& out, std::span<const DiversityDelta> deltas);

void write_matrix_csv(std::ostream& out, const WeightedMatrix& m);

// Doubles as shortest round-trip text; NaN as empty.
std::string format_number(double v);

}  // namespace mplx

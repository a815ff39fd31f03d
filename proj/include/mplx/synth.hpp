#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mplx/ingest.hpp"
#include "mplx/profiles.hpp"

namespace mplx {

struct SurveyRow {
    std::string participant;
    std::string attribute;
    std::string category;
    int survey_index;
    double value;
};

void write_surveys(std::ostream& out, std::span<const SurveyRow> rows);

// Edge probability for a layer: logistic(logit(base) + homophily * z), where z
// is the standardized similarity of the pair in the planted category.
struct LayerModel {
    double base = 0.3;
    double homophily = 0.0;
};

struct SyntheticSpec {
    std::size_t n_nodes = 60;
    int surveys = 6;
    // Proximity over all pairs; calls conditional on proximity (per direction);
    // SMS conditional on a call in the same direction.
    LayerModel proximity{0.5, 0.0};
    LayerModel calls{0.25, 0.0};
    LayerModel sms{0.35, 0.0};
    // Category whose similarity drives the homophily terms, or "all" for the
    // mean over categories.
    std::string planted_category = "music";

    double facebook_base = 0.3;
    // Log-odds added to Facebook ties between students sharing a year or a
    // residential sector.
    double facebook_same_group_bias = 0.0;
    double socialize_given_facebook = 0.45;
    double close_given_socialize = 0.45;
    // Log-odds added per unit of multiplex weight to each relationship step.
    double relationship_tie_boost = 2.0;
    double report_rate = 0.8;
    double false_report_rate = 0.03;
    double missing_survey_rate = 0.1;
    std::size_t external_contacts = 3;

    std::int64_t window_start = 1220227200;  // 2008-09-01
    std::int64_t window_end = 1243814400;    // 2009-06-01
    std::uint64_t seed = 1;

    void validate() const;
};

struct SyntheticDataset {
    Roster roster;
    std::vector<InteractionEvent> events;  // includes rows with external contacts
    std::vector<RelationshipReport> reports;
    std::vector<SurveyRow> surveys;
};

SyntheticDataset generate_synthetic(const SyntheticSpec& spec,
                                    const AttributeRegistry& registry = default_registry());

// roster.txt, events.csv, relationships.csv, surveys.csv; returns the paths.
std::vector<std::filesystem::path> write_dataset(const SyntheticDataset& data,
                                                 const std::filesystem::path& dir);

}  // namespace mplx

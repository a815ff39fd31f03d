#pragma once

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "mplx/core.hpp"
#include "mplx/ingest.hpp"

namespace mplx {

// How repeated survey answers collapse to one value: the last reported value,
// the mean of all reports, or a value that is reported once.
enum class SummaryMode { t_max, t_avg, actual };

SummaryMode parse_summary_mode(const std::string& name);
std::string to_string(SummaryMode mode);

struct AttributeSpec {
    std::string name;
    double min = 0.0;
    double max = 0.0;
    SummaryMode mode = SummaryMode::t_max;
};

struct CategorySpec {
    std::string name;
    std::vector<AttributeSpec> attributes;
};

// Category and attribute definitions with valid ranges and summary modes.
// Loaded from a config document so datasets can redefine categories.
class AttributeRegistry {
public:
    explicit AttributeRegistry(std::vector<CategorySpec> categories);

    static AttributeRegistry from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;

    const std::vector<CategorySpec>& categories() const { return categories_; }
    std::vector<std::string> category_names() const;
    const CategorySpec& category(const std::string& name) const;
    const AttributeSpec* find(const std::string& category, const std::string& attribute) const;

private:
    std::vector<CategorySpec> categories_;
};

// The four standard categories: political (2), health (6), music (11),
// situational (2).
AttributeRegistry default_registry();

struct Observation {
    int survey_index;
    double value;
};

struct AttributeSeries {
    std::string participant;
    std::string attribute;
    std::vector<Observation> observations;  // strictly increasing survey_index
};

// nullopt marks a missing value (no observations).
std::optional<double> summarize(const AttributeSeries& series, SummaryMode mode);

// Validated survey observations keyed by (participant, category, attribute).
class SurveyData {
public:
    using Key = std::tuple<std::string, std::string, std::string>;

    const AttributeSeries* find(const std::string& participant, const std::string& category,
                                const std::string& attribute) const;
    void add(const std::string& category, AttributeSeries series);
    std::size_t series_count() const { return series_.size(); }
    const std::map<Key, AttributeSeries>& series() const { return series_; }

    std::size_t dropped_external = 0;
    std::size_t missing_values = 0;

private:
    std::map<Key, AttributeSeries> series_;
};

// surveys.csv: participant,attribute,category,survey_index,value. Empty or NA
// values are treated as missing; rows for non-roster participants are dropped.
SurveyData parse_surveys(std::istream& in, const AttributeRegistry& registry, const Roster& roster,
                         std::string_view source_name = "surveys.csv");

struct ProfileVector {
    std::string participant;
    std::string category;
    std::vector<double> values;
    std::vector<SummaryMode> modes;
};

struct ProfileSet {
    std::string category;
    NodeIds node_ids;
    // Indexed like node_ids; empty when the participant has no usable vector.
    std::vector<std::optional<ProfileVector>> profiles;
    std::vector<std::string> missing;  // some attribute had no observation
    std::vector<std::string> zero;     // all-zero vector, cosine undefined

    std::size_t defined_count() const;
};

struct ProfileOptions {
    // Rescale each attribute to [0, 1] using its registry range.
    bool min_max_normalize = false;
};

ProfileSet build_profiles(const SurveyData& data, const AttributeRegistry& registry,
                          const std::string& category, const NodeIds& node_ids,
                          const ProfileOptions& options = {});

// nullopt when either vector is all zeros.
std::optional<double> cosine_similarity(const ProfileVector& u, const ProfileVector& v);

// Symmetric pairwise cosine similarities; pairs involving a participant
// without a vector, and the diagonal, are NaN. Rows are fanned out over
// `threads` workers.
WeightedMatrix similarity_matrix(const ProfileSet& profiles, unsigned threads = 1);

}  // namespace mplx

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mplx/ingest.hpp"
#include "mplx/profiles.hpp"
#include "mplx/synth.hpp"

namespace mplx {

// Maps a dataset release's native file layout onto the canonical schemas.
// Every file may carry an expected SHA-256 that is checked before parsing.
struct Adapter {
    struct RosterSource {
        std::string file;
        std::string id_column;
    };
    struct EventSource {
        std::string file;
        EventSchema schema;
    };
    struct RelationshipSource {
        std::string file;
        RelationshipSchema schema;
    };
    // Wide-format survey file: one row per participant and survey wave, one
    // column per attribute.
    struct SurveySource {
        std::string file;
        std::string category;
        std::string participant_column;
        std::string survey_column;  // empty: every row is survey 1
        SurveyIndexing survey_indexing;
        std::map<std::string, std::string> attributes;  // native column -> attribute
        // Native column -> (text value -> number); unmapped values must be numeric.
        std::map<std::string, std::map<std::string, double>> value_maps;
    };

    std::string name;
    std::optional<RosterSource> roster;
    std::vector<EventSource> events;
    std::optional<RelationshipSource> relationships;
    std::vector<SurveySource> surveys;
    std::map<std::string, std::string> checksums;  // file -> sha256, empty = unchecked

    static Adapter from_json(const nlohmann::json& doc);
};

struct CanonicalDataset {
    Roster roster;
    EventParseResult events;
    ReportParseResult reports;
    std::vector<SurveyRow> surveys;
    std::size_t survey_rows_dropped = 0;   // participant not on the roster
    std::size_t survey_values_missing = 0;  // empty or NA cells
};

// `roster` overrides the adapter's roster source when given.
CanonicalDataset run_adapter(const Adapter& adapter, const std::filesystem::path& dataset_dir,
                             const std::optional<Roster>& roster = std::nullopt);

}  // namespace mplx

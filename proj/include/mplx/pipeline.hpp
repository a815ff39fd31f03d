#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mplx/core.hpp"
#include "mplx/stats.hpp"

namespace mplx {

// Failure inside a named pipeline stage.
class StageError : public InputError {
public:
    StageError(std::string stage, const std::string& message)
        : InputError(stage + ": " + message), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct RunConfig {
    // Canonical inputs. Ignored (except roster) when an adapter is set.
    std::filesystem::path events;
    std::filesystem::path relationships;
    std::filesystem::path surveys;
    std::filesystem::path roster;
    std::filesystem::path registry;  // empty: built-in four categories
    // Native dataset via an adapter config.
    std::filesystem::path adapter;
    std::filesystem::path dataset_dir;

    int survey_count = 6;
    std::optional<double> distance_scale;  // default: from layer count
    Binning bins = Binning::standard();
    std::size_t permutations = 1000;  // 0 disables the significance test
    std::optional<std::uint64_t> seed;
    std::filesystem::path output_dir;
    bool mask_to_support = true;
    bool normalize = false;
    CorrelationMode correlation_mode = CorrelationMode::product_over_sums;
    PairMode pair_mode = PairMode::directed;
    unsigned threads = 0;

    // Relative paths resolve against `base_dir`.
    static RunConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
    nlohmann::json to_json() const;
    void validate() const;
};

struct Artifact {
    std::string path;  // relative to the output directory
    std::string sha256;
    std::string kind;
};

struct AnalysisReport {
    std::vector<Artifact> manifest;
    nlohmann::json summary;
};

inline constexpr const char* kManifestFile = "manifest.json";
inline constexpr const char* kSummaryFile = "summary.json";

// Runs ingest, profiles, core and stats, writing every artifact plus
// manifest.json into config.output_dir. On failure the files written so far
// are removed and the error names the failing stage.
AnalysisReport run_pipeline(const RunConfig& config);

nlohmann::json manifest_to_json(const std::vector<Artifact>& manifest);

}  // namespace mplx

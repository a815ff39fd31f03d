#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace mplx {

// One comparison between an analysis summary and a published reference value.
struct Check {
    std::string name;
    double expected = 0.0;
    double tolerance = 0.0;  // 0 means exact
    std::optional<double> observed;
    bool passed = false;
    std::string note;
};

// Reference values reported for the MIT Social Evolution study, checked
// against a summary.json produced by run_pipeline.
std::vector<Check> verify_reference(const nlohmann::json& summary);

std::string format_check(const Check& check);
nlohmann::json to_json(const Check& check);

}  // namespace mplx

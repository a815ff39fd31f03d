#include "mplx/profiles.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <set>

#include <fmt/format.h>

#include "mplx/csv.hpp"
#include "mplx/parallel.hpp"

namespace mplx {

SummaryMode parse_summary_mode(const std::string& name) {
    if (name == "t_max") return SummaryMode::t_max;
    if (name == "t_avg") return SummaryMode::t_avg;
    if (name == "actual") return SummaryMode::actual;
    throw InputError(fmt::format("unknown summary mode '{}'", name));
}

std::string to_string(SummaryMode mode) {
    switch (mode) {
        case SummaryMode::t_max: return "t_max";
        case SummaryMode::t_avg: return "t_avg";
        case SummaryMode::actual: return "actual";
    }
    return "unknown";
}

// --- registry ------------------------------------------------------------------

AttributeRegistry::AttributeRegistry(std::vector<CategorySpec> categories)
    : categories_(std::move(categories)) {
    if (categories_.empty()) throw InputError("attribute registry has no categories");
    std::set<std::string> names;
    for (const auto& c : categories_) {
        if (!names.insert(c.name).second)
            throw InputError(fmt::format("duplicate category '{}'", c.name));
        if (c.attributes.empty())
            throw InputError(fmt::format("category '{}' has no attributes", c.name));
        std::set<std::string> attrs;
        for (const auto& a : c.attributes) {
            if (!attrs.insert(a.name).second)
                throw InputError(fmt::format("duplicate attribute '{}' in '{}'", a.name, c.name));
            // Cosine similarity is only bounded in [0, 1] for non-negative data.
            if (a.min < 0.0 || a.max < a.min)
                throw InputError(fmt::format("attribute '{}' has invalid range [{}, {}]", a.name,
                                             a.min, a.max));
        }
    }
}

AttributeRegistry AttributeRegistry::from_json(const nlohmann::json& doc) {
    try {
        std::vector<CategorySpec> categories;
        for (const auto& c : doc.at("categories")) {
            CategorySpec spec{c.at("name").get<std::string>(), {}};
            for (const auto& a : c.at("attributes"))
                spec.attributes.push_back({a.at("name").get<std::string>(), a.at("min").get<double>(),
                                           a.at("max").get<double>(),
                                           parse_summary_mode(a.at("summary").get<std::string>())});
            categories.push_back(std::move(spec));
        }
        return AttributeRegistry(std::move(categories));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(fmt::format("malformed attribute registry: {}", e.what()));
    }
}

nlohmann::json AttributeRegistry::to_json() const {
    nlohmann::json cats = nlohmann::json::array();
    for (const auto& c : categories_) {
        nlohmann::json attrs = nlohmann::json::array();
        for (const auto& a : c.attributes)
            attrs.push_back(
                {{"name", a.name}, {"min", a.min}, {"max", a.max}, {"summary", to_string(a.mode)}});
        cats.push_back({{"name", c.name}, {"attributes", std::move(attrs)}});
    }
    return {{"version", 1}, {"categories", std::move(cats)}};
}

std::vector<std::string> AttributeRegistry::category_names() const {
    std::vector<std::string> out;
    for (const auto& c : categories_) out.push_back(c.name);
    return out;
}

const CategorySpec& AttributeRegistry::category(const std::string& name) const {
    for (const auto& c : categories_)
        if (c.name == name) return c;
    throw InputError(fmt::format("unknown category '{}'", name));
}

const AttributeSpec* AttributeRegistry::find(const std::string& category,
                                             const std::string& attribute) const {
    for (const auto& c : categories_) {
        if (c.name != category) continue;
        for (const auto& a : c.attributes)
            if (a.name == attribute) return &a;
    }
    return nullptr;
}

AttributeRegistry default_registry() {
    using M = SummaryMode;
    std::vector<AttributeSpec> music;
    for (const char* genre :
         {"indie_alternative_rock", "techno_lounge_electronic", "heavy_metal_hardcore",
          "classic_rock", "pop_top40", "hiphop_rnb", "jazz", "classical", "country_folk",
          "showtunes", "other"})
        music.push_back({genre, 0, 3, M::t_max});
    return AttributeRegistry({
        {"political",
         {{"interest_in_politics", 0, 3, M::t_max}, {"political_orientation", 1, 7, M::t_max}}},
        {"health",
         {{"weight_lb", 81, 330, M::t_avg},
          {"height_in", 60, 81, M::t_avg},
          {"salads_per_week", 0, 6, M::t_avg},
          {"fruits_per_day", 0, 7, M::t_avg},
          {"aerobics_days_per_week", 0, 7, M::t_avg},
          {"sports_days_per_week", 0, 6, M::t_avg}}},
        {"music", std::move(music)},
        {"situational",
         {{"year_in_college", 1, 5, M::actual}, {"residential_sector", 1, 8, M::actual}}},
    });
}

// --- summaries ------------------------------------------------------------------

std::optional<double> summarize(const AttributeSeries& series, SummaryMode mode) {
    const auto& obs = series.observations;
    if (obs.empty()) return std::nullopt;
    switch (mode) {
        case SummaryMode::t_max:
        case SummaryMode::actual:
            return obs.back().value;
        case SummaryMode::t_avg: {
            double sum = 0.0;
            for (const auto& o : obs) sum += o.value;
            return sum / static_cast<double>(obs.size());
        }
    }
    return std::nullopt;
}

const AttributeSeries* SurveyData::find(const std::string& participant, const std::string& category,
                                        const std::string& attribute) const {
    auto it = series_.find({participant, category, attribute});
    return it == series_.end() ? nullptr : &it->second;
}

void SurveyData::add(const std::string& category, AttributeSeries series) {
    Key key{series.participant, category, series.attribute};
    series_.insert_or_assign(std::move(key), std::move(series));
}

SurveyData parse_surveys(std::istream& in, const AttributeRegistry& registry, const Roster& roster,
                         std::string_view source_name) {
    const auto table = csv::Table::parse(in, source_name);
    const std::size_t p_col = table.column("participant");
    const std::size_t a_col = table.column("attribute");
    const std::size_t c_col = table.column("category");
    const std::size_t s_col = table.column("survey_index");
    const std::size_t v_col = table.column("value");

    struct Pending {
        std::vector<std::pair<Observation, std::size_t>> obs;  // with source line
    };
    std::map<SurveyData::Key, Pending> pending;
    SurveyData data;
    for (const auto& row : table.rows()) {
        const auto& f = row.fields;
        const AttributeSpec* spec = registry.find(f[c_col], f[a_col]);
        if (!spec)
            throw InputError(fmt::format("{}:{}: unknown attribute '{}' in category '{}'", source_name,
                                         row.line, f[a_col], f[c_col]));
        int survey = 0;
        {
            const auto& s = f[s_col];
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), survey);
            if (ec != std::errc() || ptr != s.data() + s.size() || survey < 1)
                throw InputError(
                    fmt::format("{}:{}: bad survey index '{}'", source_name, row.line, s));
        }
        if (!roster.contains(f[p_col])) {
            ++data.dropped_external;
            continue;
        }
        const auto& raw = f[v_col];
        if (raw.empty() || raw == "NA" || raw == "na" || raw == "NaN") {
            ++data.missing_values;
            continue;
        }
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
        if (ec != std::errc() || ptr != raw.data() + raw.size() || !std::isfinite(value))
            throw InputError(fmt::format("{}:{}: bad value '{}'", source_name, row.line, raw));
        if (value < spec->min || value > spec->max)
            throw InputError(fmt::format("{}:{}: value {} for '{}' outside [{}, {}]", source_name,
                                         row.line, raw, spec->name, spec->min, spec->max));
        pending[{f[p_col], f[c_col], f[a_col]}].obs.push_back({{survey, value}, row.line});
    }
    for (auto& [key, p] : pending) {
        std::stable_sort(p.obs.begin(), p.obs.end(), [](const auto& a, const auto& b) {
            return a.first.survey_index < b.first.survey_index;
        });
        AttributeSeries series{std::get<0>(key), std::get<2>(key), {}};
        for (const auto& [o, line] : p.obs) {
            if (!series.observations.empty() && series.observations.back().survey_index == o.survey_index)
                throw InputError(fmt::format("{}:{}: '{}' reported twice for '{}' in survey {}",
                                             source_name, line, series.attribute,
                                             series.participant, o.survey_index));
            series.observations.push_back(o);
        }
        data.add(std::get<1>(key), std::move(series));
    }
    return data;
}

// --- profiles and similarity ------------------------------------------------------

std::size_t ProfileSet::defined_count() const {
    return static_cast<std::size_t>(std::count_if(profiles.begin(), profiles.end(),
                                                  [](const auto& p) { return p.has_value(); }));
}

ProfileSet build_profiles(const SurveyData& data, const AttributeRegistry& registry,
                          const std::string& category, const NodeIds& node_ids,
                          const ProfileOptions& options) {
    const CategorySpec& spec = registry.category(category);
    ProfileSet set{category, node_ids, {}, {}, {}};
    for (const auto& participant : node_ids) {
        ProfileVector v{participant, category, {}, {}};
        bool complete = true;
        for (const auto& attr : spec.attributes) {
            const AttributeSeries* series = data.find(participant, category, attr.name);
            const auto value = series ? summarize(*series, attr.mode) : std::nullopt;
            if (!value) {
                complete = false;
                break;
            }
            double x = *value;
            if (options.min_max_normalize)
                x = attr.max > attr.min ? (x - attr.min) / (attr.max - attr.min) : 0.0;
            v.values.push_back(x);
            v.modes.push_back(attr.mode);
        }
        if (!complete) {
            set.missing.push_back(participant);
            set.profiles.emplace_back();
        } else if (std::all_of(v.values.begin(), v.values.end(), [](double x) { return x == 0.0; })) {
            set.zero.push_back(participant);
            set.profiles.emplace_back();
        } else {
            set.profiles.emplace_back(std::move(v));
        }
    }
    return set;
}

std::optional<double> cosine_similarity(const ProfileVector& u, const ProfileVector& v) {
    if (u.category != v.category)
        throw InputError(fmt::format("cannot compare '{}' and '{}' profiles", u.category, v.category));
    if (u.values.size() != v.values.size())
        throw InputError("profile vectors differ in length");
    double dot = 0.0, uu = 0.0, vv = 0.0;
    for (std::size_t k = 0; k < u.values.size(); ++k) {
        if (u.values[k] < 0.0 || v.values[k] < 0.0)
            throw InputError("profile vectors must be non-negative");
        dot += u.values[k] * v.values[k];
        uu += u.values[k] * u.values[k];
        vv += v.values[k] * v.values[k];
    }
    if (uu == 0.0 || vv == 0.0) return std::nullopt;
    return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), 0.0, 1.0);
}

WeightedMatrix similarity_matrix(const ProfileSet& profiles, unsigned threads) {
    if (profiles.defined_count() < 2)
        throw InputError(fmt::format("category '{}' has fewer than two usable profiles",
                                     profiles.category));
    const std::size_t n = profiles.node_ids.size();
    WeightedMatrix sim(MatrixKind::similarity, profiles.node_ids,
                       std::numeric_limits<double>::quiet_NaN());
    parallel_for(n, threads, [&](std::size_t i) {
        if (!profiles.profiles[i]) return;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (!profiles.profiles[j]) continue;
            if (auto s = cosine_similarity(*profiles.profiles[i], *profiles.profiles[j])) {
                sim(i, j) = *s;
                sim(j, i) = *s;
            }
        }
    });
    return sim;
}

}  // namespace mplx

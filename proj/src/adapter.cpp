#include "mplx/adapter.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include <fmt/format.h>

#include "mplx/csv.hpp"
#include "mplx/hash.hpp"

namespace mplx {

namespace {

template <typename T>
T value_or(const nlohmann::json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

SurveyIndexing indexing_from_json(const nlohmann::json& j) {
    SurveyIndexing s;
    s.values = value_or<std::map<std::string, int>>(j, "survey_values", {});
    s.start_dates = value_or<std::vector<std::string>>(j, "survey_start_dates", {});
    s.rank_values = value_or<bool>(j, "survey_rank_values", false);
    return s;
}

std::optional<std::int64_t> window_bound(const nlohmann::json& j, const char* key) {
    if (!j.contains("window") || !j.at("window").contains(key)) return std::nullopt;
    const auto text = j.at("window").at(key).get<std::string>();
    const auto t = parse_iso8601(text);
    if (!t) throw InputError(fmt::format("bad window bound '{}'", text));
    return t;
}

std::ifstream open_checked(const Adapter& adapter, const std::filesystem::path& dir,
                           const std::string& file) {
    const auto path = dir / file;
    if (!std::filesystem::exists(path))
        throw InputError(fmt::format("adapter '{}': missing file '{}'", adapter.name, path.string()));
    if (auto it = adapter.checksums.find(file); it != adapter.checksums.end() && !it->second.empty()) {
        const auto actual = sha256_file(path);
        if (actual != it->second)
            throw InputError(fmt::format("adapter '{}': checksum mismatch for '{}' (expected {}, found {})",
                                         adapter.name, file, it->second, actual));
    }
    return std::ifstream(path, std::ios::binary);
}

}  // namespace

Adapter Adapter::from_json(const nlohmann::json& doc) {
    try {
        Adapter a;
        a.name = doc.at("name").get<std::string>();
        if (doc.contains("roster"))
            a.roster = RosterSource{doc["roster"].at("file").get<std::string>(),
                                    doc["roster"].at("id_column").get<std::string>()};
        for (const auto& e : value_or<nlohmann::json>(doc, "events", nlohmann::json::array())) {
            EventSource src;
            src.file = e.at("file").get<std::string>();
            auto& s = src.schema;
            s.src_column = value_or<std::string>(e, "src_column", s.src_column);
            s.dst_column = value_or<std::string>(e, "dst_column", s.dst_column);
            s.channel_column = value_or<std::string>(e, "channel_column", s.channel_column);
            s.timestamp_column = value_or<std::string>(e, "timestamp_column", s.timestamp_column);
            s.timestamp_format = parse_timestamp_format(value_or<std::string>(e, "timestamp_format", "iso8601"));
            if (e.contains("channel")) {
                const auto c = parse_channel(e["channel"].get<std::string>());
                if (!c) throw InputError(fmt::format("adapter: unknown channel in '{}'", src.file));
                s.fixed_channel = c;
            }
            s.channel_values = value_or<std::map<std::string, std::string>>(e, "channel_values", {});
            s.incoming_column = value_or<std::string>(e, "incoming_column", "");
            s.incoming_values = value_or<std::vector<std::string>>(e, "incoming_values", {});
            s.window_start = window_bound(e, "start");
            s.window_end = window_bound(e, "end");
            a.events.push_back(std::move(src));
        }
        if (doc.contains("relationships")) {
            const auto& r = doc["relationships"];
            RelationshipSource src;
            src.file = r.at("file").get<std::string>();
            auto& s = src.schema;
            s.reporter_column = value_or<std::string>(r, "reporter_column", s.reporter_column);
            s.target_column = value_or<std::string>(r, "target_column", s.target_column);
            s.relation_column = value_or<std::string>(r, "relation_column", s.relation_column);
            s.survey_column = value_or<std::string>(r, "survey_column", s.survey_column);
            s.relation_values = value_or<std::map<std::string, std::string>>(r, "relation_values", {});
            s.ignored_relations = value_or<std::vector<std::string>>(r, "ignored_relations", {});
            s.survey_indexing = indexing_from_json(r);
            a.relationships = std::move(src);
        }
        for (const auto& v : value_or<nlohmann::json>(doc, "surveys", nlohmann::json::array())) {
            SurveySource src;
            src.file = v.at("file").get<std::string>();
            src.category = v.at("category").get<std::string>();
            src.participant_column = v.at("participant_column").get<std::string>();
            src.survey_column = value_or<std::string>(v, "survey_column", "");
            src.survey_indexing = indexing_from_json(v);
            src.attributes = v.at("attributes").get<std::map<std::string, std::string>>();
            src.value_maps = value_or<std::map<std::string, std::map<std::string, double>>>(v, "value_maps", {});
            a.surveys.push_back(std::move(src));
        }
        if (doc.contains("checksums"))
            for (const auto& [file, digest] : doc["checksums"].items())
                a.checksums[file] = digest.is_null() ? "" : digest.get<std::string>();
        return a;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(fmt::format("malformed adapter config: {}", e.what()));
    }
}

CanonicalDataset run_adapter(const Adapter& adapter, const std::filesystem::path& dataset_dir,
                             const std::optional<Roster>& roster) {
    CanonicalDataset out;
    if (roster) {
        out.roster = *roster;
    } else if (adapter.roster) {
        auto in = open_checked(adapter, dataset_dir, adapter.roster->file);
        const auto table = csv::Table::parse(in, adapter.roster->file);
        const auto col = table.column(adapter.roster->id_column);
        std::set<std::string> seen;
        NodeIds ids;
        for (const auto& row : table.rows())
            if (!row.fields[col].empty() && seen.insert(row.fields[col]).second) ids.push_back(row.fields[col]);
        out.roster = Roster(std::move(ids));
    } else {
        throw InputError(fmt::format("adapter '{}' has no roster source; pass --roster", adapter.name));
    }

    for (const auto& src : adapter.events) {
        auto in = open_checked(adapter, dataset_dir, src.file);
        auto parsed = parse_events(in, src.schema, out.roster, src.file);
        auto& e = out.events;
        e.events.insert(e.events.end(), parsed.events.begin(), parsed.events.end());
        e.dropped_external += parsed.dropped_external;
        e.dropped_self += parsed.dropped_self;
        e.dropped_out_of_window += parsed.dropped_out_of_window;
    }

    if (adapter.relationships) {
        auto in = open_checked(adapter, dataset_dir, adapter.relationships->file);
        out.reports = parse_reports(in, adapter.relationships->schema, out.roster, adapter.relationships->file);
    }

    for (const auto& src : adapter.surveys) {
        auto in = open_checked(adapter, dataset_dir, src.file);
        const auto table = csv::Table::parse(in, src.file);
        const auto p_col = table.column(src.participant_column);
        std::optional<std::size_t> s_col;
        if (!src.survey_column.empty()) s_col = table.column(src.survey_column);
        SurveyIndexing indexing = src.survey_indexing;
        if (s_col && indexing.rank_values) {
            std::vector<std::string> raw;
            for (const auto& row : table.rows()) raw.push_back(row.fields[*s_col]);
            indexing.prepare(std::move(raw));
        }
        for (const auto& row : table.rows()) {
            const auto& participant = row.fields[p_col];
            if (!out.roster.contains(participant)) {
                ++out.survey_rows_dropped;
                continue;
            }
            int survey = 1;
            if (s_col) {
                const auto resolved = indexing.resolve(row.fields[*s_col]);
                if (!resolved)
                    throw InputError(fmt::format("{}:{}: unrecognized survey '{}'", src.file, row.line,
                                                 row.fields[*s_col]));
                survey = *resolved;
            }
            for (const auto& [column, attribute] : src.attributes) {
                const auto& raw = row.fields[table.column(column)];
                if (raw.empty() || raw == "NA") {
                    ++out.survey_values_missing;
                    continue;
                }
                double value = 0.0;
                if (auto m = src.value_maps.find(column); m != src.value_maps.end()) {
                    auto v = m->second.find(raw);
                    if (v != m->second.end()) {
                        value = v->second;
                        out.surveys.push_back({participant, attribute, src.category, survey, value});
                        continue;
                    }
                }
                auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), value);
                if (ec != std::errc() || ptr != raw.data() + raw.size() || !std::isfinite(value))
                    throw InputError(fmt::format("{}:{}: unmapped value '{}' in column '{}'", src.file,
                                                 row.line, raw, column));
                out.surveys.push_back({participant, attribute, src.category, survey, value});
            }
        }
    }
    std::stable_sort(out.surveys.begin(), out.surveys.end(), [](const SurveyRow& a, const SurveyRow& b) {
        return std::tie(a.participant, a.category, a.attribute, a.survey_index) <
               std::tie(b.participant, b.category, b.attribute, b.survey_index);
    });
    return out;
}

}  // namespace mplx

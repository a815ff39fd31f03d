#include "mplx/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "mplx/csv.hpp"

namespace mplx {

// --- roster ------------------------------------------------------------------

Roster::Roster(NodeIds ids) : ids_(std::move(ids)) {
    for (std::size_t k = 0; k < ids_.size(); ++k) {
        if (ids_[k].empty()) throw InputError("roster contains an empty participant id");
        if (!index_.emplace(ids_[k], k).second)
            throw InputError(fmt::format("roster lists '{}' twice", ids_[k]));
    }
}

std::optional<std::size_t> Roster::find(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t Roster::index(const std::string& id) const {
    if (auto k = find(id)) return *k;
    throw InputError(fmt::format("participant '{}' is not on the roster", id));
}

Roster read_roster(std::istream& in) {
    NodeIds ids;
    std::string line;
    while (std::getline(in, line)) {
        auto id = csv::trim(line);
        if (id.empty() || id.front() == '#') continue;
        ids.push_back(std::move(id));
    }
    return Roster(std::move(ids));
}

// --- timestamps ----------------------------------------------------------------

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp < 10 ? mp + 3 : mp - 9;
    y += m <= 2;
}

bool is_leap(std::int64_t y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

unsigned days_in_month(std::int64_t y, unsigned m) {
    static constexpr unsigned table[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return m == 2 && is_leap(y) ? 29 : table[m - 1];
}

bool read_digits(std::string_view s, std::size_t pos, std::size_t count, int& out) {
    if (pos + count > s.size()) return false;
    out = 0;
    for (std::size_t k = pos; k < pos + count; ++k) {
        if (s[k] < '0' || s[k] > '9') return false;
        out = out * 10 + (s[k] - '0');
    }
    return true;
}

}  // namespace

TimestampFormat parse_timestamp_format(const std::string& name) {
    if (name == "iso8601") return TimestampFormat::iso8601;
    if (name == "unix") return TimestampFormat::unix_seconds;
    if (name == "date") return TimestampFormat::date;
    throw InputError(fmt::format("unknown timestamp format '{}'", name));
}

std::optional<std::int64_t> parse_iso8601(std::string_view s) {
    int year, month, day;
    if (!read_digits(s, 0, 4, year) || s.size() < 10 || s[4] != '-' || s[7] != '-' ||
        !read_digits(s, 5, 2, month) || !read_digits(s, 8, 2, day))
        return std::nullopt;
    if (month < 1 || month > 12 || day < 1 ||
        static_cast<unsigned>(day) > days_in_month(year, static_cast<unsigned>(month)))
        return std::nullopt;
    std::int64_t seconds =
        days_from_civil(year, static_cast<unsigned>(month), static_cast<unsigned>(day)) * 86400;
    std::size_t pos = 10;
    if (pos == s.size()) return seconds;
    if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
    int hh, mm, ss;
    if (!read_digits(s, pos + 1, 2, hh) || s.size() < pos + 9 || s[pos + 3] != ':' ||
        !read_digits(s, pos + 4, 2, mm) || s[pos + 6] != ':' || !read_digits(s, pos + 7, 2, ss))
        return std::nullopt;
    if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
    seconds += hh * 3600 + mm * 60 + ss;
    pos += 9;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        const std::size_t digits_start = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        if (pos == digits_start) return std::nullopt;
    }
    if (pos == s.size()) return seconds;
    if (s[pos] == 'Z' && pos + 1 == s.size()) return seconds;
    if (s[pos] == '+' || s[pos] == '-') {
        int oh, om;
        if (s.size() != pos + 6 || !read_digits(s, pos + 1, 2, oh) || s[pos + 3] != ':' ||
            !read_digits(s, pos + 4, 2, om))
            return std::nullopt;
        const std::int64_t offset = oh * 3600 + om * 60;
        return s[pos] == '+' ? seconds - offset : seconds + offset;
    }
    return std::nullopt;
}

std::optional<std::int64_t> parse_timestamp(std::string_view text, TimestampFormat format) {
    switch (format) {
        case TimestampFormat::iso8601:
            return parse_iso8601(text);
        case TimestampFormat::date:
            if (text.size() != 10) return std::nullopt;
            return parse_iso8601(text);
        case TimestampFormat::unix_seconds: {
            std::int64_t value = 0;
            const auto* end = text.data() + text.size();
            auto [ptr, ec] = std::from_chars(text.data(), end, value);
            if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
            return value;
        }
    }
    return std::nullopt;
}

std::string format_iso8601(std::int64_t seconds) {
    std::int64_t days = seconds / 86400;
    std::int64_t rem = seconds % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    std::int64_t y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", y, m, d, rem / 3600,
                       (rem / 60) % 60, rem % 60);
}

// --- channels and events ---------------------------------------------------------

std::optional<Channel> parse_channel(std::string_view name) {
    if (name == "call") return Channel::call;
    if (name == "sms") return Channel::sms;
    if (name == "proximity") return Channel::proximity;
    return std::nullopt;
}

std::string to_string(Channel c) {
    switch (c) {
        case Channel::call: return "call";
        case Channel::sms: return "sms";
        case Channel::proximity: return "proximity";
    }
    return "unknown";
}

std::string layer_name(Channel c) {
    switch (c) {
        case Channel::call: return "calls";
        case Channel::sms: return "sms";
        case Channel::proximity: return "proximity";
    }
    return "unknown";
}

EventParseResult parse_events(std::istream& in, const EventSchema& schema, const Roster& roster,
                              std::string_view source_name) {
    const auto table = csv::Table::parse(in, source_name);
    const std::size_t src_col = table.column(schema.src_column);
    const std::size_t dst_col = table.column(schema.dst_column);
    const std::size_t ts_col = table.column(schema.timestamp_column);
    std::optional<std::size_t> channel_col;
    if (!schema.fixed_channel) channel_col = table.column(schema.channel_column);

    std::optional<std::size_t> incoming_col;
    if (!schema.incoming_column.empty()) incoming_col = table.column(schema.incoming_column);

    EventParseResult result;
    for (const auto& row : table.rows()) {
        const auto& f = row.fields;
        Channel channel;
        if (schema.fixed_channel) {
            channel = *schema.fixed_channel;
        } else {
            std::string raw = f[*channel_col];
            if (auto it = schema.channel_values.find(raw); it != schema.channel_values.end())
                raw = it->second;
            auto parsed = parse_channel(raw);
            if (!parsed)
                throw InputError(
                    fmt::format("{}:{}: unknown channel '{}'", source_name, row.line, f[*channel_col]));
            channel = *parsed;
        }
        const auto ts = parse_timestamp(f[ts_col], schema.timestamp_format);
        if (!ts)
            throw InputError(
                fmt::format("{}:{}: unparseable timestamp '{}'", source_name, row.line, f[ts_col]));
        const bool incoming =
            incoming_col && std::find(schema.incoming_values.begin(), schema.incoming_values.end(),
                                      f[*incoming_col]) != schema.incoming_values.end();
        const std::string& src = incoming ? f[dst_col] : f[src_col];
        const std::string& dst = incoming ? f[src_col] : f[dst_col];
        if (f[src_col].empty())
            throw InputError(fmt::format("{}:{}: empty source participant", source_name, row.line));
        if (!roster.contains(src) || !roster.contains(dst)) {
            ++result.dropped_external;
            continue;
        }
        if (src == dst) {
            ++result.dropped_self;
            continue;
        }
        if ((schema.window_start && *ts < *schema.window_start) ||
            (schema.window_end && *ts > *schema.window_end)) {
            ++result.dropped_out_of_window;
            continue;
        }
        result.events.push_back({src, dst, channel, *ts});
    }
    return result;
}

void write_events(std::ostream& out, std::span<const InteractionEvent> events) {
    csv::write_row(out, {"src", "dst", "channel", "timestamp_iso8601"});
    for (const auto& e : events)
        csv::write_row(out, {e.src, e.dst, to_string(e.channel), format_iso8601(e.timestamp)});
}

Layer build_layer(std::span<const InteractionEvent> events, Channel channel, const Roster& roster) {
    Layer layer(layer_name(channel), channel != Channel::proximity, roster.ids());
    for (const auto& e : events) {
        if (e.channel != channel) continue;
        const std::size_t i = roster.index(e.src);
        const std::size_t j = roster.index(e.dst);
        if (i == j) throw InputError(fmt::format("self-interaction event for '{}'", e.src));
        layer.add_edge(i, j);
    }
    return layer;
}

MultiplexGraph build_multiplex(std::span<const InteractionEvent> events, const Roster& roster) {
    std::vector<Layer> layers;
    for (Channel c : {Channel::proximity, Channel::call, Channel::sms})
        layers.push_back(build_layer(events, c, roster));
    return {roster.ids(), std::move(layers)};
}

// --- relationships -----------------------------------------------------------------

std::optional<Relation> parse_relation(std::string_view name) {
    if (name == "close_friend") return Relation::close_friend;
    if (name == "socialize_twice_week") return Relation::socialize_twice_week;
    if (name == "facebook_all_tagged") return Relation::facebook_all_tagged;
    return std::nullopt;
}

std::string to_string(Relation r) {
    switch (r) {
        case Relation::close_friend: return "close_friend";
        case Relation::socialize_twice_week: return "socialize_twice_week";
        case Relation::facebook_all_tagged: return "facebook_all_tagged";
    }
    return "unknown";
}

void SurveyIndexing::prepare(std::vector<std::string> raw_values) {
    if (!rank_values) return;
    std::sort(raw_values.begin(), raw_values.end());
    raw_values.erase(std::unique(raw_values.begin(), raw_values.end()), raw_values.end());
    values.clear();
    for (std::size_t k = 0; k < raw_values.size(); ++k) values[raw_values[k]] = static_cast<int>(k) + 1;
}

std::optional<int> SurveyIndexing::resolve(std::string_view raw) const {
    if (!values.empty()) {
        auto it = values.find(std::string(raw));
        if (it != values.end()) return it->second;
        if (start_dates.empty()) return std::nullopt;
    }
    if (!start_dates.empty()) {
        const auto when = parse_iso8601(raw);
        if (!when) return std::nullopt;
        int index = 0;
        for (std::size_t k = 0; k < start_dates.size(); ++k) {
            const auto start = parse_iso8601(start_dates[k]);
            if (!start) throw InputError(fmt::format("bad survey start date '{}'", start_dates[k]));
            if (*when >= *start) index = static_cast<int>(k) + 1;
        }
        if (index == 0) return std::nullopt;
        return index;
    }
    int value = 0;
    const auto* end = raw.data() + raw.size();
    auto [ptr, ec] = std::from_chars(raw.data(), end, value);
    if (ec != std::errc() || ptr != end || raw.empty()) return std::nullopt;
    return value;
}

ReportParseResult parse_reports(std::istream& in, const RelationshipSchema& schema,
                                const Roster& roster, std::string_view source_name) {
    const auto table = csv::Table::parse(in, source_name);
    const std::size_t reporter_col = table.column(schema.reporter_column);
    const std::size_t target_col = table.column(schema.target_column);
    const std::size_t relation_col = table.column(schema.relation_column);
    const std::size_t survey_col = table.column(schema.survey_column);
    SurveyIndexing indexing = schema.survey_indexing;
    if (indexing.rank_values) {
        std::vector<std::string> raw;
        for (const auto& row : table.rows()) raw.push_back(row.fields[survey_col]);
        indexing.prepare(std::move(raw));
    }

    ReportParseResult result;
    for (const auto& row : table.rows()) {
        const auto& f = row.fields;
        std::string raw = f[relation_col];
        if (std::find(schema.ignored_relations.begin(), schema.ignored_relations.end(), raw) !=
            schema.ignored_relations.end()) {
            ++result.dropped_ignored;
            continue;
        }
        if (auto it = schema.relation_values.find(raw); it != schema.relation_values.end())
            raw = it->second;
        const auto relation = parse_relation(raw);
        if (!relation)
            throw InputError(fmt::format("{}:{}: unknown relation '{}'", source_name, row.line,
                                         f[relation_col]));
        const auto survey = indexing.resolve(f[survey_col]);
        if (!survey)
            throw InputError(fmt::format("{}:{}: unrecognized survey '{}'", source_name, row.line,
                                         f[survey_col]));
        if (!roster.contains(f[reporter_col]) || !roster.contains(f[target_col])) {
            ++result.dropped_external;
            continue;
        }
        if (f[reporter_col] == f[target_col]) {
            ++result.dropped_self;
            continue;
        }
        result.reports.push_back({f[reporter_col], f[target_col], *relation, *survey});
    }
    return result;
}

void write_reports(std::ostream& out, std::span<const RelationshipReport> reports) {
    csv::write_row(out, {"reporter", "target", "relation", "survey_index"});
    for (const auto& r : reports)
        csv::write_row(out, {r.reporter, r.target, to_string(r.relation), std::to_string(r.survey_index)});
}

// --- labels ---------------------------------------------------------------------

std::string to_string(Label l) {
    switch (l) {
        case Label::None: return "None";
        case Label::FBOnly: return "FBOnly";
        case Label::Socialize: return "Socialize";
        case Label::CloseFriend: return "CloseFriend";
    }
    return "unknown";
}

std::optional<Label> parse_label(std::string_view name) {
    for (std::size_t k = 0; k < kLabelCount; ++k)
        if (to_string(static_cast<Label>(k)) == name) return static_cast<Label>(k);
    return std::nullopt;
}

LabelMap::LabelMap(NodeIds node_ids)
    : node_ids_(std::move(node_ids)), labels_(node_ids_.size() * node_ids_.size(), Label::None) {}

void LabelMap::set(std::size_t i, std::size_t j, Label l) {
    if (i >= size() || j >= size() || i == j)
        throw InputError(fmt::format("invalid label pair ({}, {})", i, j));
    labels_[i * size() + j] = l;
}

std::array<std::size_t, kLabelCount> LabelMap::counts() const {
    std::array<std::size_t, kLabelCount> out{};
    for (std::size_t i = 0; i < size(); ++i)
        for (std::size_t j = 0; j < size(); ++j)
            if (i != j) ++out[static_cast<std::size_t>((*this)(i, j))];
    return out;
}

int report_threshold(int survey_count) {
    if (survey_count < 1) throw InputError("survey count must be at least 1");
    return (survey_count + 1) / 2;
}

LabelingResult label_relationships(std::span<const RelationshipReport> reports, int survey_count,
                                   const Roster& roster) {
    const int threshold = report_threshold(survey_count);
    const std::size_t n = roster.size();

    // Distinct surveys per (pair, relation); repeated rows within one survey
    // count once.
    std::set<std::tuple<std::size_t, std::size_t, int, int>> seen;
    std::vector<std::array<int, 3>> tallies(n * n, {0, 0, 0});
    for (const auto& r : reports) {
        if (r.survey_index < 1 || r.survey_index > survey_count)
            throw InputError(fmt::format("report {} -> {} has survey index {} outside 1..{}",
                                         r.reporter, r.target, r.survey_index, survey_count));
        const std::size_t i = roster.index(r.reporter);
        const std::size_t j = roster.index(r.target);
        if (i == j) throw InputError(fmt::format("self-report by '{}'", r.reporter));
        const int rel = static_cast<int>(r.relation);
        if (seen.emplace(i, j, rel, r.survey_index).second) ++tallies[i * n + j][rel];
    }

    LabelingResult result{LabelMap(roster.ids()), {}};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const auto& t = tallies[i * n + j];
            const bool cf = t[static_cast<int>(Relation::close_friend)] >= threshold;
            const bool sc = t[static_cast<int>(Relation::socialize_twice_week)] >= threshold;
            const bool fb = t[static_cast<int>(Relation::facebook_all_tagged)] >= threshold;
            Label label = cf ? Label::CloseFriend
                        : sc ? Label::Socialize
                        : fb ? Label::FBOnly
                             : Label::None;
            result.labels.set(i, j, label);

            std::vector<Relation> missing;
            if (cf && !sc) missing.push_back(Relation::socialize_twice_week);
            if ((cf || sc) && !fb) missing.push_back(Relation::facebook_all_tagged);
            if (!missing.empty())
                result.violations.push_back({roster.ids()[i], roster.ids()[j], label, std::move(missing)});
        }
    return result;
}

void write_labels(std::ostream& out, const LabelMap& labels) {
    csv::write_row(out, {"src", "dst", "label"});
    const auto& ids = labels.node_ids();
    for (std::size_t i = 0; i < labels.size(); ++i)
        for (std::size_t j = 0; j < labels.size(); ++j)
            if (i != j) csv::write_row(out, {ids[i], ids[j], to_string(labels(i, j))});
}

LabelMap read_labels(std::istream& in, const Roster& roster) {
    const auto table = csv::Table::parse(in, "labels.csv");
    const std::size_t src_col = table.column("src");
    const std::size_t dst_col = table.column("dst");
    const std::size_t label_col = table.column("label");
    LabelMap labels(roster.ids());
    for (const auto& row : table.rows()) {
        const auto label = parse_label(row.fields[label_col]);
        if (!label)
            throw InputError(
                fmt::format("labels.csv:{}: unknown label '{}'", row.line, row.fields[label_col]));
        labels.set(roster.index(row.fields[src_col]), roster.index(row.fields[dst_col]), *label);
    }
    return labels;
}

}  // namespace mplx

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mplx/core.hpp"

namespace mplx {

// Ordered participant list with O(1) lookup.
class Roster {
public:
    Roster() = default;
    explicit Roster(NodeIds ids);

    const NodeIds& ids() const { return ids_; }
    std::size_t size() const { return ids_.size(); }
    bool contains(const std::string& id) const { return index_.count(id) != 0; }
    std::optional<std::size_t> find(const std::string& id) const;
    // Throws InputError if the id is not on the roster.
    std::size_t index(const std::string& id) const;

private:
    NodeIds ids_;
    std::unordered_map<std::string, std::size_t> index_;
};

// One participant id per line; blank lines and '#' comments are skipped.
Roster read_roster(std::istream& in);

// --- timestamps ----------------------------------------------------------------

enum class TimestampFormat { iso8601, unix_seconds, date };

TimestampFormat parse_timestamp_format(const std::string& name);
// UTC seconds since the epoch. Accepts "YYYY-MM-DD", "YYYY-MM-DD[T ]HH:MM:SS",
// optional fractional seconds and a trailing Z or +HH:MM / -HH:MM offset.
std::optional<std::int64_t> parse_iso8601(std::string_view text);
std::optional<std::int64_t> parse_timestamp(std::string_view text, TimestampFormat format);
std::string format_iso8601(std::int64_t seconds);

// --- interaction events --------------------------------------------------------

enum class Channel { call, sms, proximity };

std::optional<Channel> parse_channel(std::string_view name);
std::string to_string(Channel c);
// Canonical layer name for a channel: calls, sms, proximity.
std::string layer_name(Channel c);

struct InteractionEvent {
    std::string src;
    std::string dst;
    Channel channel;
    std::int64_t timestamp;

    friend bool operator==(const InteractionEvent&, const InteractionEvent&) = default;
};

struct EventSchema {
    std::string src_column = "src";
    std::string dst_column = "dst";
    std::string channel_column = "channel";
    std::string timestamp_column = "timestamp_iso8601";
    TimestampFormat timestamp_format = TimestampFormat::iso8601;
    // Set when a source file holds one channel and has no channel column.
    std::optional<Channel> fixed_channel;
    // Native channel spellings mapped to canonical names.
    std::map<std::string, std::string> channel_values;
    std::optional<std::int64_t> window_start;
    std::optional<std::int64_t> window_end;
    // Phone logs record both directions from the owner's side; rows whose
    // direction column holds one of these values are swapped to dst -> src.
    std::string incoming_column;
    std::vector<std::string> incoming_values;
};

struct EventParseResult {
    std::vector<InteractionEvent> events;
    std::size_t dropped_external = 0;       // an endpoint is not on the roster
    std::size_t dropped_self = 0;           // src == dst
    std::size_t dropped_out_of_window = 0;
};

EventParseResult parse_events(std::istream& in, const EventSchema& schema, const Roster& roster,
                              std::string_view source_name = "events.csv");

void write_events(std::ostream& out, std::span<const InteractionEvent> events);

// Calls and SMS give directed layers (edge i->j iff i contacted j at least
// once); proximity gives an undirected layer. Events on other channels are
// ignored.
Layer build_layer(std::span<const InteractionEvent> events, Channel channel, const Roster& roster);

MultiplexGraph build_multiplex(std::span<const InteractionEvent> events, const Roster& roster);

// --- relationship surveys --------------------------------------------------------

enum class Relation { close_friend, socialize_twice_week, facebook_all_tagged };

std::optional<Relation> parse_relation(std::string_view name);
std::string to_string(Relation r);

struct RelationshipReport {
    std::string reporter;
    std::string target;
    Relation relation;
    int survey_index;
};

// Maps a raw survey column onto 1-based survey indices.
struct SurveyIndexing {
    // Exact value -> index, e.g. "2008.09" -> 1.
    std::map<std::string, int> values;
    // Ascending survey start dates; a date belongs to the last survey that
    // started on or before it.
    std::vector<std::string> start_dates;
    // Number the distinct raw values 1..k in sorted order.
    bool rank_values = false;

    bool empty() const { return values.empty() && start_dates.empty() && !rank_values; }
    // Replaces `values` with the ranking of `raw_values` when rank_values is set.
    void prepare(std::vector<std::string> raw_values);
    // Integer passthrough when no mapping is configured.
    std::optional<int> resolve(std::string_view raw) const;
};

struct RelationshipSchema {
    std::string reporter_column = "reporter";
    std::string target_column = "target";
    std::string relation_column = "relation";
    std::string survey_column = "survey_index";
    std::map<std::string, std::string> relation_values;
    // Native relation values that are skipped rather than rejected.
    std::vector<std::string> ignored_relations;
    SurveyIndexing survey_indexing;
};

struct ReportParseResult {
    std::vector<RelationshipReport> reports;
    std::size_t dropped_external = 0;
    std::size_t dropped_ignored = 0;
    std::size_t dropped_self = 0;
};

ReportParseResult parse_reports(std::istream& in, const RelationshipSchema& schema,
                                const Roster& roster,
                                std::string_view source_name = "relationships.csv");

void write_reports(std::ostream& out, std::span<const RelationshipReport> reports);

// Ordered from weakest to strongest.
enum class Label { None = 0, FBOnly = 1, Socialize = 2, CloseFriend = 3 };

inline constexpr std::size_t kLabelCount = 4;
std::string to_string(Label l);
std::optional<Label> parse_label(std::string_view name);

// Directed label for every ordered pair of distinct roster nodes.
class LabelMap {
public:
    explicit LabelMap(NodeIds node_ids);

    const NodeIds& node_ids() const { return node_ids_; }
    std::size_t size() const { return node_ids_.size(); }
    Label operator()(std::size_t i, std::size_t j) const { return labels_[i * size() + j]; }
    void set(std::size_t i, std::size_t j, Label l);

    // Pair counts per label over ordered pairs i != j; sums to N(N-1).
    std::array<std::size_t, kLabelCount> counts() const;

private:
    NodeIds node_ids_;
    std::vector<Label> labels_;
};

struct HierarchyViolation {
    std::string src;
    std::string dst;
    Label label;
    std::vector<Relation> missing;
};

struct LabelingResult {
    LabelMap labels;
    std::vector<HierarchyViolation> violations;
};

// Minimum number of surveys (out of `survey_count`) a relation must be
// reported in: at least half, rounded up.
int report_threshold(int survey_count);

LabelingResult label_relationships(std::span<const RelationshipReport> reports, int survey_count,
                                   const Roster& roster);

void write_labels(std::ostream& out, const LabelMap& labels);
LabelMap read_labels(std::istream& in, const Roster& roster);

}  // namespace mplx

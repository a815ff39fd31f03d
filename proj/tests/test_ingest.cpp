#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "mplx/ingest.hpp"

using namespace mplx;

namespace {

Roster roster4() { return Roster({"a", "b", "c", "d"}); }

EventParseResult parse(const std::string& text, const EventSchema& schema = {}) {
    std::istringstream in(text);
    return parse_events(in, schema, roster4());
}

std::vector<RelationshipReport> reports_for(const std::string& reporter, const std::string& target,
                                            Relation rel, std::vector<int> surveys) {
    std::vector<RelationshipReport> out;
    for (int s : surveys) out.push_back({reporter, target, rel, s});
    return out;
}

void append(std::vector<RelationshipReport>& to, std::vector<RelationshipReport> more) {
    to.insert(to.end(), more.begin(), more.end());
}

}  // namespace

TEST_CASE("roster reading") {
    std::istringstream in("# ids\na\n\n b \nc\n");
    const auto r = read_roster(in);
    CHECK(r.ids() == NodeIds{"a", "b", "c"});
    CHECK(r.index("b") == 1);
    CHECK_THROWS_AS(r.index("z"), InputError);
    std::istringstream dup("a\na\n");
    CHECK_THROWS_AS(read_roster(dup), InputError);
}

TEST_CASE("iso8601 timestamps") {
    CHECK(parse_iso8601("1970-01-01T00:00:00Z") == 0);
    CHECK(parse_iso8601("2008-09-01T12:00:00Z") == 1220270400);
    CHECK(parse_iso8601("2008-09-01 12:00:00") == 1220270400);
    CHECK(parse_iso8601("2008-09-01T14:00:00+02:00") == 1220270400);
    CHECK(parse_iso8601("2008-09-01T12:00:00.250Z") == 1220270400);
    CHECK(parse_iso8601("2008-09-01") == 1220227200);
    CHECK_FALSE(parse_iso8601("2008-02-30"));
    CHECK_FALSE(parse_iso8601("2008-09-01T25:00:00Z"));
    CHECK_FALSE(parse_iso8601("yesterday"));
    for (std::int64_t t : {0LL, 1220270400LL, 951782400LL, -86401LL})
        CHECK(parse_iso8601(format_iso8601(t)) == t);
    CHECK(parse_timestamp("1220270400", TimestampFormat::unix_seconds) == 1220270400);
    CHECK_FALSE(parse_timestamp("12x", TimestampFormat::unix_seconds));
}

TEST_CASE("parse_events") {
    SUBCASE("header only") { CHECK(parse("src,dst,channel,timestamp_iso8601\n").events.empty()); }
    SUBCASE("one call") {
        const auto r = parse("src,dst,channel,timestamp_iso8601\na,b,call,2008-09-01T12:00:00Z\n");
        REQUIRE(r.events.size() == 1);
        CHECK(r.events[0] == InteractionEvent{"a", "b", Channel::call, 1220270400});
    }
    SUBCASE("external contact dropped") {
        const auto r = parse(
            "src,dst,channel,timestamp_iso8601\n"
            "a,b,sms,2008-09-01T12:00:00Z\n"
            "a,x99,call,2008-09-01T12:00:00Z\n");
        CHECK(r.events.size() == 1);
        CHECK(r.dropped_external == 1);
    }
    SUBCASE("errors carry line numbers") {
        try {
            parse("src,dst,channel,timestamp_iso8601\na,b,call,2008-09-01\na,b,fax,2008-09-01\n");
            FAIL("expected an error");
        } catch (const InputError& e) {
            CHECK(std::string(e.what()).find(":3:") != std::string::npos);
            CHECK(std::string(e.what()).find("fax") != std::string::npos);
        }
        CHECK_THROWS_AS(parse("src,dst,channel,timestamp_iso8601\na,b,call,notatime\n"), InputError);
        CHECK_THROWS_AS(parse("src,dst,channel,timestamp_iso8601\na,b,call\n"), InputError);
        CHECK_THROWS_AS(parse("src,dst,when\n"), InputError);
    }
    SUBCASE("fixed channel and window") {
        EventSchema schema;
        schema.src_column = "user_id";
        schema.dst_column = "other";
        schema.timestamp_column = "time";
        schema.timestamp_format = TimestampFormat::unix_seconds;
        schema.fixed_channel = Channel::proximity;
        schema.window_start = 100;
        schema.window_end = 200;
        const auto r = parse("user_id,other,time\na,b,150\nb,c,50\nc,c,150\n", schema);
        CHECK(r.events.size() == 1);
        CHECK(r.events[0].channel == Channel::proximity);
        CHECK(r.dropped_out_of_window == 1);
        CHECK(r.dropped_self == 1);
    }
    SUBCASE("quoted fields") {
        const auto r = parse("src,dst,channel,timestamp_iso8601\r\n\"a\",\"b\",\"sms\",\"2008-09-01\"\r\n");
        CHECK(r.events.size() == 1);
    }
}

TEST_CASE("build_layer") {
    const auto roster = roster4();
    std::vector<InteractionEvent> events{{"a", "b", Channel::call, 0},
                                         {"a", "b", Channel::call, 5},
                                         {"c", "a", Channel::call, 1},
                                         {"b", "c", Channel::proximity, 2},
                                         {"c", "b", Channel::proximity, 3}};
    const Layer calls = build_layer(events, Channel::call, roster);
    CHECK(calls.directed());
    CHECK(calls.name() == "calls");
    CHECK(calls.edge_count() == 2);
    CHECK(calls.has_edge(0, 1));
    CHECK_FALSE(calls.has_edge(1, 0));
    const Layer prox = build_layer(events, Channel::proximity, roster);
    CHECK_FALSE(prox.directed());
    CHECK(prox.edge_count() == 1);
    CHECK(build_layer(events, Channel::sms, roster).edge_count() == 0);

    std::vector<InteractionEvent> stray{{"a", "q", Channel::call, 0}};
    CHECK_THROWS_AS(build_layer(stray, Channel::call, roster), InputError);
}

TEST_CASE("labeling thresholds, direction and hierarchy") {
    const auto roster = roster4();
    std::vector<RelationshipReport> reports;
    // a -> b: close friend in 3 of 6 surveys, plus socialize and facebook
    append(reports, reports_for("a", "b", Relation::close_friend, {1, 3, 5}));
    append(reports, reports_for("a", "b", Relation::socialize_twice_week, {1, 2, 3, 4}));
    append(reports, reports_for("a", "b", Relation::facebook_all_tagged, {1, 2, 3, 4, 5, 6}));
    // a -> c: facebook 6/6, socialize 1/6
    append(reports, reports_for("a", "c", Relation::facebook_all_tagged, {1, 2, 3, 4, 5, 6}));
    append(reports, reports_for("a", "c", Relation::socialize_twice_week, {2}));
    // c -> d: close friend 2/6 only, repeated rows in one survey
    append(reports, reports_for("c", "d", Relation::close_friend, {1, 2, 2, 2}));
    // d -> a: socialize 3/6 without facebook
    append(reports, reports_for("d", "a", Relation::socialize_twice_week, {4, 5, 6}));

    const auto result = label_relationships(reports, 6, roster);
    const auto& l = result.labels;
    CHECK(l(0, 1) == Label::CloseFriend);
    CHECK(l(1, 0) == Label::None);  // not reciprocal
    CHECK(l(0, 2) == Label::FBOnly);
    CHECK(l(2, 3) == Label::None);
    CHECK(l(3, 0) == Label::Socialize);
    CHECK(l(1, 2) == Label::None);

    REQUIRE(result.violations.size() == 1);
    CHECK(result.violations[0].src == "d");
    CHECK(result.violations[0].missing == std::vector<Relation>{Relation::facebook_all_tagged});

    const auto counts = l.counts();
    CHECK(counts[0] + counts[1] + counts[2] + counts[3] == 12);
}

TEST_CASE("labeling errors and odd survey counts") {
    const auto roster = roster4();
    CHECK(report_threshold(6) == 3);
    CHECK(report_threshold(5) == 3);
    CHECK(report_threshold(1) == 1);
    const auto bad = reports_for("a", "b", Relation::close_friend, {7});
    CHECK_THROWS_AS(label_relationships(bad, 6, roster), InputError);
    CHECK_THROWS_AS(label_relationships({}, 0, roster), InputError);
    const auto odd = reports_for("a", "b", Relation::close_friend, {1, 2, 3});
    CHECK(label_relationships(odd, 5, roster).labels(0, 1) == Label::CloseFriend);
}

TEST_CASE("adding a report never weakens a label") {
    const auto roster = roster4();
    const Relation rels[] = {Relation::close_friend, Relation::socialize_twice_week,
                             Relation::facebook_all_tagged};
    std::uint64_t state = 17;
    auto draw = [&](std::uint64_t bound) {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return (state >> 33) % bound;
    };
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<RelationshipReport> reports;
        const std::size_t count = draw(20);
        for (std::size_t k = 0; k < count; ++k)
            reports.push_back({"a", "b", rels[draw(3)], static_cast<int>(1 + draw(6))});
        const auto before = label_relationships(reports, 6, roster).labels(0, 1);
        reports.push_back({"a", "b", rels[draw(3)], static_cast<int>(1 + draw(6))});
        const auto after = label_relationships(reports, 6, roster).labels(0, 1);
        CHECK(static_cast<int>(after) >= static_cast<int>(before));
    }
}

TEST_CASE("parse_reports with native spellings") {
    RelationshipSchema schema;
    schema.reporter_column = "id.A";
    schema.target_column = "id.B";
    schema.relation_column = "relationship";
    schema.survey_column = "survey.date";
    schema.relation_values = {{"CloseFriend", "close_friend"}};
    schema.ignored_relations = {"PoliticalDiscussant"};
    schema.survey_indexing.start_dates = {"2008-09-01", "2008-10-15", "2008-12-01"};
    std::istringstream in(
        "id.A,id.B,relationship,survey.date\n"
        "a,b,CloseFriend,2008-10-20\n"
        "a,b,PoliticalDiscussant,2008-10-20\n"
        "a,z,CloseFriend,2008-12-20\n");
    const auto r = parse_reports(in, schema, roster4());
    REQUIRE(r.reports.size() == 1);
    CHECK(r.reports[0].survey_index == 2);
    CHECK(r.dropped_ignored == 1);
    CHECK(r.dropped_external == 1);

    std::istringstream early("id.A,id.B,relationship,survey.date\na,b,CloseFriend,2008-01-01\n");
    CHECK_THROWS_AS(parse_reports(early, schema, roster4()), InputError);
}

TEST_CASE("label csv round trip") {
    const auto roster = roster4();
    const auto reports = reports_for("b", "d", Relation::socialize_twice_week, {1, 2, 3});
    const auto labels = label_relationships(reports, 6, roster).labels;
    std::stringstream io;
    write_labels(io, labels);
    const auto back = read_labels(io, roster);
    CHECK(back(1, 3) == Label::Socialize);
    CHECK(back.counts() == labels.counts());
}

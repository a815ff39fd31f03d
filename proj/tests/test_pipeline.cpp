#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "mplx/adapter.hpp"
#include "mplx/hash.hpp"
#include "mplx/pipeline.hpp"
#include "mplx/synth.hpp"
#include "mplx/verify.hpp"

using namespace mplx;
namespace fs = std::filesystem;

namespace {

const fs::path source_dir = MPLX_SOURCE_DIR;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("mplx_test_pipeline_" + name);
    fs::remove_all(p);
    return p;
}

RunConfig synthetic_run(const fs::path& dir, std::uint64_t seed = 3) {
    SyntheticSpec spec;
    spec.n_nodes = 30;
    spec.seed = seed;
    spec.proximity.homophily = 1.0;
    write_dataset(generate_synthetic(spec), dir / "data");
    RunConfig c;
    c.events = dir / "data/events.csv";
    c.relationships = dir / "data/relationships.csv";
    c.surveys = dir / "data/surveys.csv";
    c.roster = dir / "data/roster.txt";
    c.permutations = 200;
    c.seed = 17;
    c.output_dir = dir / "out";
    return c;
}

std::set<std::string> listing(const fs::path& dir) {
    std::set<std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) out.insert(e.path().filename().string());
    return out;
}

}  // namespace

TEST_CASE("analysis writes every artifact and a matching manifest") {
    const auto dir = scratch("manifest");
    const auto config = synthetic_run(dir);
    const auto report = run_pipeline(config);

    std::set<std::string> listed;
    for (const auto& a : report.manifest) {
        listed.insert(a.path);
        CHECK(a.sha256 == sha256_file(config.output_dir / a.path));
        CHECK(!a.kind.empty());
    }
    auto on_disk = listing(config.output_dir);
    CHECK(on_disk.erase(kManifestFile) == 1);
    CHECK(listed == on_disk);
    for (const char* name : {"multiplex.json", "labels.csv", "layers.csv", "weights.csv", "distance.csv", "pmf.csv",
                             "pmf.json", "correlation.json", "correlation.csv", "conditional.json", "deltas.csv",
                             "delta_summary.csv", "summary.json", "similarity_music.csv", "conditional_health.csv"})
        CHECK_MESSAGE(listed.count(name) == 1, name);

    const auto manifest = nlohmann::json::parse(slurp(config.output_dir / kManifestFile));
    CHECK(manifest == manifest_to_json(report.manifest));
    for (std::size_t k = 1; k < manifest.size(); ++k) CHECK(manifest[k - 1]["path"] < manifest[k]["path"]);

    const auto& s = report.summary;
    CHECK(s["layers"].size() == 3);
    std::size_t connected = 0;
    for (const auto& [label, n] : s["label_counts"]["connected_pairs"].items()) connected += n.get<std::size_t>();
    for (const auto& p : s["pmf"])
        if (p["aggregation"] == "union_all") CHECK(p["support_count"] == connected);
    std::size_t all = 0;
    for (const auto& [label, n] : s["label_counts"]["all_pairs"].items()) all += n.get<std::size_t>();
    CHECK(all == 30 * 29);
    for (const char* cat : {"political", "health", "music", "situational"}) {
        CHECK(s["correlation"][cat]["p_value"].is_number());
        CHECK(s["correlation"][cat]["spearman_rho"].is_number());
    }
    fs::remove_all(dir);
}

TEST_CASE("layer table counts ordered pairs") {
    const auto dir = scratch("layers");
    const auto config = synthetic_run(dir);
    const auto report = run_pipeline(config);
    const auto m = multiplex_from_json(nlohmann::json::parse(slurp(config.output_dir / "multiplex.json")));
    for (const auto& row : report.summary["layers"]) {
        const auto& l = m.layer(row["name"].get<std::string>());
        const std::size_t arcs = l.directed() ? l.edge_count() : 2 * l.edge_count();
        CHECK(row["edges"] == arcs);
        CHECK(row["nodes"] == l.active_node_count());
        CHECK(row["avg_degree"].get<double>() == doctest::Approx(double(arcs) / l.active_node_count()));
    }
    fs::remove_all(dir);
}

TEST_CASE("reruns are byte-identical regardless of thread count") {
    const auto dir = scratch("rerun");
    auto config = synthetic_run(dir);
    config.threads = 1;
    run_pipeline(config);
    const auto first = slurp(config.output_dir / kManifestFile);
    config.output_dir = dir / "out2";
    config.threads = 4;
    run_pipeline(config);
    CHECK(first == slurp(config.output_dir / kManifestFile));
    for (const auto& name : listing(config.output_dir))
        CHECK(slurp(dir / "out" / name) == slurp(dir / "out2" / name));

    config.output_dir = dir / "out3";
    config.seed = 18;
    run_pipeline(config);
    CHECK(first != slurp(config.output_dir / kManifestFile));
    fs::remove_all(dir);
}

TEST_CASE("a failing run leaves no partial outputs") {
    const auto dir = scratch("rollback");
    auto config = synthetic_run(dir);

    SUBCASE("failure while writing") {
        fs::create_directories(config.output_dir / "weights.csv");  // blocks the file
        try {
            run_pipeline(config);
            FAIL("expected a failure");
        } catch (const StageError& e) {
            CHECK(e.stage() == "write");
        }
        CHECK(listing(config.output_dir) == std::set<std::string>{"weights.csv"});
    }
    SUBCASE("failure while ingesting") {
        spit(config.events, "src,dst,channel,timestamp_iso8601\nS001,S002,fax,2008-10-01T00:00:00Z\n");
        try {
            run_pipeline(config);
            FAIL("expected a failure");
        } catch (const StageError& e) {
            CHECK(e.stage() == "ingest");
            CHECK(std::string(e.what()).find("fax") != std::string::npos);
        }
        CHECK(!fs::exists(config.output_dir));
    }
    fs::remove_all(dir);
}

TEST_CASE("run config validation") {
    const auto dir = scratch("config");
    auto config = synthetic_run(dir);
    CHECK_NOTHROW(config.validate());

    auto c = config;
    c.permutations = 50;
    CHECK_THROWS_AS(c.validate(), InputError);
    c = config;
    c.seed.reset();
    CHECK_THROWS_AS(c.validate(), InputError);
    c.permutations = 0;
    CHECK_NOTHROW(c.validate());
    c = config;
    c.surveys = dir / "missing.csv";
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("missing.csv"), InputError);
    c = config;
    c.output_dir.clear();
    CHECK_THROWS_AS(c.validate(), InputError);
    c = config;
    c.bins.distance_edges = {0.0, 0.5, 0.4};
    CHECK_THROWS_AS(c.validate(), InputError);
    CHECK_THROWS_AS(run_pipeline(c), StageError);

    const auto round = RunConfig::from_json(config.to_json());
    CHECK(round.to_json() == config.to_json());
    fs::remove_all(dir);
}

TEST_CASE("shipped configs parse") {
    std::ifstream run_file(source_dir / "config/run.example.json");
    const auto run = RunConfig::from_json(nlohmann::json::parse(run_file), source_dir / "config");
    CHECK(run.adapter == source_dir / "config/adapters/mit_social_evolution.json");
    CHECK(run.permutations == 1000);
    CHECK(run.seed.has_value());

    std::ifstream adapter_file(run.adapter);
    const auto adapter = Adapter::from_json(nlohmann::json::parse(adapter_file));
    CHECK(adapter.events.size() == 3);
    CHECK(adapter.surveys.size() == 4);
    REQUIRE(adapter.relationships);
}

TEST_CASE("native dataset through the shipped adapter") {
    const auto dir = scratch("native");
    const auto data = dir / "mit";
    spit(data / "Subjects.csv", "user_id,year_school,floor\n1,Freshman,3\n2,Sophomore,3\n3,Junior,4\n4,Senior,5\n");
    spit(data / "Calls.csv",
         "user_id,time_stamp,duration,dest_user_id_if_known,dest_phone_hash\n"
         "1,2008-10-05 10:00:00,60,2,aa\n"
         "2,2008-10-06 10:00:00,60,1,aa\n"
         "1,2008-09-01 10:00:00,60,3,bb\n"   // before the study window
         "1,2008-10-07 10:00:00,60,,cc\n");  // unknown contact
    spit(data / "SMS.csv",
         "user.id,time,incoming,dest.user.id.if.known,dest.phone.hash\n"
         "1,2008-11-01 12:00:00,0,2,aa\n"
         "3,2008-11-01 12:00:00,1,1,aa\n");  // incoming: 1 texted 3
    spit(data / "Proximity.csv",
         "user.id,remote.user.id.if.known,time,prob2\n"
         "1,2,2008-10-10 09:00:00,0.9\n"
         "3,1,2008-10-10 09:00:00,0.9\n"
         "2,4,2008-10-11 09:00:00,0.8\n"
         "4,2,2008-10-11 09:05:00,0.8\n");
    std::string rel = "id.A,id.B,relationship,survey.date\n";
    const char* dates[] = {"2008-09-09", "2008-10-19", "2008-12-13", "2009-03-05", "2009-04-17", "2009-05-22"};
    for (int k = 0; k < 6; ++k) rel += fmt::format("1,2,FacebookAllTaggedPhotos,{}\n", dates[k]);
    for (int k = 0; k < 3; ++k) rel += fmt::format("1,2,CloseFriend,{}\n", dates[k]);
    for (int k = 0; k < 3; ++k) rel += fmt::format("1,2,SocializeTwicePerWeek,{}\n", dates[k]);
    for (int k = 0; k < 2; ++k) rel += fmt::format("2,1,CloseFriend,{}\n", dates[k]);
    rel += "3,4,PoliticalDiscussant,2008-09-09\n";
    spit(data / "RelationshipsFromSurveys.csv", rel);
    spit(data / "Politics.csv",
         "user_id,survey.month,interested_in_politics,liberal_or_conservative\n"
         "1,2008.09,Very interested,Liberal\n2,2008.09,Slightly interested,Conservative\n"
         "3,2008.09,Somewhat interested,Extremely liberal\n4,2008.09,Not at all interested,Slightly liberal\n"
         "1,2008.10,Very interested,Extremely liberal\n");
    spit(data / "Health.csv",
         "user_id,survey.month,current_weight,current_height,salads_per_week,veggies_fruits_per_day,"
         "aerobic_per_week,sports_per_week\n"
         "1,2008.09,150,70,2,3,3,1\n2,2008.09,180,72,1,2,1,4\n3,2008.09,130,64,5,5,4,0\n4,2008.09,200,75,0,1,0,2\n");
    std::string music = "user_id,survey.month";
    const char* genres[] = {"indie / alternative rock", "techno / lounge / electronic", "heavy metal / hardcore",
                            "classic rock", "pop / top 40", "hip-hop / r&b", "jazz", "classical", "country / folk",
                            "showtunes", "other"};
    for (const char* g : genres) music += fmt::format(",{}", g);
    music += '\n';
    const char* levels[] = {"No interest", "Slight interest", "Moderate interest", "High interest"};
    for (int p = 1; p <= 4; ++p) {
        music += fmt::format("{},2009.04", p);
        for (int g = 0; g < 11; ++g) music += fmt::format(",{}", levels[(p + g) % 4]);
        music += '\n';
    }
    spit(data / "MusicGenrePreference.csv", music);

    std::ifstream adapter_file(source_dir / "config/adapters/mit_social_evolution.json");
    auto adapter = Adapter::from_json(nlohmann::json::parse(adapter_file));
    const auto canonical = run_adapter(adapter, data);
    CHECK(canonical.roster.size() == 4);
    CHECK(canonical.events.dropped_out_of_window == 1);
    CHECK(canonical.events.dropped_external == 1);
    CHECK(canonical.reports.dropped_ignored == 1);

    RunConfig c;
    c.adapter = source_dir / "config/adapters/mit_social_evolution.json";
    c.dataset_dir = data;
    c.permutations = 0;
    c.output_dir = dir / "out";
    const auto report = run_pipeline(c);
    const auto m = multiplex_from_json(nlohmann::json::parse(slurp(c.output_dir / "multiplex.json")));
    const auto& ids = m.node_ids();
    const auto at = [&](const char* id) { return std::size_t(std::find(ids.begin(), ids.end(), id) - ids.begin()); };
    CHECK(m.layer("calls").edge_count() == 2);
    CHECK(m.layer("sms").has_edge(at("1"), at("2")));
    CHECK(m.layer("sms").has_edge(at("1"), at("3")));
    CHECK(!m.layer("sms").has_edge(at("3"), at("1")));
    CHECK(m.layer("proximity").edge_count() == 3);
    std::ifstream label_file(c.output_dir / "labels.csv");
    const auto labels = read_labels(label_file, Roster(ids));
    CHECK(labels(at("1"), at("2")) == Label::CloseFriend);
    CHECK(labels(at("2"), at("1")) == Label::None);
    const auto& pol = report.summary["diagnostics"]["profiles"]["political"];
    CHECK(pol["defined"] == 4);

    SUBCASE("checksum mismatch is rejected") {
        adapter.checksums["Calls.csv"] = sha256_hex("something else");
        CHECK_THROWS_WITH_AS(run_adapter(adapter, data), doctest::Contains("checksum"), InputError);
        adapter.checksums["Calls.csv"] = sha256_file(data / "Calls.csv");
        CHECK_NOTHROW(run_adapter(adapter, data));
    }
    fs::remove_all(dir);
}

TEST_CASE("reference verification") {
    nlohmann::json s;
    s["layers"] = {{{"name", "proximity"}, {"nodes", 74}, {"edges", 4526}},
                   {{"name", "calls"}, {"nodes", 69}, {"edges", 401}},
                   {{"name", "sms"}, {"nodes", 33}, {"edges", 70}}};
    s["label_counts"]["connected_pairs"] = {{"None", 2179}, {"FBOnly", 1299}, {"Socialize", 586}, {"CloseFriend", 462}};
    s["overlap"]["sms_calls_overlap"] = 0.915;
    s["pmf"] = {{{"aggregation", "intersection_all"}, {"probabilities", {{"CloseFriend", 0.78}}}}};
    const std::pair<const char*, std::pair<double, double>> values[] = {
        {"political", {0.6, 0.78}}, {"music", {0.49, 0.81}}, {"health", {0.6, 0.79}}, {"situational", {0.56, 0.73}}};
    for (const auto& [cat, v] : values) {
        s["correlation"][cat]["graph_correlation"] = v.first + 0.04;
        s["correlation"][cat]["spearman_rho"] = v.second - 0.04;
    }
    auto checks = verify_reference(s);
    CHECK(checks.size() == 20);
    for (const auto& c : checks) CHECK_MESSAGE(c.passed, format_check(c));

    s["layers"][1]["edges"] = 402;
    s["correlation"]["music"]["graph_correlation"] = 0.55;
    s["overlap"].erase("sms_calls_overlap");
    checks = verify_reference(s);
    std::set<std::string> failed;
    for (const auto& c : checks)
        if (!c.passed) failed.insert(c.name);
    CHECK(failed == std::set<std::string>{"layer calls edges", "graph correlation music", "sms-calls overlap"});
    for (const auto& c : checks)
        if (c.name == "sms-calls overlap") CHECK(format_check(c).find("missing") != std::string::npos);
}

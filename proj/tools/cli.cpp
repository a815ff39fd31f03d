#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "mplx/adapter.hpp"
#include "mplx/ingest.hpp"
#include "mplx/pipeline.hpp"
#include "mplx/synth.hpp"
#include "mplx/verify.hpp"

namespace fs = std::filesystem;

namespace mplx::cli {

namespace {

class Log {
public:
    Log(std::ostream& err) : err_(err) {}
    bool quiet = false;
    bool json = false;

    void info(const std::string& message, const nlohmann::json& fields = nlohmann::json::object()) {
        if (!quiet) emit("info", message, fields);
    }
    void error(const std::string& message, const nlohmann::json& fields = nlohmann::json::object()) {
        emit("error", message, fields);
    }

private:
    void emit(const char* level, const std::string& message, const nlohmann::json& fields) {
        if (json) {
            nlohmann::json line = fields;
            line["level"] = level;
            line["message"] = message;
            err_ << line.dump() << '\n';
        } else {
            err_ << level << ": " << message << '\n';
        }
    }
    std::ostream& err_;
};

// Command-line overrides for RunConfig; only flags actually given are applied.
struct Overrides {
    std::string config;
    std::string events, relationships, surveys, roster, registry, adapter, dataset_dir, output_dir;
    int survey_count = 6;
    double distance_scale = 0.0;
    std::vector<double> distance_bins, similarity_bins;
    bool separate_no_path = true;
    std::size_t permutations = 1000;
    std::uint64_t seed = 0;
    bool mask_to_support = true;
    bool normalize = false;
    std::string correlation_mode, pair_mode;
    unsigned threads = 0;

    void attach(CLI::App& app, bool analysis) {
        app.add_option("--config", config, "Run config JSON (every field below in one document)");
        app.add_option("--events", events, "Canonical events CSV");
        app.add_option("--relationships", relationships, "Canonical relationship reports CSV");
        app.add_option("--surveys", surveys, "Canonical survey responses CSV");
        app.add_option("--roster", roster, "Participant roster, one id per line");
        app.add_option("--registry", registry, "Attribute registry JSON (default: built-in categories)");
        app.add_option("--adapter", adapter, "Native dataset adapter JSON");
        app.add_option("--dataset-dir", dataset_dir, "Directory holding the native dataset files");
        app.add_option("--survey-count", survey_count, "Number of relationship surveys (K)");
        app.add_option("--output-dir,--out", output_dir, "Output directory");
        if (!analysis) return;
        app.add_option("--distance-scale", distance_scale, "Edge length scale c in c*(1-mw)");
        app.add_option("--distance-bins", distance_bins, "Distance bin edges")->delimiter(',');
        app.add_option("--similarity-bins", similarity_bins, "Similarity bin edges")->delimiter(',');
        app.add_option("--separate-no-path", separate_no_path, "Keep unreachable pairs in their own bin (true/false)");
        app.add_option("--permutations", permutations, "Permutations for the significance test (0 disables)");
        app.add_option("--seed", seed, "Seed for all randomness");
        app.add_option("--mask-to-support", mask_to_support, "Restrict correlation sums to edges of the first matrix (true/false)");
        app.add_option("--normalize", normalize, "Min-max normalize profile attributes (true/false)");
        app.add_option("--correlation-mode", correlation_mode, "product_over_sums or cosine");
        app.add_option("--pair-mode", pair_mode, "Relationship PMF pairs: directed or unordered");
        app.add_option("--threads", threads, "Worker threads (0 = hardware)");
    }

    RunConfig resolve(const CLI::App& app) const {
        RunConfig c;
        if (!config.empty()) {
            std::ifstream in(config);
            if (!in) throw InputError(fmt::format("cannot read config '{}'", config));
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(in);
            } catch (const nlohmann::json::exception& e) {
                throw InputError(fmt::format("config '{}': {}", config, e.what()));
            }
            c = RunConfig::from_json(doc, fs::path(config).parent_path());
        }
        const auto given = [&](const char* flag) {
            const auto* opt = app.get_option_no_throw(flag);
            return opt != nullptr && opt->count() > 0;
        };
        const auto path = [&](const char* flag, const std::string& value, fs::path& target) {
            if (given(flag)) target = value;
        };
        path("--events", events, c.events);
        path("--relationships", relationships, c.relationships);
        path("--surveys", surveys, c.surveys);
        path("--roster", roster, c.roster);
        path("--registry", registry, c.registry);
        path("--adapter", adapter, c.adapter);
        path("--dataset-dir", dataset_dir, c.dataset_dir);
        path("--output-dir", output_dir, c.output_dir);
        if (given("--survey-count")) c.survey_count = survey_count;
        if (given("--distance-scale")) c.distance_scale = distance_scale;
        if (given("--distance-bins")) c.bins.distance_edges = distance_bins;
        if (given("--similarity-bins")) c.bins.similarity_edges = similarity_bins;
        if (given("--separate-no-path")) c.bins.separate_no_path = separate_no_path;
        if (given("--permutations")) c.permutations = permutations;
        if (given("--seed")) c.seed = seed;
        if (given("--mask-to-support")) c.mask_to_support = mask_to_support;
        if (given("--normalize")) c.normalize = normalize;
        if (given("--correlation-mode")) c.correlation_mode = parse_correlation_mode(correlation_mode);
        if (given("--pair-mode")) c.pair_mode = parse_pair_mode(pair_mode);
        if (given("--threads")) c.threads = threads;
        return c;
    }
};

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError(fmt::format("cannot read '{}'", path.string()));
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(fmt::format("'{}': {}", path.string(), e.what()));
    }
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
    body(out);
}

// --- ingest ------------------------------------------------------------------------

int cmd_ingest(const RunConfig& c, Log& log) {
    if (c.output_dir.empty()) throw InputError("--out is required");
    std::optional<Roster> roster;
    if (!c.roster.empty()) {
        std::ifstream in(c.roster);
        if (!in) throw InputError(fmt::format("cannot read '{}'", c.roster.string()));
        roster = read_roster(in);
    }
    CanonicalDataset data;
    if (!c.adapter.empty()) {
        data = run_adapter(Adapter::from_json(read_json(c.adapter)), c.dataset_dir, roster);
    } else {
        if (!roster) throw InputError("--roster is required without an adapter");
        data.roster = *roster;
        std::ifstream ev(c.events);
        if (!ev) throw InputError(fmt::format("cannot read '{}'", c.events.string()));
        data.events = parse_events(ev, {}, data.roster, c.events.filename().string());
        std::ifstream rel(c.relationships);
        if (!rel) throw InputError(fmt::format("cannot read '{}'", c.relationships.string()));
        data.reports = parse_reports(rel, {}, data.roster, c.relationships.filename().string());
    }
    const auto multiplex = build_multiplex(data.events.events, data.roster);
    const auto labeling = label_relationships(data.reports.reports, c.survey_count, data.roster);

    fs::create_directories(c.output_dir);
    write_file(c.output_dir / "roster.txt", [&](std::ostream& o) {
        for (const auto& id : data.roster.ids()) o << id << '\n';
    });
    write_file(c.output_dir / "events.csv", [&](std::ostream& o) { write_events(o, data.events.events); });
    write_file(c.output_dir / "relationships.csv", [&](std::ostream& o) { write_reports(o, data.reports.reports); });
    if (!c.adapter.empty())
        write_file(c.output_dir / "surveys.csv", [&](std::ostream& o) { write_surveys(o, data.surveys); });
    write_file(c.output_dir / "multiplex.json", [&](std::ostream& o) { o << to_json(multiplex).dump(2) << '\n'; });
    write_file(c.output_dir / "labels.csv", [&](std::ostream& o) { write_labels(o, labeling.labels); });

    for (const auto& l : multiplex.layers())
        log.info(fmt::format("layer {}: {} nodes, {} edges", l.name(), l.active_node_count(), l.edge_count()),
                 {{"layer", l.name()}, {"nodes", l.active_node_count()}, {"edges", l.edge_count()}});
    log.info(fmt::format("dropped {} external, {} self, {} out-of-window events", data.events.dropped_external,
                         data.events.dropped_self, data.events.dropped_out_of_window));
    if (!labeling.violations.empty())
        log.info(fmt::format("{} label hierarchy violations", labeling.violations.size()));
    return 0;
}

// --- synth -------------------------------------------------------------------------

struct SynthOptions {
    std::string out;
    SyntheticSpec spec;
    double homophily = 0.0;
};

int cmd_synth(SynthOptions& o, const CLI::App& app, Log& log) {
    if (app.count("--homophily")) o.spec.proximity.homophily = o.spec.calls.homophily = o.spec.sms.homophily = o.homophily;
    const auto data = generate_synthetic(o.spec);
    const auto files = write_dataset(data, o.out);
    // A run config next to the data so `analyze --config` works directly.
    nlohmann::json run = {{"events", "events.csv"},         {"relationships", "relationships.csv"},
                          {"surveys", "surveys.csv"},       {"roster", "roster.txt"},
                          {"survey_count", o.spec.surveys}, {"seed", o.spec.seed},
                          {"output_dir", "analysis"}};
    write_file(fs::path(o.out) / "run.json", [&](std::ostream& f) { f << run.dump(2) << '\n'; });
    log.info(fmt::format("wrote {} files to {}", files.size() + 1, o.out), {{"nodes", o.spec.n_nodes}, {"seed", o.spec.seed}});
    return 0;
}

// --- analyze / report / verify -----------------------------------------------------

int cmd_analyze(const RunConfig& c, std::ostream& out, Log& log) {
    const auto report = run_pipeline(c);
    for (const auto& a : report.manifest) out << a.sha256 << "  " << a.path << '\n';
    log.info(fmt::format("wrote {} artifacts to {}", report.manifest.size() + 1, c.output_dir.string()));
    return 0;
}

std::string fmt_value(const nlohmann::json& v) {
    if (v.is_null()) return "n/a";
    if (v.is_number_float()) return fmt::format("{:.3f}", v.get<double>());
    return v.dump();
}

void print_report(const nlohmann::json& s, std::ostream& out) {
    out << fmt::format("{:<12} {:>8} {:>6} {:>8} {:>10}\n", "layer", "directed", "nodes", "edges", "avg_degree");
    for (const auto& l : s.at("layers"))
        out << fmt::format("{:<12} {:>8} {:>6} {:>8} {:>10}\n", l["name"].get<std::string>(), l["directed"].dump(),
                           fmt_value(l["nodes"]), fmt_value(l["edges"]), fmt_value(l["avg_degree"]));
    out << "\nlabels (connected pairs):";
    for (const auto& [label, n] : s.at("label_counts").at("connected_pairs").items()) out << ' ' << label << '=' << n;
    out << "\n\n"
        << fmt::format("{:<28} {:>8} {:>8} {:>10} {:>12}\n", "aggregation", "None", "FBOnly", "Socialize", "CloseFriend");
    for (const auto& p : s.at("pmf")) {
        const auto& pr = p["probabilities"];
        out << fmt::format("{:<28} {:>8} {:>8} {:>10} {:>12}\n", p["aggregation"].get<std::string>(), fmt_value(pr["None"]),
                           fmt_value(pr["FBOnly"]), fmt_value(pr["Socialize"]), fmt_value(pr["CloseFriend"]));
    }
    out << '\n' << fmt::format("{:<12} {:>8} {:>8} {:>10}\n", "category", "C", "p", "spearman");
    for (const auto& [cat, e] : s.at("correlation").items())
        out << fmt::format("{:<12} {:>8} {:>8} {:>10}\n", cat, fmt_value(e["graph_correlation"]),
                           fmt_value(e.value("p_value", nlohmann::json())), fmt_value(e["spearman_rho"]));
    out << '\n' << fmt::format("{:<12} {:>8} {:>8} {:>8} {:>8}\n", "delta", "q1", "median", "q3", "positive");
    for (const auto& [cat, d] : s.at("diversity").items()) {
        if (d.is_null()) {
            out << fmt::format("{:<12} {:>8}\n", cat, "n/a");
            continue;
        }
        out << fmt::format("{:<12} {:>8} {:>8} {:>8} {:>8}\n", cat, fmt_value(d["q1"]), fmt_value(d["median"]),
                           fmt_value(d["q3"]), fmt_value(d["fraction_positive"]));
    }
}

int cmd_report(const std::string& run_dir, bool as_json, std::ostream& out) {
    const auto summary = read_json(fs::path(run_dir) / kSummaryFile);
    if (as_json) {
        out << summary.dump(2) << '\n';
        return 0;
    }
    try {
        print_report(summary, out);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(fmt::format("malformed summary in '{}': {}", run_dir, e.what()));
    }
    return 0;
}

int cmd_verify(const std::string& summary_dir, const RunConfig& c, bool run_first, std::ostream& out, Log& log) {
    fs::path dir = summary_dir;
    if (run_first) {
        run_pipeline(c);
        dir = c.output_dir;
    }
    const auto checks = verify_reference(read_json(dir / kSummaryFile));
    std::size_t passed = 0;
    for (const auto& check : checks) {
        out << format_check(check) << '\n';
        passed += check.passed;
    }
    log.info(fmt::format("{}/{} reference checks passed", passed, checks.size()),
             {{"passed", passed}, {"total", checks.size()}});
    return passed == checks.size() ? 0 : 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multiplex social-graph analysis"};
    app.name("mplx");
    app.require_subcommand(1);
    Log log(err);
    app.add_flag("--quiet,-q", log.quiet, "Only report errors");
    app.add_flag("--json-logs", log.json, "Emit log lines as JSON objects");

    Overrides ingest_opts, analyze_opts, verify_opts;
    auto* ingest = app.add_subcommand("ingest", "Parse events and surveys into layers and relationship labels");
    ingest_opts.attach(*ingest, false);

    SynthOptions synth_opts;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with planted homophily");
    synth->add_option("--out", synth_opts.out, "Output directory")->required();
    synth->add_option("--nodes", synth_opts.spec.n_nodes, "Number of participants");
    synth->add_option("--surveys", synth_opts.spec.surveys, "Relationship survey waves");
    synth->add_option("--seed", synth_opts.spec.seed, "Generator seed");
    synth->add_option("--homophily", synth_opts.homophily, "Homophily strength on every layer");
    synth->add_option("--category", synth_opts.spec.planted_category, "Category driving homophily, or 'all'");
    synth->add_option("--proximity-base", synth_opts.spec.proximity.base, "Base proximity tie probability");
    synth->add_option("--calls-base", synth_opts.spec.calls.base, "Call probability given proximity");
    synth->add_option("--sms-base", synth_opts.spec.sms.base, "SMS probability given a call");
    synth->add_option("--facebook-bias", synth_opts.spec.facebook_same_group_bias,
                      "Log-odds boost for Facebook ties within a year or residence");
    synth->add_option("--external-contacts", synth_opts.spec.external_contacts, "Non-roster contacts in the logs");

    auto* analyze = app.add_subcommand("analyze", "Run the full analysis and write artifacts with a manifest");
    analyze_opts.attach(*analyze, true);

    std::string report_dir;
    bool report_json = false;
    auto* report = app.add_subcommand("report", "Print the tables of a finished analysis");
    report->add_option("run_dir", report_dir, "Analysis output directory")->required();
    report->add_flag("--json", report_json, "Print summary.json instead of tables");

    std::string verify_dir;
    auto* verify = app.add_subcommand("verify", "Check an analysis of the MIT Social Evolution data against published values");
    verify->add_option("--run-dir", verify_dir, "Existing analysis output directory");
    verify_opts.attach(*verify, true);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 1;
    }

    try {
        if (*ingest) return cmd_ingest(ingest_opts.resolve(*ingest), log);
        if (*synth) return cmd_synth(synth_opts, *synth, log);
        if (*analyze) return cmd_analyze(analyze_opts.resolve(*analyze), out, log);
        if (*report) return cmd_report(report_dir, report_json, out);
        if (*verify) {
            const bool run_first = verify_dir.empty();
            return cmd_verify(verify_dir, run_first ? verify_opts.resolve(*verify) : RunConfig{}, run_first, out, log);
        }
    } catch (const InputError& e) {
        log.error(e.what());
        return 1;
    } catch (const std::exception& e) {
        log.error(fmt::format("internal error: {}", e.what()));
        return 2;
    }
    return 2;
}

}  // namespace mplx::cli

#include "mplx/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

#include "mplx/adapter.hpp"
#include "mplx/hash.hpp"
#include "mplx/ingest.hpp"
#include "mplx/profiles.hpp"

namespace fs = std::filesystem;

namespace mplx {

namespace {

template <typename T>
T value_or(const nlohmann::json& j, const char* key, T fallback) {
    return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

fs::path resolve(const nlohmann::json& j, const char* key, const fs::path& base) {
    const auto text = value_or<std::string>(j, key, "");
    if (text.empty()) return {};
    const fs::path p(text);
    return p.is_absolute() || base.empty() ? p : base / p;
}

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const InputError& e) {
        throw StageError(name, e.what());
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(fmt::format("cannot read '{}'", path.string()));
    return in;
}

// Writes artifacts under the output directory and remembers them so a failed
// run can be rolled back.
class ArtifactWriter {
public:
    explicit ArtifactWriter(fs::path root) : root_(std::move(root)) {
        if (!fs::exists(root_)) {
            fs::create_directories(root_);
            created_root_ = true;
        }
    }

    void write(const std::string& name, const std::string& kind, const std::function<void(std::ostream&)>& body) {
        std::ostringstream buffer;
        body(buffer);
        const std::string bytes = buffer.str();
        const fs::path path = root_ / name;
        std::ofstream out(path, std::ios::binary);
        if (out.is_open()) written_.push_back(path);
        out << bytes;
        if (!out) throw InputError(fmt::format("cannot write '{}'", path.string()));
        artifacts_.push_back({name, sha256_hex(bytes), kind});
    }

    void write_json(const std::string& name, const std::string& kind, const nlohmann::json& doc) {
        write(name, kind, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
    }

    void rollback() noexcept {
        std::error_code ec;
        for (const auto& p : written_) fs::remove(p, ec);
        if (created_root_ && fs::is_empty(root_, ec)) fs::remove(root_, ec);
    }

    std::vector<Artifact> artifacts() const {
        auto out = artifacts_;
        std::sort(out.begin(), out.end(), [](const Artifact& a, const Artifact& b) { return a.path < b.path; });
        return out;
    }

private:
    fs::path root_;
    bool created_root_ = false;
    std::vector<fs::path> written_;
    std::vector<Artifact> artifacts_;
};

struct Inputs {
    Roster roster;
    std::vector<InteractionEvent> events;
    std::vector<RelationshipReport> reports;
    SurveyData surveys;
    AttributeRegistry registry = default_registry();
    nlohmann::json diagnostics;
};

Inputs load_inputs(const RunConfig& config) {
    Inputs in;
    if (!config.registry.empty()) {
        auto f = open_input(config.registry);
        in.registry = AttributeRegistry::from_json(nlohmann::json::parse(f));
    }
    std::optional<Roster> roster;
    if (!config.roster.empty()) {
        auto f = open_input(config.roster);
        roster = read_roster(f);
    }

    if (!config.adapter.empty()) {
        auto f = open_input(config.adapter);
        const auto adapter = Adapter::from_json(nlohmann::json::parse(f));
        auto data = run_adapter(adapter, config.dataset_dir, roster);
        in.roster = data.roster;
        in.events = std::move(data.events.events);
        in.reports = std::move(data.reports.reports);
        std::stringstream surveys;
        write_surveys(surveys, data.surveys);
        in.surveys = parse_surveys(surveys, in.registry, in.roster);
        in.diagnostics = {{"adapter", adapter.name},
                          {"events_dropped_external", data.events.dropped_external},
                          {"events_dropped_self", data.events.dropped_self},
                          {"events_dropped_out_of_window", data.events.dropped_out_of_window},
                          {"reports_dropped_external", data.reports.dropped_external},
                          {"reports_dropped_ignored", data.reports.dropped_ignored},
                          {"survey_rows_dropped", data.survey_rows_dropped},
                          {"survey_values_missing", data.survey_values_missing}};
        return in;
    }

    if (!roster) throw InputError("a roster is required");
    in.roster = *roster;
    {
        auto f = open_input(config.events);
        auto parsed = parse_events(f, {}, in.roster, config.events.filename().string());
        in.events = std::move(parsed.events);
        in.diagnostics["events_dropped_external"] = parsed.dropped_external;
        in.diagnostics["events_dropped_self"] = parsed.dropped_self;
    }
    {
        auto f = open_input(config.relationships);
        auto parsed = parse_reports(f, {}, in.roster, config.relationships.filename().string());
        in.reports = std::move(parsed.reports);
        in.diagnostics["reports_dropped_external"] = parsed.dropped_external;
    }
    {
        auto f = open_input(config.surveys);
        in.surveys = parse_surveys(f, in.registry, in.roster, config.surveys.filename().string());
        in.diagnostics["survey_rows_dropped"] = in.surveys.dropped_external;
        in.diagnostics["survey_values_missing"] = in.surveys.missing_values;
    }
    return in;
}

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? std::numeric_limits<double>::quiet_NaN() : static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json number_or_null(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

// Undirected edge-set relations between the communication layers.
nlohmann::json overlap_summary(const MultiplexGraph& m) {
    const auto& ids = m.node_ids();
    const auto has = [&](const char* name) {
        const auto names = m.layer_names();
        return std::find(names.begin(), names.end(), name) != names.end();
    };
    nlohmann::json out = nlohmann::json::object();
    const Layer all = union_of(m, m.layer_names());
    const std::size_t n = ids.size();
    out["union_edges"] = all.edge_count();
    out["union_pair_fraction"] = number_or_null(ratio(all.edge_count(), n * (n - 1) / 2));
    if (has("sms") && has("calls")) {
        const auto s = m.layer("sms").symmetrized().edge_count();
        const auto sc = intersection_of(m, {"sms", "calls"}).edge_count();
        out["sms_edges_undirected"] = s;
        out["sms_calls_overlap"] = number_or_null(ratio(sc, s));
    }
    if (has("proximity") && (has("calls") || has("sms"))) {
        std::vector<std::string> phone;
        for (const char* name : {"calls", "sms"})
            if (has(name)) phone.push_back(name);
        const Layer phone_union = union_of(m, phone);
        std::size_t inside = 0;
        for (const auto& [i, j] : phone_union.edges()) inside += m.layer("proximity").connected(i, j);
        out["phone_edges_in_proximity"] = number_or_null(ratio(inside, phone_union.edge_count()));
    }
    return out;
}

std::vector<std::pair<std::string, Layer>> aggregations(const MultiplexGraph& m) {
    std::vector<std::pair<std::string, Layer>> out;
    const auto names = m.layer_names();
    for (const auto& name : names) out.emplace_back(name, m.layer(name).symmetrized());
    if (names.size() > 1)
        for (const auto& name : names) out.emplace_back(name + "_only", exclusive_edges(m, name));
    for (std::size_t a = 0; a < names.size(); ++a)
        for (std::size_t b = a + 1; b < names.size(); ++b) {
            if (names.size() == 2) break;
            out.emplace_back(names[a] + "&" + names[b], intersection_of(m, {names[a], names[b]}));
        }
    if (names.size() > 1) {
        out.emplace_back("intersection_all", intersection_of(m, names));
        out.emplace_back("union_all", union_of(m, names));
    }
    return out;
}

}  // namespace

// --- RunConfig ---------------------------------------------------------------------

RunConfig RunConfig::from_json(const nlohmann::json& doc, const fs::path& base_dir) {
    try {
        RunConfig c;
        c.events = resolve(doc, "events", base_dir);
        c.relationships = resolve(doc, "relationships", base_dir);
        c.surveys = resolve(doc, "surveys", base_dir);
        c.roster = resolve(doc, "roster", base_dir);
        c.registry = resolve(doc, "registry", base_dir);
        c.adapter = resolve(doc, "adapter", base_dir);
        c.dataset_dir = resolve(doc, "dataset_dir", base_dir);
        c.output_dir = resolve(doc, "output_dir", base_dir);
        c.survey_count = value_or<int>(doc, "survey_count", c.survey_count);
        if (doc.contains("distance_scale") && !doc["distance_scale"].is_null())
            c.distance_scale = doc["distance_scale"].get<double>();
        c.bins.distance_edges = value_or<std::vector<double>>(doc, "distance_bins", c.bins.distance_edges);
        c.bins.similarity_edges = value_or<std::vector<double>>(doc, "similarity_bins", c.bins.similarity_edges);
        c.bins.separate_no_path = value_or<bool>(doc, "separate_no_path", c.bins.separate_no_path);
        c.permutations = value_or<std::size_t>(doc, "permutations", c.permutations);
        if (doc.contains("seed") && !doc["seed"].is_null()) c.seed = doc["seed"].get<std::uint64_t>();
        c.mask_to_support = value_or<bool>(doc, "mask_to_support", c.mask_to_support);
        c.normalize = value_or<bool>(doc, "normalize", c.normalize);
        c.correlation_mode = parse_correlation_mode(value_or<std::string>(doc, "correlation_mode", "product_over_sums"));
        c.pair_mode = parse_pair_mode(value_or<std::string>(doc, "pair_mode", "directed"));
        c.threads = value_or<unsigned>(doc, "threads", c.threads);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(fmt::format("malformed run config: {}", e.what()));
    }
}

nlohmann::json RunConfig::to_json() const {
    const auto path = [](const fs::path& p) -> nlohmann::json {
        if (p.empty()) return nullptr;
        return p.generic_string();
    };
    return {{"events", path(events)},
            {"relationships", path(relationships)},
            {"surveys", path(surveys)},
            {"roster", path(roster)},
            {"registry", path(registry)},
            {"adapter", path(adapter)},
            {"dataset_dir", path(dataset_dir)},
            {"output_dir", path(output_dir)},
            {"survey_count", survey_count},
            {"distance_scale", distance_scale ? nlohmann::json(*distance_scale) : nlohmann::json(nullptr)},
            {"distance_bins", bins.distance_edges},
            {"similarity_bins", bins.similarity_edges},
            {"separate_no_path", bins.separate_no_path},
            {"permutations", permutations},
            {"seed", seed ? nlohmann::json(*seed) : nlohmann::json(nullptr)},
            {"mask_to_support", mask_to_support},
            {"normalize", normalize},
            {"correlation_mode", to_string(correlation_mode)},
            {"pair_mode", to_string(pair_mode)},
            {"threads", threads}};
}

void RunConfig::validate() const {
    const auto require = [](const fs::path& p, const char* what) {
        if (p.empty()) throw InputError(fmt::format("config: {} path is required", what));
        if (!fs::exists(p)) throw InputError(fmt::format("config: {} '{}' does not exist", what, p.string()));
    };
    if (adapter.empty()) {
        require(events, "events");
        require(relationships, "relationships");
        require(surveys, "surveys");
        require(roster, "roster");
    } else {
        require(adapter, "adapter");
        require(dataset_dir, "dataset_dir");
        if (!roster.empty()) require(roster, "roster");
    }
    if (!registry.empty()) require(registry, "registry");
    if (output_dir.empty()) throw InputError("config: output_dir is required");
    if (survey_count < 1) throw InputError("config: survey_count must be at least 1");
    if (distance_scale && !(*distance_scale >= 0.0)) throw InputError("config: distance_scale must be non-negative");
    if (permutations > 0 && permutations < 100)
        throw InputError("config: permutations must be 0 (disabled) or at least 100");
    if (permutations > 0 && !seed) throw InputError("config: a seed is required when permutations are enabled");
    bins.validate();
}

nlohmann::json manifest_to_json(const std::vector<Artifact>& manifest) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& a : manifest) out.push_back({{"path", a.path}, {"sha256", a.sha256}, {"artifact_kind", a.kind}});
    return out;
}

// --- pipeline ------------------------------------------------------------------------

AnalysisReport run_pipeline(const RunConfig& config) {
    stage("config", [&] {
        config.validate();
        return 0;
    });

    ArtifactWriter writer(config.output_dir);
    try {
        const Inputs in = stage("ingest", [&] { return load_inputs(config); });
        const auto& roster = in.roster;

        const MultiplexGraph multiplex = stage("ingest", [&] { return build_multiplex(in.events, roster); });
        const LabelingResult labeling =
            stage("ingest", [&] { return label_relationships(in.reports, config.survey_count, roster); });

        const MultiplexGraph undirected = multiplex.symmetrized();
        const WeightedMatrix weights = stage("core", [&] { return weight_matrix(undirected); });
        const double scale = config.distance_scale.value_or(default_distance_scale(multiplex.layer_count()));
        const WeightedMatrix distance = stage("core", [&] { return distance_matrix(weights, scale, config.threads); });

        const auto categories = in.registry.category_names();
        std::vector<ProfileSet> profiles;
        std::vector<WeightedMatrix> similarities;
        stage("profiles", [&] {
            for (const auto& cat : categories) {
                profiles.push_back(build_profiles(in.surveys, in.registry, cat, roster.ids(), {config.normalize}));
                similarities.push_back(similarity_matrix(profiles.back(), config.threads));
            }
            return 0;
        });

        nlohmann::json summary;
        summary["config"] = config.to_json();
        summary["config"].erase("output_dir");
        summary["config"].erase("threads");
        summary["nodes"] = roster.size();
        summary["distance_scale"] = scale;

        // Layer table.
        nlohmann::json layers = nlohmann::json::array();
        for (const auto& l : multiplex.layers()) {
            // Edges are counted as ordered pairs so both kinds of layer share one
            // scale: an undirected tie contributes two.
            const auto nodes = l.active_node_count();
            const auto arcs = l.directed() ? l.edge_count() : 2 * l.edge_count();
            layers.push_back({{"name", l.name()},
                              {"directed", l.directed()},
                              {"nodes", nodes},
                              {"edges", arcs},
                              {"avg_degree", number_or_null(ratio(arcs, nodes))}});
        }
        summary["layers"] = layers;
        summary["overlap"] = overlap_summary(multiplex);

        // Label totals over every ordered pair, and over pairs tied on some layer.
        const auto counts = labeling.labels.counts();
        const auto connected = relationship_pmf(union_of(multiplex, multiplex.layer_names()), labeling.labels, PairMode::directed);
        for (std::size_t k = 0; k < kLabelCount; ++k) {
            const auto name = to_string(static_cast<Label>(k));
            summary["label_counts"]["all_pairs"][name] = counts[k];
            summary["label_counts"]["connected_pairs"][name] = connected.counts[k];
        }

        // Statistics.
        const CorrelationOptions corr{config.mask_to_support, config.correlation_mode};
        std::vector<RelationshipPMF> pmfs;
        nlohmann::json correlation = nlohmann::json::object(), conditional = nlohmann::json::object(),
                       delta_summaries = nlohmann::json::object();
        std::vector<ConditionalSimilarityTable> tables;
        std::vector<DiversityDelta> deltas;
        std::vector<FiveNumberSummary> five;
        const Layer union_all = union_of(multiplex, multiplex.layer_names());
        stage("stats", [&] {
            for (const auto& [name, layer] : aggregations(multiplex)) {
                pmfs.push_back(relationship_pmf(layer, labeling.labels, config.pair_mode));
                pmfs.back().aggregation = name;
            }
            for (std::size_t c = 0; c < categories.size(); ++c) {
                const auto& sim = similarities[c];
                const auto g = graph_correlation(weights, sim, corr);
                nlohmann::json entry = {{"graph_correlation", g.value},
                                        {"defined_nodes", g.defined_nodes},
                                        {"excluded_nodes", g.excluded}};
                if (config.permutations > 0) {
                    const auto t = significance(weights, sim, config.permutations, *config.seed, corr, config.threads);
                    entry["p_value"] = t.p_value;
                    entry["null_mean"] = t.null_mean;
                    entry["null_sd"] = t.null_sd;
                    entry["permutations"] = t.permutations;
                }
                const auto rho = spearman_degree_rank(weights, sim, config.mask_to_support);
                entry["spearman_rho"] = rho.rho ? nlohmann::json(*rho.rho) : nlohmann::json(nullptr);
                entry["spearman_nodes"] = rho.nodes;
                correlation[categories[c]] = entry;

                tables.push_back(conditional_similarity(distance, sim, config.bins, categories[c]));
                nlohmann::json means = nlohmann::json::array();
                for (double m : tables.back().mean_similarity) means.push_back(number_or_null(m));
                conditional[categories[c]] = {{"distance_bins", tables.back().distance_labels},
                                              {"mean_similarity", means},
                                              {"pairs", tables.back().total_pairs}};

                auto cat_deltas = diversity_deltas(labeling.labels, union_all, sim, categories[c]);
                deltas.insert(deltas.end(), cat_deltas.begin(), cat_deltas.end());
                if (std::any_of(cat_deltas.begin(), cat_deltas.end(), [](const auto& d) { return d.delta.has_value(); })) {
                    five.push_back(delta_distribution(cat_deltas, categories[c]));
                    delta_summaries[categories[c]] = to_json(five.back());
                } else {
                    delta_summaries[categories[c]] = nullptr;
                }
            }
            return 0;
        });
        nlohmann::json pmf_json = nlohmann::json::array();
        for (const auto& p : pmfs) pmf_json.push_back(to_json(p));
        summary["pmf"] = pmf_json;
        summary["correlation"] = correlation;
        summary["conditional"] = conditional;
        summary["diversity"] = delta_summaries;

        nlohmann::json diagnostics = in.diagnostics;
        diagnostics["hierarchy_violations"] = labeling.violations.size();
        for (std::size_t c = 0; c < categories.size(); ++c)
            diagnostics["profiles"][categories[c]] = {{"defined", profiles[c].defined_count()},
                                                      {"missing", profiles[c].missing},
                                                      {"zero_vector", profiles[c].zero}};
        summary["diagnostics"] = diagnostics;

        stage("write", [&] {
            writer.write_json("multiplex.json", "multiplex_graph", to_json(multiplex));
            writer.write("labels.csv", "label_map", [&](std::ostream& o) { write_labels(o, labeling.labels); });
            writer.write("layers.csv", "layer_table", [&](std::ostream& o) {
                o << "layer,directed,nodes,edges,avg_degree\n";
                for (const auto& l : layers)
                    o << l["name"].get<std::string>() << ',' << (l["directed"].get<bool>() ? "true" : "false") << ','
                      << l["nodes"].get<std::size_t>() << ',' << l["edges"].get<std::size_t>() << ','
                      << (l["avg_degree"].is_null() ? "" : format_number(l["avg_degree"].get<double>())) << '\n';
            });
            writer.write("weights.csv", "multiplex_weight_matrix", [&](std::ostream& o) { write_matrix_csv(o, weights); });
            writer.write("distance.csv", "distance_matrix", [&](std::ostream& o) { write_matrix_csv(o, distance); });
            for (std::size_t c = 0; c < categories.size(); ++c) {
                writer.write("similarity_" + categories[c] + ".csv", "similarity_matrix",
                             [&](std::ostream& o) { write_matrix_csv(o, similarities[c]); });
                writer.write("conditional_" + categories[c] + ".csv", "conditional_similarity",
                             [&](std::ostream& o) { write_conditional_csv(o, tables[c]); });
            }
            nlohmann::json tables_json = nlohmann::json::array();
            for (const auto& t : tables) tables_json.push_back(to_json(t));
            writer.write_json("conditional.json", "conditional_similarity", tables_json);
            writer.write("pmf.csv", "relationship_pmf", [&](std::ostream& o) { write_pmf_csv(o, pmfs); });
            writer.write_json("pmf.json", "relationship_pmf", pmf_json);
            writer.write_json("correlation.json", "graph_correlation", correlation);
            writer.write("correlation.csv", "graph_correlation", [&](std::ostream& o) {
                o << "category,graph_correlation,p_value,null_mean,null_sd,defined_nodes,spearman_rho,spearman_nodes\n";
                for (const auto& cat : categories) {
                    const auto& e = correlation[cat];
                    const auto num = [&](const char* key) {
                        return e.contains(key) && !e[key].is_null() ? format_number(e[key].get<double>()) : std::string();
                    };
                    o << cat << ',' << num("graph_correlation") << ',' << num("p_value") << ',' << num("null_mean") << ','
                      << num("null_sd") << ',' << e["defined_nodes"].get<std::size_t>() << ',' << num("spearman_rho")
                      << ',' << e["spearman_nodes"].get<std::size_t>() << '\n';
                }
            });
            writer.write("deltas.csv", "diversity_delta", [&](std::ostream& o) { write_deltas_csv(o, deltas); });
            writer.write("delta_summary.csv", "diversity_summary", [&](std::ostream& o) { write_summary_csv(o, five); });
            writer.write_json(kSummaryFile, "summary", summary);
            const auto manifest = writer.artifacts();
            writer.write_json(kManifestFile, "manifest", manifest_to_json(manifest));
            return 0;
        });

        auto manifest = writer.artifacts();
        manifest.erase(std::remove_if(manifest.begin(), manifest.end(),
                                      [](const Artifact& a) { return a.path == kManifestFile; }),
                       manifest.end());
        return {std::move(manifest), std::move(summary)};
    } catch (...) {
        writer.rollback();
        throw;
    }
}

}  // namespace mplx

#include "mplx/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "mplx/csv.hpp"
#include "mplx/random.hpp"
#include "mplx/stats.hpp"

namespace mplx {

namespace {

double logit(double p) {
    p = std::clamp(p, 1e-12, 1.0 - 1e-12);
    return std::log(p / (1.0 - p));
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool probability(double p) { return p >= 0.0 && p <= 1.0; }

// Index of `name` in the category's attribute list, or -1.
int attribute_index(const CategorySpec& c, const std::string& name) {
    for (std::size_t k = 0; k < c.attributes.size(); ++k)
        if (c.attributes[k].name == name) return static_cast<int>(k);
    return -1;
}

}  // namespace

void write_surveys(std::ostream& out, std::span<const SurveyRow> rows) {
    csv::write_row(out, {"participant", "attribute", "category", "survey_index", "value"});
    for (const auto& r : rows)
        csv::write_row(out, {r.participant, r.attribute, r.category, std::to_string(r.survey_index),
                             format_number(r.value)});
}

void SyntheticSpec::validate() const {
    if (n_nodes < 4) throw InputError("synthetic data needs at least 4 nodes");
    if (surveys < 1) throw InputError("synthetic data needs at least one survey");
    for (double p : {proximity.base, calls.base, sms.base, facebook_base})
        if (!(p > 0.0 && p < 1.0)) throw InputError(fmt::format("base probability {} outside (0, 1)", p));
    for (double p : {proximity.base, calls.base, sms.base, facebook_base, socialize_given_facebook,
                     close_given_socialize, report_rate, false_report_rate, missing_survey_rate})
        if (!probability(p)) throw InputError(fmt::format("probability {} outside [0, 1]", p));
    if (window_end <= window_start) throw InputError("synthetic time window is empty");
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec, const AttributeRegistry& registry) {
    spec.validate();
    const Rng root(spec.seed);
    const std::size_t n = spec.n_nodes;

    NodeIds ids;
    for (std::size_t k = 0; k < n; ++k) ids.push_back(fmt::format("S{:03d}", k + 1));
    SyntheticDataset data{Roster(ids), {}, {}, {}};

    // True attribute values per category; integer draws within each range.
    std::map<std::string, std::vector<std::vector<double>>> truth;
    {
        Rng rng = root.split("attributes");
        for (const auto& c : registry.categories()) {
            auto& rows = truth[c.name];
            rows.assign(n, {});
            for (std::size_t p = 0; p < n; ++p)
                for (const auto& a : c.attributes)
                    rows[p].push_back(static_cast<double>(rng.between(
                        static_cast<long long>(std::ceil(a.min)), static_cast<long long>(std::floor(a.max)))));
        }
    }

    // Survey observations: the final survey always carries the true value so
    // t_max recovers it; earlier surveys drift by at most one unit.
    {
        Rng rng = root.split("surveys");
        for (const auto& c : registry.categories())
            for (std::size_t p = 0; p < n; ++p)
                for (std::size_t k = 0; k < c.attributes.size(); ++k) {
                    const auto& a = c.attributes[k];
                    const double value = truth[c.name][p][k];
                    if (a.mode == SummaryMode::actual) {
                        data.surveys.push_back({ids[p], a.name, c.name, 1, value});
                        continue;
                    }
                    for (int s = 1; s <= spec.surveys; ++s) {
                        const bool last = s == spec.surveys;
                        if (!last && rng.bernoulli(spec.missing_survey_rate)) continue;
                        double v = value;
                        if (!last) v = std::clamp(value + static_cast<double>(rng.between(-1, 1)), a.min, a.max);
                        data.surveys.push_back({ids[p], a.name, c.name, s, v});
                    }
                }
    }

    // Standardized planting similarity per unordered pair.
    std::vector<double> plant(n * n, 0.0);
    {
        std::vector<std::string> cats;
        if (spec.planted_category == "all") cats = registry.category_names();
        else cats.push_back(registry.category(spec.planted_category).name);
        for (const auto& cat : cats)
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j) {
                    const ProfileVector u{ids[i], cat, truth[cat][i], {}};
                    const ProfileVector v{ids[j], cat, truth[cat][j], {}};
                    const double s = cosine_similarity(u, v).value_or(0.0);
                    plant[i * n + j] += s / static_cast<double>(cats.size());
                }
        double mean = 0, sq = 0;
        const double pairs = static_cast<double>(n * (n - 1) / 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) mean += plant[i * n + j];
        mean /= pairs;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) sq += std::pow(plant[i * n + j] - mean, 2);
        const double sd = std::sqrt(sq / pairs);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double z = sd > 0 ? (plant[i * n + j] - mean) / sd : 0.0;
                plant[i * n + j] = plant[j * n + i] = z;
            }
    }
    const auto edge_p = [&](const LayerModel& m, std::size_t i, std::size_t j) {
        return logistic(logit(m.base) + m.homophily * plant[i * n + j]);
    };

    // Nested layers.
    std::vector<std::uint8_t> prox(n * n, 0), call(n * n, 0), sms(n * n, 0);
    {
        Rng rng = root.split("layers");
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (rng.bernoulli(edge_p(spec.proximity, i, j))) prox[i * n + j] = prox[j * n + i] = 1;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j && prox[i * n + j] && rng.bernoulli(edge_p(spec.calls, i, j))) call[i * n + j] = 1;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (call[i * n + j] && rng.bernoulli(edge_p(spec.sms, i, j))) sms[i * n + j] = 1;
    }

    // Events: one to three per edge, uniformly inside the window.
    {
        Rng rng = root.split("events");
        const auto when = [&] { return spec.window_start + rng.between(0, spec.window_end - spec.window_start); };
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const auto emit = [&](Channel c, std::size_t a, std::size_t b) {
                    const auto count = rng.between(1, 3);
                    for (long long k = 0; k < count; ++k) data.events.push_back({ids[a], ids[b], c, when()});
                };
                if (i < j && prox[i * n + j]) {
                    if (rng.bernoulli(0.5)) emit(Channel::proximity, i, j);
                    else emit(Channel::proximity, j, i);
                }
                if (call[i * n + j]) emit(Channel::call, i, j);
                if (sms[i * n + j]) emit(Channel::sms, i, j);
            }
        for (std::size_t k = 0; k < spec.external_contacts; ++k)
            data.events.push_back({ids[rng.below(n)], fmt::format("EXT{:03d}", k + 1), Channel::call, when()});
        std::sort(data.events.begin(), data.events.end(), [](const auto& a, const auto& b) {
            return std::tie(a.timestamp, a.src, a.dst, a.channel) < std::tie(b.timestamp, b.src, b.dst, b.channel);
        });
    }

    // Declared relationships, nested CF within SC within FB by construction.
    {
        Rng rng = root.split("relationships");
        const CategorySpec* situational = nullptr;
        for (const auto& c : registry.categories())
            if (c.name == "situational") situational = &c;
        const int year_k = situational ? attribute_index(*situational, "year_in_college") : -1;
        const int sector_k = situational ? attribute_index(*situational, "residential_sector") : -1;
        const auto same_group = [&](std::size_t i, std::size_t j) {
            if (!situational) return false;
            const auto& t = truth["situational"];
            return (year_k >= 0 && t[i][year_k] == t[j][year_k]) ||
                   (sector_k >= 0 && t[i][sector_k] == t[j][sector_k]);
        };
        const Relation order[] = {Relation::facebook_all_tagged, Relation::socialize_twice_week,
                                  Relation::close_friend};
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double mw = (prox[i * n + j] + call[i * n + j] + sms[i * n + j]) / 3.0;
                const double boost = spec.relationship_tie_boost * mw;
                const bool fb = rng.bernoulli(logistic(
                    logit(spec.facebook_base) + boost + (same_group(i, j) ? spec.facebook_same_group_bias : 0.0)));
                const bool sc = fb && rng.bernoulli(logistic(logit(spec.socialize_given_facebook) + boost));
                const bool cf = sc && rng.bernoulli(logistic(logit(spec.close_given_socialize) + boost));
                const bool holds[] = {fb, sc, cf};
                for (int r = 0; r < 3; ++r)
                    for (int s = 1; s <= spec.surveys; ++s)
                        if (rng.bernoulli(holds[r] ? spec.report_rate : spec.false_report_rate))
                            data.reports.push_back({ids[i], ids[j], order[r], s});
            }
    }
    return data;
}

std::vector<std::filesystem::path> write_dataset(const SyntheticDataset& data,
                                                 const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> written;
    const auto open = [&](const char* name) {
        written.push_back(dir / name);
        std::ofstream out(written.back(), std::ios::binary);
        if (!out) throw InputError(fmt::format("cannot write '{}'", written.back().string()));
        return out;
    };
    {
        auto out = open("roster.txt");
        for (const auto& id : data.roster.ids()) out << id << '\n';
    }
    {
        auto out = open("events.csv");
        write_events(out, data.events);
    }
    {
        auto out = open("relationships.csv");
        write_reports(out, data.reports);
    }
    {
        auto out = open("surveys.csv");
        write_surveys(out, data.surveys);
    }
    return written;
}

}  // namespace mplx

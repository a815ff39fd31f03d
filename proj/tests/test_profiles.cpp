#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "mplx/profiles.hpp"
#include "mplx/random.hpp"

using namespace mplx;

namespace {

ProfileVector political(double interest, double orientation) {
    return {"p", "political", {interest, orientation}, {SummaryMode::t_max, SummaryMode::t_max}};
}

ProfileVector music(std::vector<double> v) { return {"p", "music", std::move(v), {}}; }

AttributeSeries series(std::vector<Observation> obs) { return {"p", "x", std::move(obs)}; }

}  // namespace

TEST_CASE("summaries") {
    CHECK(summarize(series({{1, 2.0}}), SummaryMode::t_avg) == 2.0);
    CHECK(summarize(series({{1, 1.0}, {2, 3.0}}), SummaryMode::t_max) == 3.0);
    // (1 + 2 + 6) / 3
    CHECK(summarize(series({{1, 1.0}, {2, 2.0}, {3, 6.0}}), SummaryMode::t_avg) == 3.0);
    CHECK(summarize(series({{4, 5.0}}), SummaryMode::actual) == 5.0);
    CHECK_FALSE(summarize(series({}), SummaryMode::t_max));
}

TEST_CASE("worked cosine examples") {
    // (2*2 + 5*3) / (sqrt(29) * sqrt(13))
    CHECK(*cosine_similarity(political(2, 5), political(2, 3)) ==
          doctest::Approx(19.0 / std::sqrt(29.0 * 13.0)).epsilon(1e-14));
    CHECK(*cosine_similarity(political(2, 5), political(2, 3)) == doctest::Approx(0.98).epsilon(0.005));
    // 9 / (3 * sqrt(18))
    CHECK(*cosine_similarity(political(0, 3), political(3, 3)) ==
          doctest::Approx(0.70710678118654752).epsilon(1e-14));
    CHECK(*cosine_similarity(political(4, 1), political(4, 1)) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("cosine edge cases") {
    CHECK_FALSE(cosine_similarity(political(0, 0), political(1, 1)));
    CHECK_THROWS_AS(cosine_similarity(political(1, 1), music({1, 1})), InputError);
    CHECK_THROWS_AS(cosine_similarity(music({1}), music({1, 1})), InputError);
    CHECK(*cosine_similarity(music({1, 0, 0}), music({0, 1, 0})) == 0.0);
}

TEST_CASE("cosine properties") {
    Rng rng(23);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> a(11), b(11);
        for (auto& x : a) x = static_cast<double>(rng.between(0, 3));
        for (auto& x : b) x = static_cast<double>(rng.between(0, 3));
        a[0] += 1;
        b[1] += 1;
        const double s = *cosine_similarity(music(a), music(b));
        CHECK(s == *cosine_similarity(music(b), music(a)));
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        const double alpha = 0.1 + 10 * rng.uniform();
        std::vector<double> scaled = a;
        for (auto& x : scaled) x *= alpha;
        CHECK(std::abs(*cosine_similarity(music(scaled), music(b)) - s) <= 1e-12);
    }
}

TEST_CASE("registry") {
    std::ifstream in(MPLX_SOURCE_DIR "/config/attributes.json");
    REQUIRE(in);
    const auto shipped = AttributeRegistry::from_json(nlohmann::json::parse(in));
    CHECK(shipped.to_json() == default_registry().to_json());
    const std::size_t lengths[] = {2, 6, 11, 2};
    for (std::size_t k = 0; k < 4; ++k)
        CHECK(default_registry().categories()[k].attributes.size() == lengths[k]);
    CHECK(default_registry().find("health", "weight_lb")->mode == SummaryMode::t_avg);
    CHECK(default_registry().find("situational", "residential_sector")->max == 8);
    CHECK_THROWS_AS(default_registry().category("diet"), InputError);
    CHECK_THROWS_AS(AttributeRegistry({{"x", {{"a", -1, 1, SummaryMode::t_max}}}}), InputError);
    CHECK_THROWS_AS(AttributeRegistry::from_json(nlohmann::json{{"categories", 3}}), InputError);
}

TEST_CASE("survey parsing and profile building") {
    const Roster roster({"a", "b", "c", "d"});
    std::istringstream in(
        "participant,attribute,category,survey_index,value\n"
        "a,interest_in_politics,political,1,1\n"
        "a,interest_in_politics,political,3,2\n"
        "a,political_orientation,political,1,5\n"
        "b,interest_in_politics,political,2,2\n"
        "b,political_orientation,political,2,3\n"
        "b,political_orientation,political,1,6\n"
        "c,interest_in_politics,political,1,3\n"
        "c,political_orientation,political,1,NA\n"
        "z,interest_in_politics,political,1,3\n");
    const auto data = parse_surveys(in, default_registry(), roster);
    CHECK(data.dropped_external == 1);
    CHECK(data.missing_values == 1);
    const auto* b_orient = data.find("b", "political", "political_orientation");
    REQUIRE(b_orient);
    CHECK(b_orient->observations.front().survey_index == 1);

    const auto set = build_profiles(data, default_registry(), "political", roster.ids());
    CHECK(set.defined_count() == 2);
    CHECK(set.missing == NodeIds{"c", "d"});
    CHECK(set.profiles[0]->values == std::vector<double>{2, 5});
    CHECK(set.profiles[1]->values == std::vector<double>{2, 3});

    const auto sim = similarity_matrix(set);
    CHECK(sim(0, 1) == doctest::Approx(0.98).epsilon(0.005));
    CHECK(sim(0, 1) == sim(1, 0));
    CHECK_FALSE(sim.defined(0, 0));
    for (std::size_t j = 0; j < 4; ++j) {
        CHECK_FALSE(sim.defined(2, j));
        CHECK_FALSE(sim.defined(j, 3));
    }

    const auto norm = build_profiles(data, default_registry(), "political", roster.ids(), {true});
    CHECK(norm.profiles[0]->values[0] == doctest::Approx(2.0 / 3.0));
    CHECK(norm.profiles[0]->values[1] == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("survey validation errors") {
    const Roster roster({"a"});
    auto parse = [&](const std::string& body) {
        std::istringstream in("participant,attribute,category,survey_index,value\n" + body);
        return parse_surveys(in, default_registry(), roster);
    };
    CHECK_THROWS_AS(parse("a,interest_in_politics,political,1,9\n"), InputError);
    CHECK_THROWS_AS(parse("a,shoe_size,health,1,9\n"), InputError);
    CHECK_THROWS_AS(parse("a,interest_in_politics,political,x,1\n"), InputError);
    CHECK_THROWS_AS(parse("a,interest_in_politics,political,1,lots\n"), InputError);
    CHECK_THROWS_AS(parse("a,interest_in_politics,political,1,1\na,interest_in_politics,political,1,2\n"),
                    InputError);
}

TEST_CASE("zero vectors are excluded") {
    SurveyData data;
    const NodeIds ids{"a", "b", "c"};
    const auto registry = default_registry();
    const auto& genres = registry.category("music").attributes;
    for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t g = 0; g < genres.size(); ++g)
            data.add("music", {ids[p], genres[g].name, {{1, p == 0 ? 0.0 : double(g == p)}}});
    const auto set = build_profiles(data, default_registry(), "music", ids);
    CHECK(set.zero == NodeIds{"a"});
    const auto sim = similarity_matrix(set);
    CHECK(sim(1, 2) == 0.0);  // orthogonal one-hot genres
    CHECK_FALSE(sim.defined(0, 1));

    SurveyData lonely;
    for (const auto& g : genres) lonely.add("music", {"b", g.name, {{1, 1.0}}});
    CHECK_THROWS_AS(similarity_matrix(build_profiles(lonely, default_registry(), "music", ids)),
                    InputError);
}

TEST_CASE("similarity matrix matches a pairwise loop") {
    Rng rng(31);
    const std::size_t n = 25;
    NodeIds ids;
    SurveyData data;
    const auto registry = default_registry();
    const auto& genres = registry.category("music").attributes;
    std::vector<std::vector<double>> raw(n);
    for (std::size_t p = 0; p < n; ++p) {
        ids.push_back("p" + std::to_string(p));
        for (const auto& g : genres) {
            const double v = static_cast<double>(rng.between(0, 3));
            raw[p].push_back(v);
            data.add("music", {ids[p], g.name, {{1, v}}});
        }
    }
    const auto set = build_profiles(data, default_registry(), "music", ids);
    const auto sim = similarity_matrix(set, 4);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j || set.profiles[i] == std::nullopt || set.profiles[j] == std::nullopt) continue;
            double dot = 0, a = 0, b = 0;
            for (std::size_t k = 0; k < raw[i].size(); ++k) {
                dot += raw[i][k] * raw[j][k];
                a += raw[i][k] * raw[i][k];
                b += raw[j][k] * raw[j][k];
            }
            CHECK(std::abs(sim(i, j) - dot / std::sqrt(a * b)) <= 1e-12);
        }
}

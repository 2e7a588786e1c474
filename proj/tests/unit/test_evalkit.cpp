#include "tcmkg/error.hpp"
#include "tcmkg/evalkit.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <sstream>

using namespace tcmkg;
using namespace tcmkg::eval;
using nlohmann::json;

namespace {

RatingMatrix grid(std::size_t items, std::size_t raters, std::vector<int> scores) {
    std::vector<std::string> is, rs;
    for (std::size_t i = 0; i < items; ++i) is.push_back("q" + std::to_string(i));
    for (std::size_t r = 0; r < raters; ++r) rs.push_back("r" + std::to_string(r));
    return RatingMatrix(is, rs, std::move(scores));
}

} // namespace

TEST_SUITE("evalkit") {

TEST_CASE("set metrics") {
    const std::set<std::string> predicted{"a", "b", "c"}, gold{"b", "c", "d"};
    const auto m = extraction_metrics(predicted, gold);
    CHECK(m.tp == 2);
    CHECK(m.fp == 1);
    CHECK(m.fn == 1);
    CHECK(m.precision == doctest::Approx(2.0 / 3.0));
    CHECK(m.recall == doctest::Approx(2.0 / 3.0));
    CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
    CHECK(m.accuracy == doctest::Approx(0.5));
    CHECK_FALSE(m.degenerate);
    CHECK(metrics_line(m) == "P=0.6667 R=0.6667 F1=0.6667 Acc=0.5000");
}

TEST_CASE("empty sets are degenerate, not NaN") {
    const auto m = extraction_metrics(std::set<int>{}, std::set<int>{});
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
    CHECK(m.accuracy == 1.0);
    CHECK(m.degenerate);

    const auto none_predicted = extraction_metrics(std::set<int>{}, std::set<int>{1});
    CHECK(none_predicted.degenerate);
    CHECK(none_predicted.recall == 0.0);
    CHECK(none_predicted.accuracy == 0.0);
}

TEST_CASE("accuracy implied by precision and recall") {
    CHECK(accuracy_from_pr(1.0, 1.0) == doctest::Approx(1.0));
    CHECK(accuracy_from_pr(0.5, 0.5) == doctest::Approx(1.0 / 3.0));
    // Same as tp/(tp+fp+fn) for tp=2, fp=1, fn=1.
    CHECK(accuracy_from_pr(2.0 / 3.0, 2.0 / 3.0) == doctest::Approx(0.5));
    CHECK(f1_from_pr(0.5, 1.0) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(accuracy_from_pr(0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(accuracy_from_pr(0.5, 1.5), std::invalid_argument);
}

TEST_CASE("published figures: accuracy agrees, F1 does not") {
    const auto rows = check_reference_consistency();
    REQUIRE(rows.size() == 5);
    for (const auto& r : rows) {
        CHECK(r.accuracy_consistent);
        CHECK(r.f1_deviates);
    }
    CHECK(rows[1].printed.label == "kimi/customized-prompt");
    CHECK(rows[1].computed_f1 == doctest::Approx(99.07).epsilon(0.0001));
    CHECK(rows[1].computed_accuracy == doctest::Approx(98.16).epsilon(0.0001));

    const auto targets = reference_targets();
    CHECK(targets.at("reproducible") == false);
    CHECK(targets.at("corpus").at("total").at("books") == 68);

    EvalReport report;
    report.consistency = rows;
    CHECK(to_text(report).find("[F1 DEVIATES]") != std::string::npos);
    CHECK(to_json(report).at("reference_consistency").size() == 5);
}

TEST_CASE("triple files") {
    std::istringstream in(R"({"item": "c1", "subject": " 四物汤", "predicate": "ingredient_use", "object": "当归"}
{"subject": "四物汤", "predicate": "Ingredient Use", "object": "当归 "}

{"item": "c1", "subject": "四物汤", "predicate": "Ingredient Use", "object": "当归"}
)");
    const auto triples = read_triples(in);
    CHECK(triples.size() == 2);
    CHECK(triples.begin()->triple.subject == "四物汤");
    CHECK(triples.begin()->triple.relation == RelationType::IngredientUse);

    std::istringstream bad("{\"subject\": \"a\", \"predicate\": \"Cures\", \"object\": \"b\"}\n");
    try {
        read_triples(bad, "gold.jsonl");
        FAIL("expected InputError");
    } catch (const InputError& e) {
        CHECK(e.line() == 1);
        CHECK(e.field() == "predicate");
    }
    CHECK_THROWS_AS(parse_triples(json::object()), InputError);
}

TEST_CASE("mean expert score and accuracy") {
    CHECK(mean_expert_score(grid(1, 4, {3, 4, 5, 4})) == doctest::Approx(4.0));
    CHECK(response_accuracy(grid(1, 4, {1, 2, 3, 4})) == doctest::Approx(0.5));
    // Item 0: two of three raters at >= 3 (majority). Item 1: one of three.
    const auto m = grid(2, 3, {3, 4, 1, 2, 2, 5});
    CHECK(response_accuracy(m, 3, AccuracyBasis::PerRating) == doctest::Approx(0.5));
    CHECK(response_accuracy(m, 3, AccuracyBasis::PerItemMajority) == doctest::Approx(0.5));
    // Ties are not a majority.
    CHECK(response_accuracy(grid(1, 2, {3, 2}), 3, AccuracyBasis::PerItemMajority) == 0.0);
    CHECK_THROWS_AS(mean_expert_score(RatingMatrix{}), Error);
}

TEST_CASE("Fleiss' kappa") {
    CHECK(fleiss_kappa({{3, 0}, {0, 3}, {1, 2}}, 3) == doctest::Approx(0.55));
    // Perfect disagreement between two raters.
    CHECK(inter_rater_agreement(grid(2, 2, {5, 1, 1, 5})) == doctest::Approx(-1.0));
    // Unanimity: expected agreement is 1 as well.
    CHECK(inter_rater_agreement(grid(3, 4, std::vector<int>(12, 5))) == 1.0);
    CHECK(inter_rater_agreement(grid(2, 2, {5, 4, 1, 2})) == doctest::Approx(1.0));
    CHECK_THROWS_AS(inter_rater_agreement(grid(3, 1, {1, 2, 3})), Error);
    CHECK_THROWS_AS(fleiss_kappa({{1, 1}, {2}}, 2), std::invalid_argument);
}

TEST_CASE("rating records") {
    std::istringstream in(R"({"item": "q1", "rater": "A", "score": 4}
{"item": "q1", "rater": "B", "score": 5}
{"item": "q2", "rater": "A", "score": 2}
{"item": "q2", "rater": "B", "score": 3}
)");
    const auto m = RatingMatrix::read(in);
    CHECK(m.item_count() == 2);
    CHECK(m.rater_count() == 2);
    CHECK(m.at(1, 0) == 2);
    const auto s = summarize_ratings(m);
    CHECK(s.mes == doctest::Approx(3.5));
    CHECK(s.accuracy == doctest::Approx(0.75));
    REQUIRE(s.ira);

    const json missing = json::array({{{"item", "q1"}, {"rater", "A"}, {"score", 4}},
                                      {{"item", "q2"}, {"rater", "B"}, {"score", 4}}});
    CHECK_THROWS_AS(RatingMatrix::from_json(missing), InputError);
    const json twice = json::array({{{"item", "q1"}, {"rater", "A"}, {"score", 4}},
                                    {{"item", "q1"}, {"rater", "A"}, {"score", 3}}});
    CHECK_THROWS_AS(RatingMatrix::from_json(twice), InputError);
    const json range = json::array({{{"item", "q1"}, {"rater", "A"}, {"score", 6}}});
    CHECK_THROWS_AS(RatingMatrix::from_json(range), InputError);

    const auto single = summarize_ratings(grid(2, 1, {4, 5}));
    CHECK_FALSE(single.ira);
    CHECK(to_json(single).at("ira").is_null());
}

}

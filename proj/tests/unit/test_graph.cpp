#include "fixture.hpp"
#include "oracles.hpp"

#include "tcmkg/graph.hpp"
#include "tcmkg/graph_builder.hpp"

#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

using namespace tcmkg;
using R = RelationType;
using C = EntityCategory;

namespace {

struct Scripted {
    const char* s;
    R r;
    const char* o;
    const char* chunk;
};

// 10 triples, 2 of them repeats: 8 distinct, 10 mentions.
const std::vector<Scripted> kTen = {
    {"四物汤", R::IngredientUse, "当归", "c1"},   {"四物汤", R::IngredientUse, "川芎", "c1"},
    {"四物汤", R::IngredientUse, "当归", "c2"},   {"四物汤", R::TreatDisease, "月经不调", "c1"},
    {"月经不调", R::SymptomsPresent, "经行腹痛", "c1"}, {"四物汤", R::TreatmentSymptom, "经行腹痛", "c2"},
    {"生化汤", R::IngredientUse, "当归", "c3"},   {"生化汤", R::TreatDisease, "产后腹痛", "c3"},
    {"生化汤", R::TreatDisease, "产后腹痛", "c3"}, {"生化汤", R::IngredientUse, "桃仁", "c3"},
};

GraphStore build(const std::vector<Scripted>& triples) {
    GraphStore store;
    for (const auto& t : triples) store.upsert_triple({t.s, t.r, t.o, std::nullopt, std::nullopt}, t.chunk);
    return store;
}

std::string snapshot_of(const GraphStore& store) {
    std::ostringstream out;
    save_snapshot(store, out);
    return out.str();
}

} // namespace

TEST_SUITE("graph") {

TEST_CASE("entity name normalisation") {
    CHECK(normalize_entity_name("  当归 ") == "当归");
    CHECK(normalize_entity_name("当归") == "当归");
    CHECK(normalize_entity_name("四物　 汤") == "四物 汤");
    CHECK(normalize_entity_name(normalize_entity_name(" e\xcc\x81 ")) == normalize_entity_name(" e\xcc\x81 "));
    CHECK_THROWS_AS(normalize_entity_name("    "), InvalidNameError);
    CHECK_THROWS_AS(normalize_entity_name(""), InvalidNameError);
}

TEST_CASE("repeated triples share one record with growing provenance") {
    GraphStore store;
    const auto a = store.upsert_triple({"四物汤", R::IngredientUse, "当归", {}, {}}, "b/ch0002#0000");
    const auto b = store.upsert_triple({" 四物汤", R::IngredientUse, "当归 ", {}, {}}, "a/ch0001#0000");
    CHECK(a.created);
    CHECK_FALSE(b.created);
    CHECK(a.triple_id == b.triple_id);
    CHECK(a.triple_id.value == "IngredientUse|Treatment:四物汤|Ingredient:当归");
    const auto view = store.read();
    REQUIRE(view.triple_count() == 1);
    CHECK(view.triple(0).provenance == std::vector<std::string>{"a/ch0001#0000", "b/ch0002#0000"});
}

TEST_CASE("ten scripted triples, two repeats") {
    const auto store = build(kTen);
    const auto s = store.stats();
    CHECK(s.total_triples == 8);
    CHECK(s.total_mentions == 10);
    CHECK(s.triples.at(R::IngredientUse) == 4);
    CHECK(s.mentions.at(R::IngredientUse) == 5);
    CHECK(s.triples.at(R::TreatDisease) == 2);
    CHECK(s.mentions.at(R::TreatDisease) == 3);
    CHECK(s.triples.at(R::SymptomsPresent) == 1);
    CHECK(s.triples.at(R::TreatmentSymptom) == 1);
    CHECK(s.triples.at(R::BelongToCategory) == 0);
    CHECK(s.total_entities == 8);
    CHECK(s.entities.at(C::Treatment) == 2);
    CHECK(s.entities.at(C::Ingredient) == 3);
    CHECK(s.entities.at(C::Disease) == 2);
    CHECK(s.entities.at(C::Symptom) == 1);
}

TEST_CASE("empty store statistics are all zero") {
    const auto s = GraphStore{}.stats();
    CHECK(s.total_entities == 0);
    CHECK(s.total_triples == 0);
    CHECK(s.total_mentions == 0);
    for (auto r : kAllRelations) CHECK(s.triples.at(r) == 0);
    for (auto c : kAllCategories) CHECK(s.entities.at(c) == 0);
}

TEST_CASE("domain/range violations are quarantined") {
    GraphStore store;
    store.upsert_triple({"四物汤", R::TreatDisease, "月经不调", {}, {}}, "c1");
    // 月经不调 already is a Disease; it cannot be the subject of Ingredient Use.
    CHECK_THROWS_AS(store.upsert_triple({"月经不调", R::IngredientUse, "当归", {}, {}}, "c2"), DomainRangeError);
    CHECK_THROWS_AS(store.upsert_triple({"x", R::IngredientUse, "y", C::Disease, {}}, "c2"), DomainRangeError);
    CHECK_THROWS_AS(store.upsert_triple({"x", R::IncludeChapter, "y", {}, {}}, "c2"), DomainRangeError);
    const auto q = store.quarantine();
    REQUIRE(q.size() == 3);
    CHECK(q[0].chunk_id == "c2");
    CHECK(q[0].reason.find("Disease") != std::string::npos);
    CHECK(store.stats().quarantined == 3);
    CHECK(store.stats().total_triples == 1);
    CHECK_THROWS_AS(store.upsert_triple({"  ", R::IngredientUse, "y", {}, {}}, "c2"), InvalidNameError);
}

TEST_CASE("wide domains take an explicit category") {
    GraphStore store;
    store.upsert_triple({"甲书", R::IncludeChapter, "甲书·一", C::Book, {}}, "c1");
    store.upsert_triple({"甲书·卷上", R::IncludeChapter, "甲书·卷上·二", C::Section, {}}, "c1");
    const auto view = store.read();
    CHECK(view.find_entity(EntityId{"Book:甲书"}));
    CHECK(view.find_entity(EntityId{"Section:甲书·卷上"}));
    CHECK(view.find_entity(EntityId{"Chapter:甲书·一"}));
}

TEST_CASE("neighbourhood basics") {
    GraphStore store;
    store.upsert_triple({"A", R::TreatDisease, "B", {}, {}}, "c");
    store.upsert_triple({"B", R::SymptomsPresent, "C", {}, {}}, "c");
    const auto view = store.read();
    const EntityId a{"Treatment:A"};

    auto zero = view.neighborhood(a, 0);
    CHECK(zero.entities.size() == 1);
    CHECK(zero.triples.empty());

    auto one = view.neighborhood(a, 1);
    REQUIRE(one.entities.size() == 2);
    CHECK(one.entities[0].id.value == "Disease:B");
    CHECK(one.triples.size() == 1);

    CHECK(view.neighborhood(a, 2).triples.size() == 2);
    CHECK(view.neighborhood(a, 2, std::nullopt, Direction::In).triples.empty());
    CHECK(view.neighborhood(a, 2, RelationSet{R::TreatDisease}).triples.size() == 1);
    CHECK_THROWS_AS(view.neighborhood(EntityId{"Treatment:nope"}, 1), NotFoundError);
}

TEST_CASE("neighbourhood matches the relaxation oracle on random graphs") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 60; ++trial) {
        const auto store = testing::random_graph(rng, 50, 200);
        const auto view = store.read();
        if (view.entity_count() == 0) continue;
        for (int q = 0; q < 5; ++q) {
            const auto& seed =
                view.entity(std::uniform_int_distribution<EntityIndex>(0, view.entity_count() - 1)(rng)).id;
            const auto depth = std::uniform_int_distribution<std::size_t>(0, 3)(rng);
            const auto dir = std::array{Direction::Out, Direction::In, Direction::Both}[q % 3];
            std::optional<RelationSet> filter;
            if (q == 4) filter = RelationSet{R::IngredientUse, R::TreatDisease, R::BelongToCategory};
            CHECK(testing::as_answer(view.neighborhood(seed, depth, filter, dir)) ==
                  testing::reference_neighborhood(store, seed, depth, filter, dir));
        }
    }
}

TEST_CASE("snapshot round trip") {
    const auto store = build(kTen);
    std::stringstream buffer(snapshot_of(store));
    const auto loaded = load_snapshot(buffer);
    CHECK(loaded.stats() == store.stats());
    CHECK(snapshot_of(loaded) == snapshot_of(store));
}

TEST_CASE("insertion order does not change snapshot bytes") {
    auto shuffled = kTen;
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i) {
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(snapshot_of(build(shuffled)) == snapshot_of(build(kTen)));
    }
}

TEST_CASE("damaged snapshots are rejected whole") {
    const auto text = snapshot_of(build(kTen));
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) lines.push_back(l);

    SUBCASE("truncated") {
        std::string cut;
        for (std::size_t i = 0; i + 2 < lines.size(); ++i) cut += lines[i] + "\n";
        std::istringstream s(cut);
        CHECK_THROWS_AS(load_snapshot(s), SnapshotError);
    }
    SUBCASE("cut mid-record names the line") {
        std::string cut;
        for (std::size_t i = 0; i + 1 < lines.size(); ++i) cut += lines[i] + "\n";
        cut += lines.back().substr(0, lines.back().size() / 2) + "\n";
        std::istringstream s(cut);
        try {
            load_snapshot(s);
            FAIL("expected SnapshotError");
        } catch (const SnapshotError& e) {
            CHECK(e.line() == lines.size());
        }
    }
    SUBCASE("unknown entity in a triple") {
        auto bad = lines;
        const auto pos = bad.back().find("Treatment:");
        bad.back().replace(pos, 10, "Treatment:zz");
        std::string joined;
        for (const auto& l : bad) joined += l + "\n";
        std::istringstream s(joined);
        CHECK_THROWS_AS(load_snapshot(s), SnapshotError);
    }
    SUBCASE("no header") {
        std::istringstream s("");
        CHECK_THROWS_AS(load_snapshot(s), SnapshotError);
    }
}

TEST_CASE("fixture graph: hierarchy, content and categories") {
    const auto& f = testing::fixture();
    auto client = testing::fixture_client();
    const auto report = extract_corpus(f.chunks, client, {});
    BuildSummary summary;
    const auto store = build_graph(f.chunks, report, &summary);
    const auto s = store.stats();
    CHECK(testing::content_triples(store) == f.gold);
    CHECK(s.total_triples == testing::kContentTriples + testing::kStructuralTriples);
    CHECK(s.total_entities == testing::kEntities);
    CHECK(s.triples.at(R::IncludeSection) == 2);
    CHECK(s.triples.at(R::IncludeChapter) == 12);
    CHECK(s.triples.at(R::BelongToBook) == 12);
    CHECK(s.triples.at(R::BelongToCategory) == 48);
    CHECK(summary.content_duplicates == 4);
    CHECK(summary.quarantined == 0);

    const auto view = store.read();
    CHECK(view.find_triple(TripleId{"IncludeChapter|Section:妇科秘方·卷上|Chapter:妇科秘方·卷上·调经门"}));
    CHECK(view.find_triple(TripleId{"IncludeChapter|Book:产科心法|Chapter:产科心法·胎动不安"}));
    CHECK(view.find_triple(TripleId{"BelongToCategory|Book:妇科秘方|Category:Gynecology"}));
    CHECK(view.find_triple(TripleId{"BelongToCategory|Ingredient:当归|Category:Ingredient"}));
    const auto danggui = view.find_triple(TripleId{"IngredientUse|Treatment:四物汤|Ingredient:当归"});
    REQUIRE(danggui);
    CHECK(view.triple(*danggui).provenance == std::vector<std::string>{"fkmf/ch0001#0000", "gsyy/ch0002#0000"});
}

}

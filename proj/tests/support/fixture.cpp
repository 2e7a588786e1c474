#include "fixture.hpp"

#include "tcmkg/graph_builder.hpp"
#include "tcmkg/unicode.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tcmkg::testing {

using nlohmann::json;

namespace {

enum class Wrap { None, Prose, Fence };

struct T {
    const char* s;
    const char* p;
    const char* o;
};

struct ChapterSpec {
    const char* book;
    const char* book_id;
    const char* specialty;
    const char* section; // nullptr: none
    const char* chapter;
    const char* text;
    std::vector<T> response;
    Wrap wrap = Wrap::None;
};

// Predicate spellings vary on purpose; the parser is expected to accept all of them.
const std::vector<ChapterSpec>& chapters() {
    static const std::vector<ChapterSpec> specs = {
        {"妇科秘方", "fkmf", "Gynecology", "卷上", "调经门",
         "妇人月经不调，或前或后，经行腹痛者，血虚而滞也。治宜养血调经，四物汤主之。四物汤：当归、川芎、白芍、熟地黄，水煎服。",
         {{"调经门", "Treatment Plan", "四物汤"},
          {"四物汤", "Treat Disease", "月经不调"},
          {"调经门", "Describe Disease", "月经不调"},
          {"四物汤", "Treatment Symptom", "经行腹痛"},
          {"月经不调", "Symptoms Present", "经行腹痛"},
          {"四物汤", "Ingredient Use", "当归"},
          {"四物汤", "Ingredient Use", "川芎"},
          {"四物汤", "IngredientUse", "白芍"},
          {"四物汤", "ingredient_use", "熟地黄"},
          {"四物汤", "Cures", "血虚"}},
         Wrap::Prose},
        {"妇科秘方", "fkmf", "Gynecology", "卷上", "经闭门",
         "经闭不行，瘀血内阻，少腹刺痛。桃红四物汤主之：桃仁、红花，合当归等四物，活血通经。",
         {{"经闭门", "Treatment Plan", "桃红四物汤"},
          {"桃红四物汤", "Treat Disease", "经闭"},
          {"桃红四物汤", "Ingredient Use", "桃仁"},
          {"桃红四物汤", "Ingredient Use", "红花"},
          {"桃红四物汤", "Use Ingredient", "当归"}},
         Wrap::Fence},
        {"妇科秘方", "fkmf", "Gynecology", "卷下", "带下门",
         "带下色白，绵绵不断，脾虚湿盛也。完带汤主之：白术、山药，健脾燥湿。",
         {{"带下门", "TreatmentPlan", "完带汤"},
          {"完带汤", "Treat Disease", "带下"},
          {"完带汤", "Prevents", "湿浊"},
          {"完带汤", "Ingredient Use", "白术"},
          {"完带汤", "Ingredient Use", "山药"}}},
        {"妇科秘方", "fkmf", "Gynecology", "卷下", "崩漏门",
         "崩漏暴下，气随血脱，急宜固本止崩汤：人参大补元气，以摄血归经。",
         {{"崩漏门", "Treatment Plan", "固本止崩汤"},
          {"固本止崩汤", "treat disease", "崩漏"},
          {"固本止崩汤", "Ingredient Use", "人参"}}},

        {"产科心法", "ckxf", "Obstetrics", nullptr, "妊娠恶阻",
         "妊娠恶阻，恶心呕吐，饮食不下。香砂六君子汤主之，方中人参益气和胃。",
         {{"香砂六君子汤", "Treat Disease", "妊娠恶阻"},
          {"妊娠恶阻", "Symptoms Present", "呕吐"},
          {"香砂六君子汤", "Ingredient Use", "人参"}}},
        {"产科心法", "ckxf", "Obstetrics", nullptr, "胎动不安",
         "胎动不安，腰酸腹坠，肾虚不固也。寿胎丸主之，菟丝子补肾安胎。",
         {{"胎动不安", "Describe Disease", "胎动不安"},
          {"寿胎丸", "Treat Disease", "胎动不安"},
          {"寿胎丸", "Harmonizes", "胎元"},
          {"寿胎丸", "药物组成", "菟丝子"}}},
        {"产科心法", "ckxf", "Obstetrics", nullptr, "产后腹痛",
         "产后腹痛，恶露不下，瘀阻胞宫。生化汤主之：当归、川芎、桃仁，化瘀生新。",
         {{"生化汤", "Treat Disease", "产后腹痛"},
          {"生化汤", "Ingredient Use", "当归"},
          {"生化汤", "Ingredient Use", "川芎"},
          {"生化汤", "Ingredient Use", "桃仁"}}},
        {"产科心法", "ckxf", "Obstetrics", nullptr, "产后发热",
         "产后发热，恶露未尽者，仍以生化汤加减，重用当归养血。",
         {{"产后发热", "Symptoms Present", "发热"},
          {"生化汤", "Ingredient Use", "当归"}}},

        {"广嗣要语", "gsyy", "Fertility", nullptr, "种子",
         "求子之道，先调经脉。毓麟珠主之，人参补气以助孕。",
         {{"种子", "Treatment Plan", "毓麟珠"},
          {"毓麟珠", "Ingredient Use", "人参"}}},
        {"广嗣要语", "gsyy", "Fertility", nullptr, "调元",
         "调元以种子。毓麟珠治不孕，人参为君。妇人不孕，亦可参四物汤，当归养血。",
         {{"毓麟珠", "Treat Disease", "不孕"},
          {"毓麟珠", "Ingredient Use", "人参"},
          {"毓麟珠", "Treats Disease", " 不孕 "},
          {"四物汤", "Ingredient Use", "当归"}}},
        {"广嗣要语", "gsyy", "Fertility", nullptr, "择配",
         "择配之法，当观其体质禀赋，不在方药。",
         {}},
        {"广嗣要语", "gsyy", "Fertility", nullptr, "辨脉",
         "不孕之脉，多见沉细，其人月经后期，量少色淡。",
         {{"不孕", "Symptoms Present", "月经后期"}}},
    };
    return specs;
}

// Written out by hand rather than derived from the responses above.
const std::vector<T>& gold_triples() {
    static const std::vector<T> gold = {
        {"妇科秘方·卷上·调经门", "Treatment Plan", "四物汤"},
        {"四物汤", "Treat Disease", "月经不调"},
        {"妇科秘方·卷上·调经门", "Describe Disease", "月经不调"},
        {"四物汤", "Treatment Symptom", "经行腹痛"},
        {"月经不调", "Symptoms Present", "经行腹痛"},
        {"四物汤", "Ingredient Use", "当归"},
        {"四物汤", "Ingredient Use", "川芎"},
        {"四物汤", "Ingredient Use", "白芍"},
        {"四物汤", "Ingredient Use", "熟地黄"},
        {"妇科秘方·卷上·经闭门", "Treatment Plan", "桃红四物汤"},
        {"桃红四物汤", "Treat Disease", "经闭"},
        {"桃红四物汤", "Ingredient Use", "桃仁"},
        {"桃红四物汤", "Ingredient Use", "红花"},
        {"桃红四物汤", "Ingredient Use", "当归"},
        {"妇科秘方·卷下·带下门", "Treatment Plan", "完带汤"},
        {"完带汤", "Treat Disease", "带下"},
        {"完带汤", "Ingredient Use", "白术"},
        {"完带汤", "Ingredient Use", "山药"},
        {"妇科秘方·卷下·崩漏门", "Treatment Plan", "固本止崩汤"},
        {"固本止崩汤", "Treat Disease", "崩漏"},
        {"固本止崩汤", "Ingredient Use", "人参"},
        {"香砂六君子汤", "Treat Disease", "妊娠恶阻"},
        {"妊娠恶阻", "Symptoms Present", "呕吐"},
        {"香砂六君子汤", "Ingredient Use", "人参"},
        {"产科心法·胎动不安", "Describe Disease", "胎动不安"},
        {"寿胎丸", "Treat Disease", "胎动不安"},
        {"寿胎丸", "Ingredient Use", "菟丝子"},
        {"生化汤", "Treat Disease", "产后腹痛"},
        {"生化汤", "Ingredient Use", "当归"},
        {"生化汤", "Ingredient Use", "川芎"},
        {"生化汤", "Ingredient Use", "桃仁"},
        {"产后发热", "Symptoms Present", "发热"},
        {"广嗣要语·种子", "Treatment Plan", "毓麟珠"},
        {"毓麟珠", "Ingredient Use", "人参"},
        {"毓麟珠", "Treat Disease", "不孕"},
        {"不孕", "Symptoms Present", "月经后期"},
    };
    return gold;
}

std::string render_response(const ChapterSpec& spec) {
    json array = json::array();
    for (const auto& t : spec.response) array.push_back(json{{"subject", t.s}, {"predicate", t.p}, {"object", t.o}});
    const auto body = array.dump(2, ' ', false);
    switch (spec.wrap) {
    case Wrap::Prose:
        return "根据所给段落，抽取到如下三元组：\n" + body + "\n以上结果仅包含原文明确陈述的关系。";
    case Wrap::Fence:
        return "```json\n" + body + "\n```";
    case Wrap::None:
        break;
    }
    return body;
}

Fixture make_fixture() {
    Fixture f;
    for (const auto& c : chapters()) {
        json record{{"book", c.book}, {"book_id", c.book_id}, {"specialty", c.specialty}, {"chapter", c.chapter},
                    {"text", c.text}};
        if (c.section) record["section"] = c.section;
        f.corpus_jsonl += record.dump(-1, ' ', false) + "\n";
        for (const auto& t : c.response) {
            if (parse_relation(t.p)) ++f.well_formed_triples;
            else ++f.invalid_predicates;
        }
    }
    std::istringstream in(f.corpus_jsonl);
    f.books = parse_corpus(in, CorpusFormat::JsonLines, "fixture");
    f.chunks = chunk_corpus(f.books, ChunkingOptions{});
    if (f.chunks.size() != chapters().size()) throw std::logic_error("fixture chapters must fit in one chunk each");

    for (std::size_t i = 0; i < chapters().size(); ++i) {
        const auto fp = unicode::fingerprint(f.chunks[i].text);
        auto response = render_response(chapters()[i]);
        f.mock_jsonl += json{{"fingerprint", fp}, {"response", response}}.dump(-1, ' ', false) + "\n";
        f.responses.emplace(fp, std::move(response));
    }

    for (const auto& t : gold_triples()) {
        f.gold.insert(eval::AnnotatedTriple{
            "", eval::CanonicalTriple{normalize_entity_name(t.s), *parse_relation(t.p), normalize_entity_name(t.o)}});
    }
    f.repeats = f.well_formed_triples - f.gold.size();
    return f;
}

} // namespace

const Fixture& fixture() {
    static const Fixture f = make_fixture();
    return f;
}

MockClient fixture_client() {
    std::map<std::string, MockClient::Entry> script;
    for (const auto& [fp, response] : fixture().responses) script.emplace(fp, MockClient::Entry{response, std::nullopt});
    return MockClient(std::move(script));
}

const GraphStore& fixture_store() {
    static const GraphStore store = [] {
        auto client = fixture_client();
        return build_graph(fixture().chunks, extract_corpus(fixture().chunks, client, {}));
    }();
    return store;
}

std::set<eval::AnnotatedTriple> content_triples(const GraphStore& store) {
    std::set<eval::AnnotatedTriple> out;
    const auto view = store.read();
    for (TripleIndex i = 0; i < view.triple_count(); ++i) {
        const auto& t = view.triple(i);
        if (is_structural(t.relation)) continue;
        out.insert(eval::AnnotatedTriple{
            "", eval::CanonicalTriple{view.entity(view.subject_of(i)).name, t.relation, view.entity(view.object_of(i)).name}});
    }
    return out;
}

void write_fixture_files(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const auto& f = fixture();
    auto write = [&](const char* name, const std::string& content) {
        std::ofstream out(dir / name, std::ios::binary);
        out << content;
    };
    write("corpus.jsonl", f.corpus_jsonl);
    write("mock.jsonl", f.mock_jsonl);
    std::string gold;
    for (const auto& t : f.gold) {
        gold += json{{"subject", t.triple.subject}, {"predicate", surface(t.triple.relation)}, {"object", t.triple.object}}
                    .dump(-1, ' ', false) +
                "\n";
    }
    write("gold.jsonl", gold);
    write("config.json", json{{"corpus", {{"paths", {"corpus.jsonl"}}}},
                              {"llm", {{"provider", "mock"}, {"mock_responses", "mock.jsonl"}}},
                              {"snapshot", "graph.snapshot"},
                              {"server", {{"port", 0}}}}
                             .dump(2) +
                             "\n");
}

} // namespace tcmkg::testing

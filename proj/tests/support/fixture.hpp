#pragma once

#include "tcmkg/corpus.hpp"
#include "tcmkg/evalkit.hpp"
#include "tcmkg/graph.hpp"
#include "tcmkg/llm_client.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

// Synthetic three-book corpus with scripted extraction responses.
//
//   妇科秘方 (Gynecology)  卷上: 调经门 经闭门 / 卷下: 带下门 崩漏门
//   产科心法 (Obstetrics)  妊娠恶阻 胎动不安 产后腹痛 产后发热
//   广嗣要语 (Fertility)   种子 调元 择配 辨脉
//
// The responses carry 40 well-formed content triples (36 distinct, 4 repeats:
// three Ingredient Use, one Treat Disease) and 3 records with unknown
// predicates. 择配 answers "[]". One response is wrapped in prose, one in a
// code fence.
namespace tcmkg::testing {

struct Fixture {
    std::string corpus_jsonl;
    std::vector<BookSource> books;
    std::vector<Chunk> chunks;
    /// fingerprint -> response
    std::map<std::string, std::string> responses;
    std::string mock_jsonl;
    /// The 36 distinct content triples under the graph's entity names.
    std::set<eval::AnnotatedTriple> gold;
    std::size_t well_formed_triples = 0;
    std::size_t invalid_predicates = 0;
    std::size_t repeats = 0;
};

const Fixture& fixture();

MockClient fixture_client();

/// Graph built from the fixture with the scripted client.
const GraphStore& fixture_store();

/// Distinct content triples of a store as evaluation triples (item left empty).
std::set<eval::AnnotatedTriple> content_triples(const GraphStore& store);

// Counted by hand from the layout above.
//   IncludeSection 2 (卷上, 卷下); IncludeChapter 12; BelongToBook 12;
//   BelongToCategory 48 = 3 books + 2 sections + 12 chapters + 8 treatments
//                       + 9 diseases + 4 symptoms + 10 ingredients.
inline constexpr std::size_t kContentTriples = 36;
inline constexpr std::size_t kStructuralTriples = 2 + 12 + 12 + 48;
// 9 category nodes: 3 specialties + Section, Chapter, Treatment, Disease, Symptom, Ingredient.
inline constexpr std::size_t kEntities = 48 + 9;

/// corpus.jsonl, mock.jsonl, gold.jsonl, config.json
void write_fixture_files(const std::filesystem::path& dir);

// Questions used across generation, service and acceptance tests.
inline constexpr const char* kDiagnosticQuestion = "经行腹痛当用何方？";
inline constexpr const char* kIngredientQuery = "当归";
inline constexpr const char* kUnknownQuestion = "伤风鼻塞如何治疗";

} // namespace tcmkg::testing

#pragma once

#include "tcmkg/corpus.hpp"
#include "tcmkg/extraction.hpp"
#include "tcmkg/graph.hpp"

#include <span>
#include <string>

namespace tcmkg {

// Entity names for hierarchy nodes. Sections and chapters are qualified by
// their book so that equally titled chapters of different books stay apart.
std::string book_entity_name(const Chunk& chunk);
std::string section_entity_name(const Chunk& chunk);
std::string chapter_entity_name(const Chunk& chunk);
/// Label of the Category node an entity belongs to (specialty for books).
std::string category_label(const EntityRecord& entity, std::span<const Chunk> chunks);

struct BuildSummary {
    std::size_t structural_created = 0;
    std::size_t content_created = 0;
    std::size_t content_duplicates = 0;
    std::size_t category_created = 0;
    std::size_t quarantined = 0;
};

/// Registers every chunk and adds IncludeSection / IncludeChapter / BelongToBook.
void add_structure(GraphStore& store, std::span<const Chunk> chunks, BuildSummary& summary);

/// Adds extracted content triples. Subjects of Chapter-domain relations
/// (TreatmentPlan, DescribeDisease) are bound to the chunk's own chapter.
void add_extraction(GraphStore& store, const ExtractionReport& report, std::span<const Chunk> chunks,
                    BuildSummary& summary);

/// One BelongToCategory edge for every non-Category entity. Run last.
void add_categories(GraphStore& store, std::span<const Chunk> chunks, BuildSummary& summary);

GraphStore build_graph(std::span<const Chunk> chunks, const ExtractionReport& report,
                       BuildSummary* summary = nullptr);

} // namespace tcmkg

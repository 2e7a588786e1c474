#include "tcmkg/graph_builder.hpp"

#include <fmt/format.h>

#include <map>
#include <set>

namespace tcmkg {

std::string book_entity_name(const Chunk& chunk) { return chunk.book_title; }

std::string section_entity_name(const Chunk& chunk) {
    return fmt::format("{}·{}", chunk.book_title, chunk.section_title);
}

std::string chapter_entity_name(const Chunk& chunk) {
    if (chunk.section_implicit) return fmt::format("{}·{}", chunk.book_title, chunk.chapter_title);
    return fmt::format("{}·{}·{}", chunk.book_title, chunk.section_title, chunk.chapter_title);
}

std::string category_label(const EntityRecord& entity, std::span<const Chunk> chunks) {
    if (entity.category == EntityCategory::Book) {
        for (const auto& c : chunks) {
            if (normalize_entity_name(book_entity_name(c)) == entity.name) return std::string(to_string(c.specialty));
        }
    }
    return std::string(to_string(entity.category));
}

namespace {

void upsert_counted(GraphStore& store, const TripleInput& input, std::string_view chunk_id, std::size_t& created,
                    std::size_t* duplicates, BuildSummary& summary) {
    try {
        if (store.upsert_triple(input, chunk_id).created) {
            ++created;
        } else if (duplicates != nullptr) {
            ++*duplicates;
        }
    } catch (const DomainRangeError&) {
        ++summary.quarantined;
    } catch (const InvalidNameError&) {
        ++summary.quarantined;
    }
}

} // namespace

void add_structure(GraphStore& store, std::span<const Chunk> chunks, BuildSummary& summary) {
    std::map<std::pair<std::string, std::string>, const Chunk*> first_chunk;
    for (const auto& c : chunks) {
        store.register_chunk(ChunkRef{c.chunk_id, c.book_title, c.chapter_title, c.chunk_index});
        auto& slot = first_chunk[{c.book_id, c.chapter_id}];
        if (slot == nullptr || c.chunk_id < slot->chunk_id) slot = &c;
    }

    std::set<std::pair<std::string, std::string>> sections_done;
    for (const auto& [key, chunk] : first_chunk) {
        const auto& c = *chunk;
        const auto book = book_entity_name(c);
        const auto chapter = chapter_entity_name(c);
        if (c.section_implicit) {
            upsert_counted(store, {book, RelationType::IncludeChapter, chapter, EntityCategory::Book, std::nullopt},
                           c.chunk_id, summary.structural_created, nullptr, summary);
        } else {
            const auto section = section_entity_name(c);
            if (sections_done.insert({c.book_id, c.section_title}).second) {
                upsert_counted(store, {book, RelationType::IncludeSection, section, std::nullopt, std::nullopt},
                               c.chunk_id, summary.structural_created, nullptr, summary);
            }
            upsert_counted(store, {section, RelationType::IncludeChapter, chapter, EntityCategory::Section, std::nullopt},
                           c.chunk_id, summary.structural_created, nullptr, summary);
        }
        upsert_counted(store, {chapter, RelationType::BelongToBook, book, std::nullopt, std::nullopt}, c.chunk_id,
                       summary.structural_created, nullptr, summary);
    }
}

void add_extraction(GraphStore& store, const ExtractionReport& report, std::span<const Chunk> chunks,
                    BuildSummary& summary) {
    std::map<std::string_view, const Chunk*> by_id;
    for (const auto& c : chunks) by_id.emplace(c.chunk_id, &c);

    for (const auto& t : report.triples) {
        TripleInput input{t.subject, t.relation, t.object, std::nullopt, std::nullopt};
        if (signature(t.relation).domain == CategorySet{EntityCategory::Chapter}) {
            if (auto it = by_id.find(t.chunk_id); it != by_id.end()) {
                input.subject = chapter_entity_name(*it->second);
                input.subject_category = EntityCategory::Chapter;
            }
        }
        upsert_counted(store, input, t.chunk_id, summary.content_created, &summary.content_duplicates, summary);
    }
}

void add_categories(GraphStore& store, std::span<const Chunk> chunks, BuildSummary& summary) {
    std::map<std::string, std::string> book_specialty;
    for (const auto& c : chunks) book_specialty.emplace(normalize_entity_name(book_entity_name(c)), to_string(c.specialty));

    struct Pending {
        std::string name;
        EntityCategory category;
        std::string label;
        std::string provenance;
    };
    std::vector<Pending> pending;
    {
        const auto view = store.read();
        for (auto index : view.entities_sorted()) {
            const auto& e = view.entity(index);
            if (e.category == EntityCategory::Category) continue;
            std::string provenance;
            for (auto span : {view.outgoing(index), view.incoming(index)}) {
                for (auto t : span) {
                    const auto& first = view.triple(t).provenance.front();
                    if (provenance.empty() || first < provenance) provenance = first;
                }
            }
            std::string label(to_string(e.category));
            if (e.category == EntityCategory::Book) {
                if (auto it = book_specialty.find(e.name); it != book_specialty.end()) label = it->second;
            }
            pending.push_back({e.name, e.category, std::move(label), std::move(provenance)});
        }
    }
    for (const auto& p : pending) {
        if (p.provenance.empty()) continue;
        upsert_counted(store, {p.name, RelationType::BelongToCategory, p.label, p.category, EntityCategory::Category}, p.provenance,
                       summary.category_created, nullptr, summary);
    }
}

GraphStore build_graph(std::span<const Chunk> chunks, const ExtractionReport& report, BuildSummary* summary) {
    GraphStore store;
    BuildSummary local;
    add_structure(store, chunks, local);
    add_extraction(store, report, chunks, local);
    add_categories(store, chunks, local);
    if (summary != nullptr) *summary = local;
    return store;
}

} // namespace tcmkg

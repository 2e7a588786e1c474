#pragma once

#include "tcmkg/error.hpp"
#include "tcmkg/schema.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tcmkg {

/// "Category:name", e.g. "Ingredient:当归". Content-derived, so stores built
/// from the same triples agree on ids regardless of insertion order.
struct EntityId {
    std::string value;
    auto operator<=>(const EntityId&) const = default;
};

/// "Relation|subject id|object id".
struct TripleId {
    std::string value;
    auto operator<=>(const TripleId&) const = default;
};

EntityId make_entity_id(EntityCategory category, std::string_view canonical_name);

class InvalidNameError : public Error {
public:
    using Error::Error;
};

/// Subject or object category outside the relation's domain/range.
class DomainRangeError : public Error {
public:
    using Error::Error;
};

/// NFC, trimmed, inner white-space runs collapsed. Idempotent.
/// Throws InvalidNameError when nothing is left after trimming.
std::string normalize_entity_name(std::string_view raw);

struct EntityRecord {
    EntityId id;
    std::string name;
    EntityCategory category;
};

struct StoredTriple {
    TripleId id;
    EntityId subject;
    RelationType relation;
    EntityId object;
    /// Chunk ids, sorted; one entry per insertion (a multiset).
    std::vector<std::string> provenance;
};

/// A validated triple on its way into the store. Categories are filled from the
/// relation's domain/range when it admits exactly one category; relations with
/// a wider domain (BelongToCategory, IncludeChapter) need them spelled out.
struct TripleInput {
    std::string subject;
    RelationType relation;
    std::string object;
    std::optional<EntityCategory> subject_category;
    std::optional<EntityCategory> object_category;
};

struct UpsertResult {
    TripleId triple_id;
    bool created = false;
};

/// Where a chunk came from; resolves provenance into citations.
struct ChunkRef {
    std::string chunk_id;
    std::string book_title;
    std::string chapter_title;
    std::size_t chunk_index = 0;
    bool operator==(const ChunkRef&) const = default;
};

struct QuarantineRecord {
    TripleInput input;
    std::string chunk_id;
    std::string reason;
};

struct GraphStats {
    std::map<EntityCategory, std::size_t> entities;
    std::map<RelationType, std::size_t> triples;
    std::size_t total_entities = 0;
    std::size_t total_triples = 0;
    /// Sum of provenance lengths, i.e. how often triples were asserted.
    std::size_t total_mentions = 0;
    std::map<RelationType, std::size_t> mentions;
    std::size_t quarantined = 0;

    bool operator==(const GraphStats&) const = default;
};

struct Subgraph {
    /// Sorted by id.
    std::vector<EntityRecord> entities;
    /// Sorted by id.
    std::vector<StoredTriple> triples;
};

using EntityIndex = std::uint32_t;
using TripleIndex = std::uint32_t;

namespace detail {
struct GraphData {
    std::vector<EntityRecord> entities;
    std::unordered_map<std::string, EntityIndex> entity_by_id;
    std::vector<StoredTriple> triples;
    std::vector<std::pair<EntityIndex, EntityIndex>> endpoints;
    std::unordered_map<std::string, TripleIndex> triple_by_id;
    std::vector<std::vector<TripleIndex>> out;
    std::vector<std::vector<TripleIndex>> in;
    std::map<std::string, ChunkRef, std::less<>> chunks;
    std::vector<QuarantineRecord> quarantine;
};
} // namespace detail

class GraphStore;
GraphStore load_snapshot(std::istream& in);

/// Multi-relational property graph. Many concurrent readers, one writer at a
/// time; every upsert is atomic.
class GraphStore {
public:
    class ReadView;

    GraphStore();
    GraphStore(GraphStore&&) noexcept;
    GraphStore& operator=(GraphStore&&) noexcept;
    ~GraphStore();

    /// Creates or reuses both entities, then creates the triple or appends
    /// `chunk_id` to its provenance. Throws DomainRangeError (after recording
    /// the input in the quarantine log) or InvalidNameError.
    UpsertResult upsert_triple(const TripleInput& input, std::string_view chunk_id);

    void register_chunk(ChunkRef chunk);

    /// Shared lock held for the lifetime of the view.
    ReadView read() const;

    GraphStats stats() const;
    std::vector<QuarantineRecord> quarantine() const;

private:
    friend GraphStore load_snapshot(std::istream& in);

    std::unique_ptr<detail::GraphData> data_;
    std::unique_ptr<std::shared_mutex> mutex_;
};

class GraphStore::ReadView {
public:
    std::size_t entity_count() const { return data_->entities.size(); }
    std::size_t triple_count() const { return data_->triples.size(); }

    const EntityRecord& entity(EntityIndex index) const { return data_->entities.at(index); }
    const StoredTriple& triple(TripleIndex index) const { return data_->triples.at(index); }
    EntityIndex subject_of(TripleIndex index) const { return data_->endpoints.at(index).first; }
    EntityIndex object_of(TripleIndex index) const { return data_->endpoints.at(index).second; }

    std::span<const TripleIndex> outgoing(EntityIndex index) const { return data_->out.at(index); }
    std::span<const TripleIndex> incoming(EntityIndex index) const { return data_->in.at(index); }

    std::optional<EntityIndex> find_entity(const EntityId& id) const;
    std::optional<TripleIndex> find_triple(const TripleId& id) const;
    const ChunkRef* chunk(std::string_view chunk_id) const;
    const std::map<std::string, ChunkRef, std::less<>>& chunks() const { return data_->chunks; }

    /// Entity indices ordered by (category, name).
    std::vector<EntityIndex> entities_sorted() const;
    /// Triple indices ordered by (relation, subject id, object id).
    std::vector<TripleIndex> triples_sorted() const;

    GraphStats stats() const;

    /// Entities and triples reachable from `seed` in at most `depth` steps.
    /// A triple is included when it can be walked from an entity at distance
    /// < depth in an allowed direction. Throws NotFoundError for unknown seeds.
    Subgraph neighborhood(const EntityId& seed, std::size_t depth,
                          const std::optional<RelationSet>& relation_filter = std::nullopt,
                          Direction direction = Direction::Both) const;

private:
    friend class GraphStore;
    ReadView(const detail::GraphData* data, std::shared_mutex& mutex) : lock_(mutex), data_(data) {}

    std::shared_lock<std::shared_mutex> lock_;
    const detail::GraphData* data_;
};

/// Line-delimited JSON, versioned header first, then chunk refs, entities and
/// triples in canonical order. Identical stores give identical bytes.
void save_snapshot(const GraphStore& store, std::ostream& out);
/// All-or-nothing; throws SnapshotError naming the offending line.
GraphStore load_snapshot(std::istream& in);

/// Writes to a temporary sibling and renames over `path`.
void save_snapshot_file(const GraphStore& store, const std::filesystem::path& path);
GraphStore load_snapshot_file(const std::filesystem::path& path);

inline constexpr int kSnapshotVersion = 1;

} // namespace tcmkg

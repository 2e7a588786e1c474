#include "tcmkg/graph.hpp"

#include "tcmkg/unicode.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <tuple>
#include <variant>
#include <deque>
#include <fstream>
#include <mutex>
#include <set>
#include <unordered_map>

namespace tcmkg {

using nlohmann::json;

EntityId make_entity_id(EntityCategory category, std::string_view canonical_name) {
    return EntityId{fmt::format("{}:{}", to_string(category), canonical_name)};
}

namespace {

TripleId make_triple_id(RelationType relation, const EntityId& subject, const EntityId& object) {
    return TripleId{fmt::format("{}|{}|{}", identifier(relation), subject.value, object.value)};
}

std::string_view direction_word(bool subject_side) { return subject_side ? "subject" : "object"; }

// Category an endpoint resolves to, or an explanation why it cannot. Without
// an explicit category, a name already stored under some category resolves to
// that entity; a fresh name takes the relation's only admissible category.
std::variant<EntityCategory, std::string> resolve_category(const detail::GraphData& data, RelationType relation,
                                                           CategorySet allowed, const std::string& name,
                                                           const std::optional<EntityCategory>& given,
                                                           bool subject_side) {
    const auto side = direction_word(subject_side);
    const auto bound = subject_side ? "domain" : "range";
    if (given) {
        if (!allowed.contains(*given)) {
            return fmt::format("{} category {} is outside the {} of {}", side, to_string(*given), bound,
                               surface(relation));
        }
        return *given;
    }
    std::vector<EntityCategory> existing;
    for (auto c : kAllCategories) {
        if (data.entity_by_id.contains(make_entity_id(c, name).value)) existing.push_back(c);
    }
    std::optional<EntityCategory> admissible;
    for (auto c : existing) {
        if (allowed.contains(c)) {
            if (admissible) return fmt::format("{} '{}' is ambiguous for {}", side, name, surface(relation));
            admissible = c;
        }
    }
    if (admissible) return *admissible;
    if (!existing.empty()) {
        return fmt::format("{} '{}' is an existing {} entity, outside the {} of {}", side, name,
                           to_string(existing.front()), bound, surface(relation));
    }
    if (auto sole = allowed.sole()) return *sole;
    return fmt::format("{} category must be given for {}", side, surface(relation));
}

EntityIndex intern_entity(detail::GraphData& data, EntityCategory category, const std::string& name) {
    auto id = make_entity_id(category, name);
    if (auto it = data.entity_by_id.find(id.value); it != data.entity_by_id.end()) return it->second;
    const auto index = static_cast<EntityIndex>(data.entities.size());
    data.entity_by_id.emplace(id.value, index);
    data.entities.push_back(EntityRecord{std::move(id), name, category});
    data.out.emplace_back();
    data.in.emplace_back();
    return index;
}

TripleIndex add_triple(detail::GraphData& data, EntityIndex subject, RelationType relation, EntityIndex object,
                       TripleId id, std::vector<std::string> provenance) {
    const auto index = static_cast<TripleIndex>(data.triples.size());
    data.triple_by_id.emplace(id.value, index);
    data.triples.push_back(StoredTriple{std::move(id), data.entities[subject].id, relation, data.entities[object].id,
                                        std::move(provenance)});
    data.endpoints.emplace_back(subject, object);
    data.out[subject].push_back(index);
    data.in[object].push_back(index);
    return index;
}

} // namespace

std::string normalize_entity_name(std::string_view raw) {
    if (!unicode::is_valid_utf8(raw)) throw InvalidNameError("entity name is not valid UTF-8");
    auto name = unicode::nfc(unicode::collapse_whitespace(unicode::nfc(raw)));
    if (name.empty()) throw InvalidNameError("entity name is empty after trimming");
    return name;
}

GraphStore::GraphStore()
    : data_(std::make_unique<detail::GraphData>()), mutex_(std::make_unique<std::shared_mutex>()) {}
GraphStore::GraphStore(GraphStore&&) noexcept = default;
GraphStore& GraphStore::operator=(GraphStore&&) noexcept = default;
GraphStore::~GraphStore() = default;

UpsertResult GraphStore::upsert_triple(const TripleInput& input, std::string_view chunk_id) {
    if (chunk_id.empty()) throw std::invalid_argument("provenance chunk id must not be empty");
    const auto subject_name = normalize_entity_name(input.subject);
    const auto object_name = normalize_entity_name(input.object);
    const auto sig = signature(input.relation);

    std::unique_lock lock(*mutex_);
    auto subject_category =
        resolve_category(*data_, input.relation, sig.domain, subject_name, input.subject_category, true);
    auto object_category =
        resolve_category(*data_, input.relation, sig.range, object_name, input.object_category, false);
    for (const auto* resolved : {&subject_category, &object_category}) {
        if (const auto* reason = std::get_if<std::string>(resolved)) {
            data_->quarantine.push_back(QuarantineRecord{input, std::string(chunk_id), *reason});
            throw DomainRangeError(*reason);
        }
    }

    const auto subject = intern_entity(*data_, std::get<EntityCategory>(subject_category), subject_name);
    const auto object = intern_entity(*data_, std::get<EntityCategory>(object_category), object_name);
    auto id = make_triple_id(input.relation, data_->entities[subject].id, data_->entities[object].id);

    if (auto it = data_->triple_by_id.find(id.value); it != data_->triple_by_id.end()) {
        auto& provenance = data_->triples[it->second].provenance;
        provenance.insert(std::upper_bound(provenance.begin(), provenance.end(), chunk_id), std::string(chunk_id));
        return UpsertResult{std::move(id), false};
    }
    add_triple(*data_, subject, input.relation, object, id, {std::string(chunk_id)});
    return UpsertResult{std::move(id), true};
}

void GraphStore::register_chunk(ChunkRef chunk) {
    std::unique_lock lock(*mutex_);
    auto key = chunk.chunk_id;
    data_->chunks.insert_or_assign(std::move(key), std::move(chunk));
}

GraphStore::ReadView GraphStore::read() const { return ReadView(data_.get(), *mutex_); }

GraphStats GraphStore::stats() const { return read().stats(); }

std::vector<QuarantineRecord> GraphStore::quarantine() const {
    std::shared_lock lock(*mutex_);
    return data_->quarantine;
}

std::optional<EntityIndex> GraphStore::ReadView::find_entity(const EntityId& id) const {
    if (auto it = data_->entity_by_id.find(id.value); it != data_->entity_by_id.end()) return it->second;
    return std::nullopt;
}

std::optional<TripleIndex> GraphStore::ReadView::find_triple(const TripleId& id) const {
    if (auto it = data_->triple_by_id.find(id.value); it != data_->triple_by_id.end()) return it->second;
    return std::nullopt;
}

const ChunkRef* GraphStore::ReadView::chunk(std::string_view chunk_id) const {
    if (auto it = data_->chunks.find(chunk_id); it != data_->chunks.end()) return &it->second;
    return nullptr;
}

std::vector<EntityIndex> GraphStore::ReadView::entities_sorted() const {
    std::vector<EntityIndex> order(data_->entities.size());
    for (EntityIndex i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](EntityIndex a, EntityIndex b) {
        const auto& x = data_->entities[a];
        const auto& y = data_->entities[b];
        return std::tie(x.category, x.name) < std::tie(y.category, y.name);
    });
    return order;
}

std::vector<TripleIndex> GraphStore::ReadView::triples_sorted() const {
    std::vector<TripleIndex> order(data_->triples.size());
    for (TripleIndex i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](TripleIndex a, TripleIndex b) {
        const auto& x = data_->triples[a];
        const auto& y = data_->triples[b];
        return std::tie(x.relation, x.subject, x.object) < std::tie(y.relation, y.subject, y.object);
    });
    return order;
}

GraphStats GraphStore::ReadView::stats() const {
    GraphStats stats;
    for (auto c : kAllCategories) stats.entities[c] = 0;
    for (auto r : kAllRelations) {
        stats.triples[r] = 0;
        stats.mentions[r] = 0;
    }
    for (const auto& e : data_->entities) ++stats.entities[e.category];
    for (const auto& t : data_->triples) {
        ++stats.triples[t.relation];
        stats.mentions[t.relation] += t.provenance.size();
        stats.total_mentions += t.provenance.size();
    }
    stats.total_entities = data_->entities.size();
    stats.total_triples = data_->triples.size();
    stats.quarantined = data_->quarantine.size();
    return stats;
}

Subgraph GraphStore::ReadView::neighborhood(const EntityId& seed, std::size_t depth,
                                            const std::optional<RelationSet>& relation_filter,
                                            Direction direction) const {
    const auto start = find_entity(seed);
    if (!start) throw NotFoundError(fmt::format("unknown entity '{}'", seed.value));

    std::unordered_map<EntityIndex, std::size_t> distance{{*start, 0}};
    std::set<TripleIndex> triples;
    std::deque<EntityIndex> queue{*start};

    auto allowed = [&](TripleIndex t) {
        return !relation_filter || relation_filter->contains(data_->triples[t].relation);
    };
    auto visit = [&](EntityIndex next, std::size_t d) {
        if (distance.emplace(next, d + 1).second) queue.push_back(next);
    };

    while (!queue.empty()) {
        const auto current = queue.front();
        queue.pop_front();
        const auto d = distance[current];
        if (d >= depth) continue;
        if (direction != Direction::In) {
            for (auto t : data_->out[current]) {
                if (!allowed(t)) continue;
                triples.insert(t);
                visit(data_->endpoints[t].second, d);
            }
        }
        if (direction != Direction::Out) {
            for (auto t : data_->in[current]) {
                if (!allowed(t)) continue;
                triples.insert(t);
                visit(data_->endpoints[t].first, d);
            }
        }
    }

    Subgraph result;
    for (const auto& [index, d] : distance) result.entities.push_back(data_->entities[index]);
    std::sort(result.entities.begin(), result.entities.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    for (auto t : triples) result.triples.push_back(data_->triples[t]);
    std::sort(result.triples.begin(), result.triples.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return result;
}

void save_snapshot(const GraphStore& store, std::ostream& out) {
    const auto view = store.read();
    auto emit = [&](const json& record) { out << record.dump(-1, ' ', false) << '\n'; };

    emit(json{{"kind", "header"},
              {"format", "tcmkg-snapshot"},
              {"version", kSnapshotVersion},
              {"chunks", view.chunks().size()},
              {"entities", view.entity_count()},
              {"triples", view.triple_count()}});
    for (const auto& [id, c] : view.chunks()) {
        emit(json{{"kind", "chunk"}, {"id", id}, {"book", c.book_title}, {"chapter", c.chapter_title}, {"index", c.chunk_index}});
    }
    for (auto i : view.entities_sorted()) {
        const auto& e = view.entity(i);
        emit(json{{"kind", "entity"}, {"id", e.id.value}, {"category", to_string(e.category)}, {"name", e.name}});
    }
    for (auto i : view.triples_sorted()) {
        const auto& t = view.triple(i);
        emit(json{{"kind", "triple"},
                  {"subject", t.subject.value},
                  {"relation", surface(t.relation)},
                  {"object", t.object.value},
                  {"provenance", t.provenance}});
    }
}

namespace {

std::string field_string(const json& record, std::string_view field, std::size_t line) {
    auto it = record.find(field);
    if (it == record.end() || !it->is_string()) throw SnapshotError(line, fmt::format("field '{}' missing or not a string", field));
    return it->get<std::string>();
}

std::size_t field_count(const json& record, std::string_view field, std::size_t line) {
    auto it = record.find(field);
    if (it == record.end() || !it->is_number_unsigned())
        throw SnapshotError(line, fmt::format("field '{}' missing or not a non-negative integer", field));
    return it->get<std::size_t>();
}

} // namespace

GraphStore load_snapshot(std::istream& in) {
    GraphStore store;
    auto& data = *store.data_;

    std::string line;
    std::size_t line_no = 0;
    std::optional<std::array<std::size_t, 3>> expected;  // chunks, entities, triples
    std::array<std::size_t, 3> seen{0, 0, 0};

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw SnapshotError(line_no, fmt::format("malformed record: {}", e.what()));
        }
        if (!record.is_object()) throw SnapshotError(line_no, "record is not an object");
        const auto kind = field_string(record, "kind", line_no);

        if (!expected) {
            if (kind != "header") throw SnapshotError(line_no, "missing header record");
            if (field_string(record, "format", line_no) != "tcmkg-snapshot") throw SnapshotError(line_no, "unknown format");
            const auto version = field_count(record, "version", line_no);
            if (version != kSnapshotVersion) throw SnapshotError(line_no, fmt::format("unsupported version {}", version));
            expected = {field_count(record, "chunks", line_no), field_count(record, "entities", line_no),
                        field_count(record, "triples", line_no)};
            continue;
        }

        if (kind == "chunk") {
            if (seen[1] > 0 || seen[2] > 0) throw SnapshotError(line_no, "chunk record after entities");
            ChunkRef c{field_string(record, "id", line_no), field_string(record, "book", line_no),
                       field_string(record, "chapter", line_no), field_count(record, "index", line_no)};
            auto key = c.chunk_id;
            if (!data.chunks.emplace(std::move(key), std::move(c)).second) throw SnapshotError(line_no, "duplicate chunk");
            ++seen[0];
        } else if (kind == "entity") {
            if (seen[2] > 0) throw SnapshotError(line_no, "entity record after triples");
            const auto category = parse_category(field_string(record, "category", line_no));
            if (!category) throw SnapshotError(line_no, "unknown entity category");
            const auto name = field_string(record, "name", line_no);
            const auto id = field_string(record, "id", line_no);
            try {
                if (normalize_entity_name(name) != name) throw SnapshotError(line_no, "entity name is not canonical");
            } catch (const InvalidNameError& e) {
                throw SnapshotError(line_no, e.what());
            }
            if (make_entity_id(*category, name).value != id) throw SnapshotError(line_no, "entity id does not match category and name");
            if (data.entity_by_id.contains(id)) throw SnapshotError(line_no, fmt::format("duplicate entity '{}'", id));
            intern_entity(data, *category, name);
            ++seen[1];
        } else if (kind == "triple") {
            const auto relation = parse_relation(field_string(record, "relation", line_no));
            if (!relation) throw SnapshotError(line_no, "unknown relation");
            auto endpoint = [&](std::string_view field) {
                auto id = field_string(record, field, line_no);
                auto it = data.entity_by_id.find(id);
                if (it == data.entity_by_id.end()) throw SnapshotError(line_no, fmt::format("unknown {} '{}'", field, id));
                return it->second;
            };
            const auto subject = endpoint("subject");
            const auto object = endpoint("object");
            const auto sig = signature(*relation);
            if (!sig.domain.contains(data.entities[subject].category) || !sig.range.contains(data.entities[object].category))
                throw SnapshotError(line_no, "triple violates the relation's domain/range");
            auto prov = record.find("provenance");
            if (prov == record.end() || !prov->is_array() || prov->empty())
                throw SnapshotError(line_no, "provenance missing or empty");
            std::vector<std::string> provenance;
            for (const auto& p : *prov) {
                if (!p.is_string() || p.get<std::string>().empty()) throw SnapshotError(line_no, "provenance entries must be chunk ids");
                provenance.push_back(p.get<std::string>());
            }
            std::sort(provenance.begin(), provenance.end());
            auto id = make_triple_id(*relation, data.entities[subject].id, data.entities[object].id);
            if (data.triple_by_id.contains(id.value)) throw SnapshotError(line_no, "duplicate triple");
            add_triple(data, subject, *relation, object, std::move(id), std::move(provenance));
            ++seen[2];
        } else {
            throw SnapshotError(line_no, fmt::format("unknown record kind '{}'", kind));
        }
    }

    if (!expected) throw SnapshotError(0, "empty snapshot (no header)");
    if (seen != *expected) {
        throw SnapshotError(0, fmt::format("truncated or inconsistent snapshot: header declares {}/{}/{} "
                                           "chunks/entities/triples, found {}/{}/{}",
                                           (*expected)[0], (*expected)[1], (*expected)[2], seen[0], seen[1], seen[2]));
    }
    return store;
}

void save_snapshot_file(const GraphStore& store, const std::filesystem::path& path) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(fmt::format("cannot write snapshot '{}'", tmp.string()));
        save_snapshot(store, out);
        out.flush();
        if (!out) throw Error(fmt::format("failed writing snapshot '{}'", tmp.string()));
    }
    std::filesystem::rename(tmp, path);
}

GraphStore load_snapshot_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(fmt::format("cannot open snapshot '{}'", path.string()));
    return load_snapshot(in);
}

} // namespace tcmkg

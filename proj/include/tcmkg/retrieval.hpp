#pragma once

#include "tcmkg/graph.hpp"
#include "tcmkg/schema.hpp"

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tcmkg {

enum class MatchKind { Exact, Alias, Substring };

std::string_view to_string(MatchKind kind);

struct EntityMatch {
    EntityId entity_id;
    std::string matched_surface;
    MatchKind kind = MatchKind::Exact;
    /// In (0, 1]. Exact = 1.0 > alias > substring.
    double score = 0.0;
};

struct LinkOptions {
    std::size_t limit = 8;
    /// Shortest shared run (in characters) that counts as a substring match.
    std::size_t min_substring = 2;
    /// Surface form -> canonical entity name, e.g. "Danggui" -> "当归".
    std::map<std::string, std::string> aliases;
    /// Also link Book/Section/Chapter/Category nodes.
    bool include_structural = false;
};

inline constexpr double kAliasScore = 0.95;

/// Lexical entity linking. Entities whose canonical name occurs in the
/// normalised query are exact matches; names that merely share a run of at
/// least min_substring characters with the query are substring matches.
/// Sorted by score, then matched length (longest first), then id.
std::vector<EntityMatch> link_entities(const GraphStore::ReadView& graph, std::string_view query,
                                       const LinkOptions& options = {});

struct PathStep {
    RelationType relation;
    /// Out: seed side is the subject. In: seed side is the object.
    Direction direction;
    bool operator==(const PathStep&) const = default;
};

struct PathPattern {
    std::string name;
    std::vector<PathStep> steps;
};

/// Throws std::invalid_argument unless 1..4 steps, Out/In only, and each step
/// can start where the previous one ended under the domain/range table.
void validate_pattern(const PathPattern& pattern);

std::vector<PathPattern> default_patterns();

struct PathHop {
    TripleId triple_id;
    RelationType relation;
    Direction direction;
    EntityId from;
    EntityId to;
};

struct EvidencePath {
    EntityId seed;
    std::vector<PathHop> hops;
    double score = 0.0;
};

inline constexpr std::size_t kMaxHops = 4;

/// Every simple path rooted at a seed whose step sequence is a prefix of some
/// pattern, truncated at max_hops. Deduplicated and ordered by (seed, triple ids).
std::vector<EvidencePath> traverse(const GraphStore::ReadView& graph, std::span<const EntityId> seeds,
                                   std::size_t max_hops, std::span<const PathPattern> patterns);

struct ScoringOptions {
    double decay = 0.8;
    /// Missing relations weigh 1.0. Weights must lie in (0, 1].
    std::map<RelationType, double> relation_weights;
};

/// score = product over hops of weight(relation) * decay. Sorted by score
/// descending, ties broken by the triple-id sequence.
std::vector<EvidencePath> score_paths(std::vector<EvidencePath> paths, const ScoringOptions& options = {});

struct Citation {
    std::string chunk_id;
    std::string book;
    std::string chapter;
    std::size_t chunk_index = 0;
    bool operator==(const Citation&) const = default;
    auto operator<=>(const Citation&) const = default;
};

std::string format_citation(const Citation& citation);

struct ContextLine {
    TripleId triple_id;
    /// "subject [Relation] object (书: B, 章: C, 块: k)"
    std::string text;
    Citation citation;
    double score = 0.0;
};

struct ContextBundle {
    std::vector<ContextLine> lines;
    /// Characters in the serialised bundle (lines joined by '\n').
    std::size_t total_size = 0;
    std::size_t budget = 0;
    /// Set when even the best line does not fit.
    bool budget_too_small = false;
    /// Set when some candidate lines were left out.
    bool truncated = false;

    std::string serialize() const;
    bool empty() const { return lines.empty(); }
};

/// Greedy admission in score order, each triple once at its best score,
/// stopping at the first line that would exceed the budget.
ContextBundle assemble_context(const GraphStore::ReadView& graph, std::span<const EvidencePath> scored,
                               std::size_t budget);

struct RetrievalParams {
    LinkOptions link;
    std::size_t max_hops = kMaxHops;
    std::vector<PathPattern> patterns = default_patterns();
    ScoringOptions scoring;
    std::size_t context_budget = 2000;
};

struct RetrievalResult {
    std::vector<EntityMatch> matches;
    std::vector<EvidencePath> paths;
    ContextBundle bundle;
};

/// link -> traverse -> score -> assemble.
RetrievalResult retrieve(const GraphStore::ReadView& graph, std::string_view query, const RetrievalParams& params);

} // namespace tcmkg

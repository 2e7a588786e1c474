#include "tcmkg/retrieval.hpp"

#include "tcmkg/unicode.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace tcmkg {

std::string_view to_string(MatchKind kind) {
    switch (kind) {
        case MatchKind::Exact: return "exact";
        case MatchKind::Alias: return "alias";
        case MatchKind::Substring: return "substring";
    }
    return "?";
}

namespace {

bool is_hierarchy(EntityCategory c) {
    return c == EntityCategory::Book || c == EntityCategory::Section || c == EntityCategory::Chapter ||
           c == EntityCategory::Category;
}

// Longest common substring; returns (length, start offset in `a`).
std::pair<std::size_t, std::size_t> longest_common_run(std::u32string_view a, std::u32string_view b) {
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    std::size_t best = 0, best_end = 0;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
            if (cur[j] > best) {
                best = cur[j];
                best_end = i;
            }
        }
        std::swap(prev, cur);
    }
    return {best, best_end - best};
}

struct Candidate {
    EntityMatch match;
    std::size_t matched_length = 0;
};

bool better(const Candidate& a, const Candidate& b) {
    if (a.match.score != b.match.score) return a.match.score > b.match.score;
    if (a.matched_length != b.matched_length) return a.matched_length > b.matched_length;
    return a.match.entity_id < b.match.entity_id;
}

std::string normalized_query(std::string_view query) { return unicode::collapse_whitespace(unicode::nfc(query)); }

} // namespace

std::vector<EntityMatch> link_entities(const GraphStore::ReadView& graph, std::string_view query,
                                       const LinkOptions& options) {
    const auto q = normalized_query(query);
    if (q.empty() || options.limit == 0) return {};
    const auto q32 = unicode::to_u32(q);

    std::unordered_map<EntityIndex, Candidate> best;
    auto offer = [&](EntityIndex index, Candidate c) {
        auto [it, inserted] = best.try_emplace(index, c);
        if (!inserted && better(c, it->second)) it->second = std::move(c);
    };

    std::unordered_map<std::string, std::vector<EntityIndex>> by_name;
    for (EntityIndex i = 0; i < graph.entity_count(); ++i) {
        const auto& e = graph.entity(i);
        if (!options.include_structural && is_hierarchy(e.category)) continue;
        by_name[e.name].push_back(i);
        const auto name32 = unicode::to_u32(e.name);
        if (name32.empty()) continue;
        if (q32.find(name32) != std::u32string::npos) {
            offer(i, {{e.id, e.name, MatchKind::Exact, 1.0}, name32.size()});
            continue;
        }
        const auto [length, start] = longest_common_run(name32, q32);
        if (length >= std::max<std::size_t>(options.min_substring, 1)) {
            const double score = static_cast<double>(length) / static_cast<double>(name32.size());
            offer(i, {{e.id, unicode::to_utf8(std::u32string_view(name32).substr(start, length)), MatchKind::Substring, score},
                      length});
        }
    }

    const auto lowered = unicode::ascii_lower(q);
    for (const auto& [alias, canonical] : options.aliases) {
        const auto alias_key = unicode::ascii_lower(normalized_query(alias));
        if (alias_key.empty() || lowered.find(alias_key) == std::string::npos) continue;
        auto it = by_name.find(normalize_entity_name(canonical));
        if (it == by_name.end()) continue;
        for (auto index : it->second) {
            offer(index, {{graph.entity(index).id, alias, MatchKind::Alias, kAliasScore}, unicode::length(alias_key)});
        }
    }

    std::vector<Candidate> ranked;
    ranked.reserve(best.size());
    for (auto& [index, c] : best) ranked.push_back(std::move(c));
    std::sort(ranked.begin(), ranked.end(), better);
    if (ranked.size() > options.limit) ranked.resize(options.limit);

    std::vector<EntityMatch> out;
    out.reserve(ranked.size());
    for (auto& c : ranked) out.push_back(std::move(c.match));
    return out;
}

void validate_pattern(const PathPattern& pattern) {
    if (pattern.steps.empty() || pattern.steps.size() > kMaxHops)
        throw std::invalid_argument(fmt::format("pattern '{}' must have 1..{} steps", pattern.name, kMaxHops));
    std::optional<CategorySet> reached;
    for (const auto& step : pattern.steps) {
        if (step.direction == Direction::Both)
            throw std::invalid_argument(fmt::format("pattern '{}': steps must be 'out' or 'in'", pattern.name));
        const auto sig = signature(step.relation);
        const auto from = step.direction == Direction::Out ? sig.domain : sig.range;
        const auto to = step.direction == Direction::Out ? sig.range : sig.domain;
        if (reached && !reached->intersects(from)) {
            throw std::invalid_argument(fmt::format("pattern '{}': step {} ({}) cannot follow the previous step",
                                                    pattern.name, surface(step.relation), to_string(step.direction)));
        }
        reached = to;
    }
}

std::vector<PathPattern> default_patterns() {
    using R = RelationType;
    constexpr auto out = Direction::Out;
    constexpr auto in = Direction::In;
    return {
        {"symptom-treatment-ingredient", {{R::TreatmentSymptom, in}, {R::IngredientUse, out}}},
        {"disease-treatment-ingredient", {{R::TreatDisease, in}, {R::IngredientUse, out}}},
        {"ingredient-treatment-disease", {{R::IngredientUse, in}, {R::TreatDisease, out}}},
        {"disease-symptom", {{R::SymptomsPresent, out}}},
        {"treatment-chapter-book", {{R::TreatmentPlan, in}, {R::BelongToBook, out}}},
        {"disease-chapter-book", {{R::DescribeDisease, in}, {R::BelongToBook, out}}},
    };
}

std::vector<EvidencePath> traverse(const GraphStore::ReadView& graph, std::span<const EntityId> seeds,
                                   std::size_t max_hops, std::span<const PathPattern> patterns) {
    if (max_hops == 0 || max_hops > kMaxHops)
        throw std::invalid_argument(fmt::format("max_hops must be in 1..{}", kMaxHops));
    for (const auto& p : patterns) validate_pattern(p);

    std::map<std::pair<EntityId, std::vector<TripleId>>, EvidencePath> found;

    for (const auto& seed : seeds) {
        const auto start = graph.find_entity(seed);
        if (!start) throw NotFoundError(fmt::format("unknown seed entity '{}'", seed.value));

        for (const auto& pattern : patterns) {
            const std::size_t limit = std::min(max_hops, pattern.steps.size());
            std::vector<EntityIndex> on_path{*start};
            EvidencePath path{seed, {}, 0.0};

            auto extend = [&](auto&& self, EntityIndex current) -> void {
                const std::size_t depth = path.hops.size();
                if (depth >= limit) return;
                const auto& step = pattern.steps[depth];
                const bool forward = step.direction == Direction::Out;
                for (auto t : forward ? graph.outgoing(current) : graph.incoming(current)) {
                    const auto& triple = graph.triple(t);
                    if (triple.relation != step.relation) continue;
                    const auto next = forward ? graph.object_of(t) : graph.subject_of(t);
                    if (std::find(on_path.begin(), on_path.end(), next) != on_path.end()) continue;

                    path.hops.push_back(PathHop{triple.id, triple.relation, step.direction, graph.entity(current).id,
                                                graph.entity(next).id});
                    on_path.push_back(next);
                    std::vector<TripleId> key;
                    key.reserve(path.hops.size());
                    for (const auto& h : path.hops) key.push_back(h.triple_id);
                    found.try_emplace({seed, std::move(key)}, path);
                    self(self, next);
                    on_path.pop_back();
                    path.hops.pop_back();
                }
            };
            extend(extend, *start);
        }
    }

    std::vector<EvidencePath> out;
    out.reserve(found.size());
    for (auto& [key, path] : found) out.push_back(std::move(path));
    return out;
}

std::vector<EvidencePath> score_paths(std::vector<EvidencePath> paths, const ScoringOptions& options) {
    if (!(options.decay > 0.0 && options.decay <= 1.0)) throw std::invalid_argument("decay must lie in (0, 1]");
    for (const auto& [relation, weight] : options.relation_weights) {
        if (!(weight > 0.0 && weight <= 1.0))
            throw std::invalid_argument(fmt::format("weight of {} must lie in (0, 1]", surface(relation)));
    }
    for (auto& path : paths) {
        double score = 1.0;
        for (const auto& hop : path.hops) {
            auto it = options.relation_weights.find(hop.relation);
            const double weight = it == options.relation_weights.end() ? 1.0 : it->second;
            score *= weight * options.decay;
        }
        path.score = score;
    }
    std::sort(paths.begin(), paths.end(), [](const EvidencePath& a, const EvidencePath& b) {
        if (a.score != b.score) return a.score > b.score;
        const bool less = std::lexicographical_compare(
            a.hops.begin(), a.hops.end(), b.hops.begin(), b.hops.end(),
            [](const PathHop& x, const PathHop& y) { return x.triple_id < y.triple_id; });
        if (less) return true;
        const bool greater = std::lexicographical_compare(
            b.hops.begin(), b.hops.end(), a.hops.begin(), a.hops.end(),
            [](const PathHop& x, const PathHop& y) { return x.triple_id < y.triple_id; });
        if (greater) return false;
        return a.seed < b.seed;
    });
    return paths;
}

std::string format_citation(const Citation& citation) {
    return fmt::format("(书: {}, 章: {}, 块: {})", citation.book, citation.chapter, citation.chunk_index);
}

std::string ContextBundle::serialize() const {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i > 0) out += '\n';
        out += lines[i].text;
    }
    return out;
}

ContextBundle assemble_context(const GraphStore::ReadView& graph, std::span<const EvidencePath> scored,
                               std::size_t budget) {
    if (budget == 0) throw std::invalid_argument("context budget must be positive");

    std::map<TripleId, double> best;
    for (const auto& path : scored) {
        for (const auto& hop : path.hops) {
            auto [it, inserted] = best.try_emplace(hop.triple_id, path.score);
            if (!inserted) it->second = std::max(it->second, path.score);
        }
    }
    std::vector<std::pair<TripleId, double>> ranked(best.begin(), best.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

    ContextBundle bundle;
    bundle.budget = budget;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const auto& [id, score] = ranked[i];
        const auto index = graph.find_triple(id);
        if (!index) throw NotFoundError(fmt::format("unknown triple '{}'", id.value));
        const auto& triple = graph.triple(*index);
        const auto& subject = graph.entity(graph.subject_of(*index));
        const auto& object = graph.entity(graph.object_of(*index));

        Citation citation;
        citation.chunk_id = triple.provenance.front();
        if (const auto* ref = graph.chunk(citation.chunk_id)) {
            citation.book = ref->book_title;
            citation.chapter = ref->chapter_title;
            citation.chunk_index = ref->chunk_index;
        } else {
            citation.book = "?";
            citation.chapter = citation.chunk_id;
        }
        auto text = fmt::format("{} [{}] {} {}", subject.name, surface(triple.relation), object.name,
                                format_citation(citation));
        const std::size_t length = unicode::length(text);
        const std::size_t next_size = bundle.total_size + (bundle.lines.empty() ? 0 : 1) + length;
        if (next_size > budget) {
            bundle.truncated = true;
            bundle.budget_too_small = bundle.lines.empty();
            break;
        }
        bundle.total_size = next_size;
        bundle.lines.push_back(ContextLine{id, std::move(text), std::move(citation), score});
    }
    return bundle;
}

RetrievalResult retrieve(const GraphStore::ReadView& graph, std::string_view query, const RetrievalParams& params) {
    RetrievalResult result;
    result.matches = link_entities(graph, query, params.link);
    std::vector<EntityId> seeds;
    seeds.reserve(result.matches.size());
    for (const auto& m : result.matches) seeds.push_back(m.entity_id);
    result.paths = score_paths(traverse(graph, seeds, params.max_hops, params.patterns), params.scoring);
    result.bundle = assemble_context(graph, result.paths, params.context_budget);
    return result;
}

} // namespace tcmkg

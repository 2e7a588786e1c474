#include "tcmkg/api.hpp"

#include "tcmkg/error.hpp"
#include "tcmkg/evalkit.hpp"
#include "tcmkg/unicode.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <stdexcept>

namespace tcmkg::api {

using nlohmann::json;

json to_json(const GraphStats& stats) {
    json entities = json::object();
    for (auto c : kAllCategories) {
        auto it = stats.entities.find(c);
        entities[std::string(to_string(c))] = it == stats.entities.end() ? 0 : it->second;
    }
    json triples = json::object();
    json mentions = json::object();
    for (auto r : kAllRelations) {
        auto t = stats.triples.find(r);
        auto m = stats.mentions.find(r);
        triples[std::string(surface(r))] = t == stats.triples.end() ? 0 : t->second;
        mentions[std::string(surface(r))] = m == stats.mentions.end() ? 0 : m->second;
    }
    return json{{"entities", std::move(entities)},   {"triples", std::move(triples)},
                {"mentions", std::move(mentions)},   {"total_entities", stats.total_entities},
                {"total_triples", stats.total_triples}, {"total_mentions", stats.total_mentions},
                {"quarantined", stats.quarantined}};
}

json to_json(const Subgraph& subgraph) {
    json entities = json::array();
    for (const auto& e : subgraph.entities)
        entities.push_back(json{{"id", e.id.value}, {"name", e.name}, {"category", to_string(e.category)}});
    json triples = json::array();
    for (const auto& t : subgraph.triples) {
        triples.push_back(json{{"id", t.id.value},
                               {"subject", t.subject.value},
                               {"relation", surface(t.relation)},
                               {"object", t.object.value},
                               {"provenance", t.provenance}});
    }
    return json{{"entities", std::move(entities)}, {"triples", std::move(triples)}};
}

json health(const GraphStore& store) {
    return json{{"status", "ok"}, {"stats", to_json(store.stats())}};
}

json graph_stats(const GraphStore& store) { return to_json(store.stats()); }

namespace {

EntityId resolve_entity(const GraphStore::ReadView& view, std::string_view entity) {
    const auto trimmed = unicode::collapse_whitespace(entity);
    if (trimmed.empty()) throw std::invalid_argument("entity must not be empty");
    if (auto colon = trimmed.find(':'); colon != std::string::npos && parse_category(trimmed.substr(0, colon))) {
        const auto category = *parse_category(trimmed.substr(0, colon));
        return make_entity_id(category, normalize_entity_name(trimmed.substr(colon + 1)));
    }
    const auto name = normalize_entity_name(trimmed);
    std::vector<EntityId> hits;
    for (auto c : kAllCategories) {
        auto id = make_entity_id(c, name);
        if (view.find_entity(id)) hits.push_back(std::move(id));
    }
    if (hits.empty()) throw NotFoundError(fmt::format("unknown entity '{}'", name));
    if (hits.size() > 1)
        throw std::invalid_argument(
            fmt::format("'{}' names {} entities; use a qualified id such as '{}'", name, hits.size(), hits.front().value));
    return hits.front();
}

} // namespace

json neighborhood(const GraphStore& store, std::string_view entity, std::size_t depth,
                  std::optional<std::string_view> relations, std::optional<std::string_view> direction) {
    if (depth > kMaxNeighborhoodDepth)
        throw std::invalid_argument(fmt::format("depth must be at most {}", kMaxNeighborhoodDepth));
    std::optional<RelationSet> filter;
    if (relations && !relations->empty()) {
        RelationSet set;
        std::string_view rest = *relations;
        while (!rest.empty()) {
            const auto comma = rest.find(',');
            const auto item = rest.substr(0, comma);
            rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
            if (unicode::collapse_whitespace(item).empty()) continue;
            const auto r = parse_relation(item);
            if (!r) throw std::invalid_argument(fmt::format("unknown relation '{}'", item));
            set.insert(*r);
        }
        filter = set;
    }
    Direction dir = Direction::Both;
    if (direction && !direction->empty()) {
        const auto d = parse_direction(*direction);
        if (!d) throw std::invalid_argument(fmt::format("direction must be out, in or both, not '{}'", *direction));
        dir = *d;
    }
    const auto view = store.read();
    const auto seed = resolve_entity(view, entity);
    json out = to_json(view.neighborhood(seed, depth, filter, dir));
    out["seed"] = seed.value;
    out["depth"] = depth;
    return out;
}

AnswerOptions answer_options(const Config& config) {
    AnswerOptions o;
    o.retrieval = config.retrieval;
    o.decoding = config.llm.decoding;
    o.call_model_without_evidence = config.call_model_without_evidence;
    return o;
}

json qa(const GraphStore& store, LlmClient& client, const Config& config, std::string_view question,
        AnswerMode mode) {
    return tcmkg::to_json(answer_question(question, store, client, mode, answer_options(config)));
}

json search_ingredient(const GraphStore& store, LlmClient& client, const Config& config, std::string_view query) {
    return qa(store, client, config, query, AnswerMode::IngredientLookup);
}

json eval_extraction(const json& request) {
    if (!request.is_object() || !request.contains("predicted") || !request.contains("gold"))
        throw std::invalid_argument("expected {\"predicted\": [...], \"gold\": [...]}");
    const auto predicted = eval::parse_triples(request.at("predicted"), "predicted");
    const auto gold = eval::parse_triples(request.at("gold"), "gold");
    const auto m = eval::extraction_metrics(predicted, gold);
    json out = eval::to_json(m);
    out["summary"] = eval::metrics_line(m);
    return out;
}

json eval_ratings(const json& request) {
    if (!request.is_object() || !request.contains("ratings"))
        throw std::invalid_argument("expected {\"ratings\": [...]}");
    int threshold = eval::kCorrectThreshold;
    if (request.contains("threshold")) {
        const auto& t = request.at("threshold");
        if (!t.is_number_integer() || t.get<int>() < 1 || t.get<int>() > 5)
            throw std::invalid_argument("threshold must be an integer in 1..5");
        threshold = t.get<int>();
    }
    const auto matrix = eval::RatingMatrix::from_json(request.at("ratings"), "ratings");
    auto out = eval::to_json(eval::summarize_ratings(matrix, threshold));
    out["threshold"] = threshold;
    return out;
}

} // namespace tcmkg::api

#include "oracles.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <functional>
#include <map>

namespace tcmkg::testing {

using nlohmann::json;

namespace {

bool blank(const std::string& s) {
    std::string rest = s;
    for (const std::string ws : {" ", "\t", "\n", "\r", "　"}) {
        for (auto pos = rest.find(ws); pos != std::string::npos; pos = rest.find(ws)) rest.erase(pos, ws.size());
    }
    return rest.empty();
}

// Spellings the fuzzer produces for the six content relations.
bool content_predicate(const std::string& p) {
    std::string key;
    for (char c : p) {
        if (c == ' ' || c == '_' || c == '-' || c == '\t') continue;
        key += static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
    }
    static const std::set<std::string> known = {
        "treatmentplan", "treatdisease",   "describedisease", "treatmentsymptom", "symptomspresent",
        "ingredientuse", "useingredient",  "treatsdisease",   "治疗疾病",         "药物组成",
    };
    return known.contains(key);
}

} // namespace

std::size_t reference_accepted_count(std::string_view response) {
    std::optional<json> array;
    for (std::size_t i = 0; i < response.size() && !array; ++i) {
        if (response[i] != '[') continue;
        for (std::size_t j = i; j < response.size(); ++j) {
            if (response[j] != ']') continue;
            auto parsed = json::parse(response.substr(i, j - i + 1), nullptr, false);
            if (!parsed.is_discarded()) {
                if (parsed.is_array()) array = std::move(parsed);
                break;
            }
        }
    }
    if (!array) return 0;
    std::size_t accepted = 0;
    for (const auto& e : *array) {
        if (!e.is_object()) continue;
        bool ok = true;
        for (const char* f : {"subject", "predicate", "object"}) {
            ok = ok && e.contains(f) && e[f].is_string() && !blank(e[f].get<std::string>());
        }
        if (ok && content_predicate(e["predicate"].get<std::string>())) ++accepted;
    }
    return accepted;
}

namespace {

template <typename T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& items) {
    return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)];
}

json fuzz_element(std::mt19937_64& rng) {
    static const std::vector<std::string> names = {"四物汤", "当归", "月经不调", "经行腹痛", "x]y", "a\"b[", "川芎 ", "人参"};
    static const std::vector<std::string> good = {"Treat Disease", "Ingredient Use", "ingredient_use", "TREATMENT PLAN",
                                                  "Symptoms-Present", "Use Ingredient", "Treats Disease", "药物组成",
                                                  "Describe Disease", "treatmentsymptom", "治疗疾病"};
    static const std::vector<std::string> bad = {"Cures", "Prevents", "Harmonizes", "Treat", "", "Belong to Book",
                                                 "Include Chapter", "所属类别", "Ingredient  Used"};
    static const std::vector<std::string> blanks = {"", " ", "　", "\t \n"};
    json e{{"subject", pick(rng, names)}, {"predicate", pick(rng, good)}, {"object", pick(rng, names)}};
    switch (std::uniform_int_distribution<int>(0, 11)(rng)) {
    case 0: e["predicate"] = pick(rng, bad); break;
    case 1: e.erase(pick(rng, std::vector<std::string>{"subject", "predicate", "object"})); break;
    case 2: e[pick(rng, std::vector<std::string>{"subject", "object"})] = pick(rng, blanks); break;
    case 3: e["object"] = 42; break;
    case 4: return pick(rng, std::vector<json>{json(7), json("四物汤"), json::array({"a", "b", "c"}), json(nullptr)});
    case 5: e["confidence"] = 0.9; break;
    case 6: e["subject"] = json::array({"当归"}); break;
    default: break;
    }
    return e;
}

} // namespace

std::string fuzz_response(std::mt19937_64& rng) {
    json array = json::array();
    const int n = std::uniform_int_distribution<int>(0, 8)(rng);
    for (int i = 0; i < n; ++i) array.push_back(fuzz_element(rng));
    std::string body = array.dump(std::bernoulli_distribution(0.5)(rng) ? 2 : -1, ' ', false);

    auto insert_at_random = [&](std::string& s, const std::string& what) {
        const auto pos = std::uniform_int_distribution<std::size_t>(0, s.size())(rng);
        s.insert(pos, what);
    };
    const int corruptions = std::uniform_int_distribution<int>(0, 3)(rng);
    for (int c = 0; c < corruptions; ++c) {
        switch (std::uniform_int_distribution<int>(0, 9)(rng)) {
        case 0: body = body.substr(0, std::uniform_int_distribution<std::size_t>(0, body.size())(rng)); break;
        case 1: body = "Here are the triples:\n" + body + "\nDone."; break;
        case 2: body = "```json\n" + body + "\n```"; break;
        case 3: body = "[see note] " + body; break;
        case 4: body = "[[" + body; break;
        case 5: insert_at_random(body, pick(rng, std::vector<std::string>{"[", "]", "\"", ",", "}", "{"})); break;
        case 6: body += " and also [{\"subject\": \"白芍\", \"predicate\": \"Ingredient Use\", \"object\": \"x\"}]"; break;
        case 7: body = "no triples found"; break;
        case 8: body = "[1, 2] " + body; break;
        case 9: body = "prefix \"quoted [ text\" " + body; break;
        }
    }
    return body;
}

NeighborhoodAnswer reference_neighborhood(const GraphStore& store, const EntityId& seed, std::size_t depth,
                                          const std::optional<RelationSet>& filter, Direction direction) {
    const auto view = store.read();
    NeighborhoodAnswer answer;
    if (!view.find_entity(seed)) return answer;
    std::set<std::string> frontier_all{seed.value};
    // reached[k] = entities within k steps
    std::vector<std::set<std::string>> reached{frontier_all};
    for (std::size_t k = 0; k < depth; ++k) {
        auto next = reached.back();
        for (TripleIndex t = 0; t < view.triple_count(); ++t) {
            const auto& tr = view.triple(t);
            if (filter && !filter->contains(tr.relation)) continue;
            if (direction != Direction::In && reached.back().contains(tr.subject.value)) next.insert(tr.object.value);
            if (direction != Direction::Out && reached.back().contains(tr.object.value)) next.insert(tr.subject.value);
        }
        reached.push_back(std::move(next));
    }
    answer.entities = reached.back();
    if (depth > 0) {
        const auto& inner = reached[depth - 1];
        for (TripleIndex t = 0; t < view.triple_count(); ++t) {
            const auto& tr = view.triple(t);
            if (filter && !filter->contains(tr.relation)) continue;
            const bool out = direction != Direction::In && inner.contains(tr.subject.value);
            const bool in = direction != Direction::Out && inner.contains(tr.object.value);
            if (out || in) answer.triples.insert(tr.id.value);
        }
    }
    return answer;
}

NeighborhoodAnswer as_answer(const Subgraph& subgraph) {
    NeighborhoodAnswer a;
    for (const auto& e : subgraph.entities) a.entities.insert(e.id.value);
    for (const auto& t : subgraph.triples) a.triples.insert(t.id.value);
    return a;
}

std::set<PathKey> reference_paths(const GraphStore& store, const EntityId& seed, std::size_t max_hops,
                                  std::span<const PathPattern> patterns) {
    const auto view = store.read();
    std::set<PathKey> out;
    if (!view.find_entity(seed)) return out;

    auto prefixes_some_pattern = [&](const std::vector<PathStep>& steps) {
        return std::any_of(patterns.begin(), patterns.end(), [&](const PathPattern& p) {
            return steps.size() <= p.steps.size() && std::equal(steps.begin(), steps.end(), p.steps.begin());
        });
    };

    std::vector<std::pair<std::string, Direction>> hops;
    std::vector<PathStep> steps;
    std::vector<std::string> visited{seed.value};
    std::function<void(const std::string&)> walk = [&](const std::string& at) {
        if (!hops.empty() && prefixes_some_pattern(steps)) out.emplace(seed.value, hops);
        if (hops.size() == max_hops) return;
        for (TripleIndex t = 0; t < view.triple_count(); ++t) {
            const auto& tr = view.triple(t);
            for (auto dir : {Direction::Out, Direction::In}) {
                const auto& from = dir == Direction::Out ? tr.subject.value : tr.object.value;
                const auto& to = dir == Direction::Out ? tr.object.value : tr.subject.value;
                if (from != at) continue;
                if (std::find(visited.begin(), visited.end(), to) != visited.end()) continue;
                hops.emplace_back(tr.id.value, dir);
                steps.push_back(PathStep{tr.relation, dir});
                visited.push_back(to);
                walk(to);
                visited.pop_back();
                steps.pop_back();
                hops.pop_back();
            }
        }
    };
    walk(seed.value);
    return out;
}

std::set<PathKey> path_keys(std::span<const EvidencePath> paths) {
    std::set<PathKey> out;
    for (const auto& p : paths) {
        std::vector<std::pair<std::string, Direction>> hops;
        for (const auto& h : p.hops) hops.emplace_back(h.triple_id.value, h.direction);
        out.emplace(p.seed.value, std::move(hops));
    }
    return out;
}

GraphStore random_graph(std::mt19937_64& rng, std::size_t max_entities, std::size_t max_edges) {
    std::uniform_int_distribution<std::size_t> entity_count(2, max_entities);
    const auto n = entity_count(rng);
    std::vector<std::pair<EntityCategory, std::string>> pool;
    std::uniform_int_distribution<std::size_t> pick_category(0, kAllCategories.size() - 1);
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(kAllCategories[pick_category(rng)], "n" + std::to_string(i));

    GraphStore store;
    std::uniform_int_distribution<std::size_t> edge_count(1, max_edges);
    std::uniform_int_distribution<std::size_t> pick_relation(0, kAllRelations.size() - 1);
    const auto edges = edge_count(rng);
    std::size_t attempts = 0;
    for (std::size_t added = 0; added < edges && attempts < edges * 20; ++attempts) {
        const auto relation = kAllRelations[pick_relation(rng)];
        const auto sig = signature(relation);
        std::vector<std::size_t> subjects, objects;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (sig.domain.contains(pool[i].first)) subjects.push_back(i);
            if (sig.range.contains(pool[i].first)) objects.push_back(i);
        }
        if (subjects.empty() || objects.empty()) continue;
        const auto& s = pool[subjects[std::uniform_int_distribution<std::size_t>(0, subjects.size() - 1)(rng)]];
        const auto& o = pool[objects[std::uniform_int_distribution<std::size_t>(0, objects.size() - 1)(rng)]];
        store.upsert_triple(TripleInput{s.second, relation, o.second, s.first, o.first},
                            "c/" + std::to_string(added % 7));
        ++added;
    }
    return store;
}

PathPattern random_pattern(std::mt19937_64& rng, std::size_t max_steps) {
    std::uniform_int_distribution<std::size_t> length(1, max_steps);
    std::uniform_int_distribution<std::size_t> pick_relation(0, kAllRelations.size() - 1);
    std::bernoulli_distribution out(0.5);
    for (;;) {
        PathPattern p{"random", {}};
        const auto n = length(rng);
        CategorySet at = CategorySet::any();
        for (std::size_t tries = 0; p.steps.size() < n && tries < 200; ++tries) {
            const auto r = kAllRelations[pick_relation(rng)];
            const auto dir = out(rng) ? Direction::Out : Direction::In;
            const auto sig = signature(r);
            const auto start = dir == Direction::Out ? sig.domain : sig.range;
            if (!start.intersects(at)) continue;
            p.steps.push_back({r, dir});
            at = dir == Direction::Out ? sig.range : sig.domain;
        }
        try {
            validate_pattern(p);
            return p;
        } catch (const std::invalid_argument&) {
        }
    }
}

} // namespace tcmkg::testing

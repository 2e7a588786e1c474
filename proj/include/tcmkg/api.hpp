#pragma once

#include "tcmkg/config.hpp"
#include "tcmkg/generation.hpp"
#include "tcmkg/graph.hpp"
#include "tcmkg/llm_client.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>
#include <string_view>

// Request handlers shared by the CLI and the HTTP service, so that both
// produce the same JSON for the same input. Bad input throws InputError or
// std::invalid_argument; unknown entities throw NotFoundError.
namespace tcmkg::api {

nlohmann::json to_json(const GraphStats& stats);
nlohmann::json to_json(const Subgraph& subgraph);

nlohmann::json health(const GraphStore& store);
nlohmann::json graph_stats(const GraphStore& store);

/// `entity` is an entity id ("Treatment:四物汤"); a bare name is accepted when
/// exactly one entity carries it. `relations` is comma-separated.
nlohmann::json neighborhood(const GraphStore& store, std::string_view entity, std::size_t depth,
                            std::optional<std::string_view> relations = std::nullopt,
                            std::optional<std::string_view> direction = std::nullopt);

inline constexpr std::size_t kMaxNeighborhoodDepth = 4;

AnswerOptions answer_options(const Config& config);

nlohmann::json qa(const GraphStore& store, LlmClient& client, const Config& config, std::string_view question,
                  AnswerMode mode);
nlohmann::json search_ingredient(const GraphStore& store, LlmClient& client, const Config& config,
                                 std::string_view query);

/// {"predicted": [...], "gold": [...]} -> metrics plus the one-line summary.
nlohmann::json eval_extraction(const nlohmann::json& request);
/// {"ratings": [{"item", "rater", "score"}...], "threshold": 3}
nlohmann::json eval_ratings(const nlohmann::json& request);

} // namespace tcmkg::api

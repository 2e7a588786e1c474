#pragma once

#include "tcmkg/error.hpp"
#include "tcmkg/graph.hpp"
#include "tcmkg/llm_client.hpp"
#include "tcmkg/retrieval.hpp"

#include <nlohmann/json_fwd.hpp>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tcmkg {

enum class AnswerMode { IngredientLookup, DiagnosticQa };

std::string_view to_string(AnswerMode mode);
std::optional<AnswerMode> parse_answer_mode(std::string_view text);

/// Prefixed to every degraded answer.
inline constexpr std::string_view kNoEvidenceDisclaimer =
    "[No supporting evidence was found in the knowledge graph; the following is not grounded in the classical sources.]";
/// Appended to every answer.
inline constexpr std::string_view kInformationalNotice =
    "For reference only; not a substitute for consultation with a qualified practitioner.";

struct Answer {
    std::string question;
    AnswerMode mode = AnswerMode::DiagnosticQa;
    std::string text;
    /// Distinct citations of context_used, in bundle order.
    std::vector<Citation> citations;
    ContextBundle context_used;
    std::vector<EntityMatch> matches;
    bool degraded = false;
};

PromptText build_answer_prompt(std::string_view question, const ContextBundle& context, AnswerMode mode);

struct AnswerOptions {
    RetrievalParams retrieval;
    DecodingParams decoding;
    /// With no evidence, still ask the model (under the disclaimer) instead of
    /// returning the disclaimer alone.
    bool call_model_without_evidence = false;
};

/// The client failed after its retries; the evidence is still usable.
class GenerationError : public Error {
public:
    GenerationError(const std::string& what, ContextBundle bundle, std::vector<EntityMatch> matches)
        : Error(what), bundle_(std::move(bundle)), matches_(std::move(matches)) {}
    const ContextBundle& bundle() const noexcept { return bundle_; }
    const std::vector<EntityMatch>& matches() const noexcept { return matches_; }

private:
    ContextBundle bundle_;
    std::vector<EntityMatch> matches_;
};

Answer answer_question(std::string_view question, const GraphStore& store, LlmClient& client, AnswerMode mode,
                       const AnswerOptions& options = {});

std::vector<Citation> citations_of(const ContextBundle& bundle);

// Shared by the CLI and the HTTP service so both emit identical payloads.
nlohmann::json to_json(const Answer& answer);
nlohmann::json to_json(const ContextBundle& bundle);
nlohmann::json to_json(const EntityMatch& match);

} // namespace tcmkg

#include "tcmkg/generation.hpp"

#include "tcmkg/unicode.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <set>

namespace tcmkg {

using nlohmann::json;

std::string_view to_string(AnswerMode mode) {
    return mode == AnswerMode::IngredientLookup ? "ingredient_lookup" : "diagnostic_qa";
}

std::optional<AnswerMode> parse_answer_mode(std::string_view text) {
    if (text == "ingredient_lookup") return AnswerMode::IngredientLookup;
    if (text == "diagnostic_qa") return AnswerMode::DiagnosticQa;
    return std::nullopt;
}

PromptText build_answer_prompt(std::string_view question, const ContextBundle& context, AnswerMode mode) {
    std::string text;
    text += "## Role\n";
    text += "You are a TCM knowledge analysis assistant answering questions from practitioners.\n\n";

    text += "## Task\n";
    if (mode == AnswerMode::IngredientLookup) {
        text += "Give a concise monograph of the ingredient(s) asked about: the formulas that use them, the "
                "conditions and symptoms those formulas treat, and the books that record them.\n\n";
    } else {
        text += "Answer the diagnostic question: name the conditions and symptoms involved, the treatments the "
                "sources indicate for them, and the ingredients of those treatments.\n\n";
    }

    text += "## Evidence\n";
    if (context.empty()) {
        text += "No evidence was retrieved from the knowledge graph for this question. Say plainly that the "
                "knowledge graph holds no supporting evidence, cite no sources, and do not present any claim as "
                "coming from the classical texts.\n";
    } else {
        text += "Answer only from the evidence lines below, retrieved from a knowledge graph of classical texts. "
                "After each statement cite its source exactly as written at the end of the supporting line. If "
                "the evidence does not answer the question, say so.\n";
    }
    text += "<evidence>\n";
    for (const auto& line : context.lines) {
        text += line.text;
        text += '\n';
    }
    text += "</evidence>\n\n";

    text += "## Question\n";
    text += question;
    text += '\n';

    auto fp = unicode::fingerprint(fmt::format("{}\n{}\n{}", to_string(mode), question, context.serialize()));
    return PromptText{PromptKind::Answer, std::move(text), std::move(fp)};
}

std::vector<Citation> citations_of(const ContextBundle& bundle) {
    std::vector<Citation> out;
    std::set<std::string> seen;
    for (const auto& line : bundle.lines) {
        if (seen.insert(line.citation.chunk_id).second) out.push_back(line.citation);
    }
    return out;
}

Answer answer_question(std::string_view question, const GraphStore& store, LlmClient& client, AnswerMode mode,
                       const AnswerOptions& options) {
    if (unicode::collapse_whitespace(question).empty()) throw std::invalid_argument("question must not be empty");

    RetrievalResult retrieved;
    {
        const auto view = store.read();
        retrieved = retrieve(view, question, options.retrieval);
    }

    Answer answer;
    answer.question = std::string(question);
    answer.mode = mode;
    answer.matches = std::move(retrieved.matches);
    answer.context_used = std::move(retrieved.bundle);
    answer.citations = citations_of(answer.context_used);
    answer.degraded = answer.context_used.empty();

    std::string body;
    if (!answer.degraded || options.call_model_without_evidence) {
        const auto prompt = build_answer_prompt(question, answer.context_used, mode);
        try {
            body = client.complete(prompt, options.decoding);
        } catch (const TransportError& e) {
            throw GenerationError(fmt::format("answer generation failed: {}", e.what()), answer.context_used,
                                  answer.matches);
        }
    }

    if (answer.degraded) {
        answer.text = std::string(kNoEvidenceDisclaimer);
        if (!body.empty()) answer.text += "\n" + body;
    } else {
        answer.text = std::move(body);
    }
    answer.text += "\n\n";
    answer.text += kInformationalNotice;
    return answer;
}

namespace {
json citation_json(const Citation& c) {
    return json{{"chunk_id", c.chunk_id}, {"book", c.book}, {"chapter", c.chapter}, {"chunk_index", c.chunk_index}};
}
} // namespace

json to_json(const EntityMatch& match) {
    return json{{"entity_id", match.entity_id.value},
                {"matched_surface", match.matched_surface},
                {"match_kind", to_string(match.kind)},
                {"score", match.score}};
}

json to_json(const ContextBundle& bundle) {
    json lines = json::array();
    for (const auto& l : bundle.lines) {
        lines.push_back(json{{"triple_id", l.triple_id.value},
                             {"text", l.text},
                             {"score", l.score},
                             {"citation", citation_json(l.citation)}});
    }
    return json{{"lines", std::move(lines)},
                {"total_size", bundle.total_size},
                {"budget", bundle.budget},
                {"budget_too_small", bundle.budget_too_small},
                {"truncated", bundle.truncated}};
}

json to_json(const Answer& answer) {
    json citations = json::array();
    for (const auto& c : answer.citations) citations.push_back(citation_json(c));
    json matches = json::array();
    for (const auto& m : answer.matches) matches.push_back(to_json(m));
    return json{{"question", answer.question},
                {"mode", to_string(answer.mode)},
                {"text", answer.text},
                {"degraded", answer.degraded},
                {"citations", std::move(citations)},
                {"matches", std::move(matches)},
                {"context", to_json(answer.context_used)}};
}

} // namespace tcmkg

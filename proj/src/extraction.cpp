#include "tcmkg/extraction.hpp"

#include "tcmkg/unicode.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <numeric>
#include <thread>

namespace tcmkg {

using nlohmann::json;

std::string_view to_string(SkipReason reason) {
    switch (reason) {
        case SkipReason::NotAnObject: return "not an object";
        case SkipReason::MissingField: return "missing field";
        case SkipReason::EmptyField: return "empty field";
        case SkipReason::UnknownPredicate: return "unknown predicate";
        case SkipReason::RelationNotInSchema: return "relation not in schema";
    }
    return "?";
}

std::vector<RelationType> default_extraction_schema() {
    return {kContentRelations.begin(), kContentRelations.end()};
}

namespace {

constexpr std::string_view kExamplePassage =
    "四物汤，治妇人经水不调，脐腹疞痛。当归、川芎、白芍药、熟地黄各等分，上为粗末，水煎服。";

json example_triples() {
    auto t = [](std::string_view s, RelationType r, std::string_view o) {
        return json{{"subject", s}, {"predicate", surface(r)}, {"object", o}};
    };
    return json::array({
        t("四物汤", RelationType::TreatDisease, "经水不调"),
        t("四物汤", RelationType::TreatmentSymptom, "脐腹疞痛"),
        t("四物汤", RelationType::IngredientUse, "当归"),
        t("四物汤", RelationType::IngredientUse, "川芎"),
        t("四物汤", RelationType::IngredientUse, "白芍药"),
        t("四物汤", RelationType::IngredientUse, "熟地黄"),
    });
}

std::string_view signature_text(RelationType r) {
    switch (r) {
        case RelationType::BelongToCategory: return "any entity -> Category";
        case RelationType::IncludeSection: return "Book -> Section";
        case RelationType::IncludeChapter: return "Book or Section -> Chapter";
        case RelationType::BelongToBook: return "Chapter -> Book";
        case RelationType::TreatmentPlan: return "Chapter -> Treatment (formula or therapy)";
        case RelationType::TreatDisease: return "Treatment -> Disease";
        case RelationType::DescribeDisease: return "Chapter -> Disease";
        case RelationType::TreatmentSymptom: return "Treatment -> Symptom";
        case RelationType::SymptomsPresent: return "Disease -> Symptom";
        case RelationType::IngredientUse: return "Treatment -> Ingredient";
    }
    return "";
}

std::string trimmed(const std::string& s) {
    try {
        return unicode::collapse_whitespace(s);
    } catch (const Error&) {
        return s;
    }
}

} // namespace

PromptText build_extraction_prompt(const Chunk& chunk, std::span<const RelationType> schema) {
    std::string text;
    text.reserve(chunk.text.size() + 3000);

    text += "## Role\n";
    text += "You are a TCM knowledge analysis assistant. You read classical Chinese medical texts and "
            "produce professional, structured and accurate knowledge-graph triples.\n\n";

    text += "## Context\n";
    text += fmt::format("Book: {}\n", chunk.book_title);
    if (!chunk.section_implicit) text += fmt::format("Section: {}\n", chunk.section_title);
    text += fmt::format("Chapter: {}\n", chunk.chapter_title);
    text += fmt::format("Chunk index: {}\n", chunk.chunk_index);
    text += "Passage:\n<<<\n";
    text += chunk.text;
    text += "\n>>>\n\n";

    text += "## Task\n";
    text += "The knowledge graph uses exactly these 10 relation types (subject -> object):\n";
    for (auto r : kAllRelations) text += fmt::format("- {} ({})\n", surface(r), signature_text(r));
    text += "Extract from the passage only triples whose predicate is one of: ";
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (i > 0) text += ", ";
        text += surface(schema[i]);
    }
    text += ".\n";
    std::vector<RelationType> omitted;
    for (auto r : kAllRelations) {
        if (std::find(schema.begin(), schema.end(), r) == schema.end()) omitted.push_back(r);
    }
    if (!omitted.empty()) {
        text += "Do not emit ";
        for (std::size_t i = 0; i < omitted.size(); ++i) {
            if (i > 0) text += ", ";
            text += surface(omitted[i]);
        }
        text += "; these are derived from the book metadata.\n";
    }
    text += "For relations whose subject is a Chapter, use the chapter name given above as the subject. "
            "Use entity names exactly as written in the passage. Return the result as a list of "
            "(subject, predicate, object) triples.\n\n";

    text += "## Output format\n";
    text += "Respond with a JSON array of objects, each containing exactly the string fields \"subject\", "
            "\"predicate\" and \"object\". The predicate must be one of the relation names above, spelled as "
            "listed. Output nothing but the array. Invalid or ambiguous content is to be skipped, never guessed. "
            "If nothing qualifies, return [].\n\n";

    text += "## Example\n";
    text += "Passage:\n<<<\n";
    text += kExamplePassage;
    text += "\n>>>\nOutput:\n";
    text += example_triples().dump(-1, ' ', false);
    text += "\n";

    return PromptText{PromptKind::Extraction, std::move(text), unicode::fingerprint(chunk.text)};
}

std::optional<ArraySpan> find_first_array(std::string_view text) {
    for (std::size_t start = text.find('['); start != std::string_view::npos; start = text.find('[', start + 1)) {
        std::size_t depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (escaped) escaped = false;
                else if (c == '\\') escaped = true;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '[') ++depth;
            else if (c == ']' && --depth == 0) {
                const auto candidate = text.substr(start, i - start + 1);
                if (json::accept(candidate)) return ArraySpan{start, i};
                break;
            }
        }
    }
    return std::nullopt;
}

ParseOutcome parse_triple_response(std::string_view response, std::span<const RelationType> schema,
                                   const ParserOptions& options) {
    if (response.size() > options.max_response_bytes) {
        throw ResourceError(fmt::format("response of {} bytes exceeds the {} byte limit", response.size(),
                                        options.max_response_bytes));
    }
    ParseOutcome outcome;
    const auto span = find_first_array(response);
    if (!span) {
        outcome.diagnostics = "no JSON array found in response";
        return outcome;
    }
    outcome.array_found = true;
    const json array = json::parse(response.substr(span->begin, span->end - span->begin + 1));

    std::size_t position = 0;
    for (const auto& element : array) {
        auto skip = [&](SkipReason reason, std::string detail) {
            outcome.skipped.push_back(
                SkippedRecord{element.dump(-1, ' ', false, json::error_handler_t::replace), reason, std::move(detail), position});
        };
        if (!element.is_object()) {
            skip(SkipReason::NotAnObject, "");
            ++position;
            continue;
        }
        RawTriple raw;
        std::optional<std::pair<SkipReason, std::string>> problem;
        for (auto [field, target] : {std::pair{"subject", &raw.subject}, std::pair{"predicate", &raw.predicate},
                                     std::pair{"object", &raw.object}}) {
            auto it = element.find(field);
            if (it == element.end() || !it->is_string()) {
                problem = {SkipReason::MissingField, field};
                break;
            }
            *target = trimmed(it->get<std::string>());
            if (target->empty()) {
                problem = {SkipReason::EmptyField, field};
                break;
            }
        }
        if (!problem) {
            const auto relation = parse_relation(raw.predicate);
            if (!relation) {
                problem = {SkipReason::UnknownPredicate, raw.predicate};
            } else if (std::find(schema.begin(), schema.end(), *relation) == schema.end()) {
                problem = {SkipReason::RelationNotInSchema, std::string(surface(*relation))};
            } else {
                outcome.accepted.push_back(AcceptedTriple{std::move(raw), *relation, position});
            }
        }
        if (problem) skip(problem->first, problem->second);
        ++position;
    }
    outcome.diagnostics = fmt::format("array of {} elements: {} accepted, {} skipped", array.size(),
                                      outcome.accepted.size(), outcome.skipped.size());
    return outcome;
}

std::size_t ExtractionReport::failed_chunks() const {
    return static_cast<std::size_t>(std::count_if(chunks.begin(), chunks.end(), [](const auto& c) { return c.failed; }));
}

std::size_t ExtractionReport::skipped_records() const {
    std::size_t n = 0;
    for (const auto& c : chunks) n += c.skipped.size();
    return n;
}

ExtractionReport extract_corpus(std::span<const Chunk> chunks, LlmClient& client, const ExtractionOptions& options) {
    if (options.concurrency == 0) throw std::invalid_argument("concurrency must be positive");

    struct Result {
        ChunkOutcome outcome;
        std::vector<AcceptedTriple> accepted;
    };
    std::vector<Result> results(chunks.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < chunks.size(); i = next.fetch_add(1)) {
            const auto& chunk = chunks[i];
            auto& result = results[i];
            result.outcome.chunk_id = chunk.chunk_id;
            try {
                const auto prompt = build_extraction_prompt(chunk, options.schema);
                const auto response = client.complete(prompt, options.decoding);
                auto parsed = parse_triple_response(response, options.schema, options.parser);
                result.outcome.accepted = parsed.accepted.size();
                result.outcome.skipped = std::move(parsed.skipped);
                result.outcome.array_found = parsed.array_found;
                result.outcome.diagnostics = std::move(parsed.diagnostics);
                result.accepted = std::move(parsed.accepted);
            } catch (const std::exception& e) {
                result.outcome.failed = true;
                result.outcome.error = e.what();
            }
        }
    };

    const std::size_t threads = std::min(options.concurrency, chunks.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }

    std::vector<std::size_t> order(chunks.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return chunks[a].chunk_id < chunks[b].chunk_id; });

    ExtractionReport report;
    report.chunks.reserve(chunks.size());
    for (auto i : order) {
        for (auto& a : results[i].accepted) {
            report.triples.push_back(
                ExtractedTriple{chunks[i].chunk_id, a.position, a.relation, std::move(a.raw.subject), std::move(a.raw.object)});
        }
        if (results[i].outcome.failed) {
            spdlog::warn("extraction failed for chunk {}: {}", results[i].outcome.chunk_id, results[i].outcome.error);
        }
        report.chunks.push_back(std::move(results[i].outcome));
    }

    if (!chunks.empty()) {
        const double rate = static_cast<double>(report.failed_chunks()) / static_cast<double>(chunks.size());
        if (rate > options.max_failure_rate) {
            auto message = fmt::format("extraction aborted: {} of {} chunks failed (rate {:.3f} > {:.3f})",
                                       report.failed_chunks(), chunks.size(), rate, options.max_failure_rate);
            throw ExtractionAborted(message, std::move(report));
        }
    }
    return report;
}

} // namespace tcmkg

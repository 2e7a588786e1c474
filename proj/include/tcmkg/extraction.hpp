#pragma once

#include "tcmkg/corpus.hpp"
#include "tcmkg/error.hpp"
#include "tcmkg/llm_client.hpp"
#include "tcmkg/schema.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tcmkg {

struct RawTriple {
    std::string subject;
    std::string predicate;
    std::string object;
    bool operator==(const RawTriple&) const = default;
};

struct AcceptedTriple {
    RawTriple raw;
    RelationType relation;
    /// Index of the element in the recognised array.
    std::size_t position = 0;
};

enum class SkipReason {
    NotAnObject,
    MissingField,
    EmptyField,
    UnknownPredicate,
    RelationNotInSchema,
};

std::string_view to_string(SkipReason reason);

struct SkippedRecord {
    std::string raw;
    SkipReason reason;
    std::string detail;
    std::size_t position = 0;
};

struct ParseOutcome {
    std::vector<AcceptedTriple> accepted;
    std::vector<SkippedRecord> skipped;
    bool array_found = false;
    std::string diagnostics;
};

struct ParserOptions {
    std::size_t max_response_bytes = 1 << 20;
};

/// Relations the model is asked for by default: the six content relations.
std::vector<RelationType> default_extraction_schema();

/// Five-part prompt: role, context (metadata + passage), task, output format, example.
PromptText build_extraction_prompt(const Chunk& chunk, std::span<const RelationType> schema);

/// Byte range [first, last] of the first balanced, JSON-parseable array in `text`.
struct ArraySpan {
    std::size_t begin = 0;
    std::size_t end = 0;
};
std::optional<ArraySpan> find_first_array(std::string_view text);

/// Tolerant parse under the skip rule. Never throws on content; throws
/// ResourceError when the response exceeds options.max_response_bytes.
ParseOutcome parse_triple_response(std::string_view response, std::span<const RelationType> schema,
                                   const ParserOptions& options = {});

struct ExtractedTriple {
    std::string chunk_id;
    std::size_t position = 0;
    RelationType relation;
    std::string subject;
    std::string object;
};

struct ChunkOutcome {
    std::string chunk_id;
    bool failed = false;
    std::string error;
    std::size_t accepted = 0;
    std::vector<SkippedRecord> skipped;
    bool array_found = false;
    std::string diagnostics;
};

struct ExtractionReport {
    /// Sorted by (chunk_id, position).
    std::vector<ExtractedTriple> triples;
    /// One per input chunk, sorted by chunk_id.
    std::vector<ChunkOutcome> chunks;

    std::size_t failed_chunks() const;
    std::size_t skipped_records() const;
};

struct ExtractionOptions {
    std::size_t concurrency = 4;
    std::vector<RelationType> schema = default_extraction_schema();
    DecodingParams decoding;
    ParserOptions parser;
    /// Abort (after every chunk was attempted) when failed/total exceeds this.
    double max_failure_rate = 1.0;
};

class ExtractionAborted : public Error {
public:
    ExtractionAborted(const std::string& what, ExtractionReport report)
        : Error(what), report_(std::move(report)) {}
    const ExtractionReport& report() const noexcept { return report_; }

private:
    ExtractionReport report_;
};

ExtractionReport extract_corpus(std::span<const Chunk> chunks, LlmClient& client,
                                const ExtractionOptions& options = {});

} // namespace tcmkg

#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tcmkg {

enum class Specialty { Obstetrics, Gynecology, Fertility, Other };

inline constexpr std::array<Specialty, 4> kAllSpecialties = {
    Specialty::Obstetrics, Specialty::Gynecology, Specialty::Fertility, Specialty::Other};

std::string_view to_string(Specialty specialty);
std::optional<Specialty> parse_specialty(std::string_view text);

struct ChapterSource {
    std::string chapter_id;
    std::string title;
    std::string body;
    /// Unicode scalar values in `body`, punctuation and white space included.
    std::size_t character_count = 0;
};

struct SectionSource {
    std::string title;
    /// True when the input carried no section and the book title was used.
    bool implicit = false;
    std::vector<ChapterSource> chapters;
};

struct BookSource {
    std::string book_id;
    std::string title;
    Specialty specialty = Specialty::Other;
    std::vector<SectionSource> sections;
};

/// Half-open range of scalar-value offsets into a chapter body.
struct CharSpan {
    std::size_t start = 0;
    std::size_t end = 0;
    bool operator==(const CharSpan&) const = default;
};

/// Unit of extraction. Carries enough hierarchy metadata that the graph's
/// structural relations can be rebuilt from chunks alone.
struct Chunk {
    std::string chunk_id;
    std::string book_id;
    std::string book_title;
    Specialty specialty = Specialty::Other;
    std::string section_title;
    bool section_implicit = true;
    std::string chapter_id;
    std::string chapter_title;
    std::size_t chunk_index = 0;
    std::string text;
    CharSpan char_span;
};

struct ChunkingOptions {
    std::size_t size = 1000;
    std::size_t overlap = 100;
};

struct CorpusCounts {
    std::size_t books = 0;
    std::size_t chapters = 0;
    std::size_t characters = 0;
    bool operator==(const CorpusCounts&) const = default;
};

struct CorpusStats {
    std::map<Specialty, CorpusCounts> by_specialty;
    CorpusCounts total;
};

enum class CorpusFormat { JsonLines };

/// Parse line-delimited chapter records (see docs/formats.md). Records of one
/// book must be contiguous; a book id that reappears later is a duplicate.
std::vector<BookSource> parse_corpus(std::istream& input, CorpusFormat format = CorpusFormat::JsonLines,
                                     std::string_view source_name = "<stream>");

/// Load files or directories. A directory contributes every regular file in it,
/// in file-name order, one book per file. Book ids must be unique overall.
std::vector<BookSource> load_corpus(std::span<const std::filesystem::path> paths);

/// Spans for a text of `length` characters. Throws std::invalid_argument if
/// overlap >= size or size == 0.
std::vector<CharSpan> chunk_spans(std::size_t length, const ChunkingOptions& options);

std::vector<Chunk> chunk_chapter(const BookSource& book, const SectionSource& section,
                                 const ChapterSource& chapter, const ChunkingOptions& options);

/// All chunks of all books in document order.
std::vector<Chunk> chunk_corpus(std::span<const BookSource> books, const ChunkingOptions& options);

std::string make_chunk_id(std::string_view book_id, std::string_view chapter_id, std::size_t index);

CorpusStats corpus_stats(std::span<const BookSource> books);

// Chunk files written by `ingest` and read by `build-graph`.
void write_chunks(std::ostream& out, std::span<const Chunk> chunks);
std::vector<Chunk> read_chunks(std::istream& in, std::string_view source_name = "<stream>");

} // namespace tcmkg

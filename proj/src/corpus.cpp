#include "tcmkg/corpus.hpp"

#include "tcmkg/error.hpp"
#include "tcmkg/unicode.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <stdexcept>

namespace tcmkg {

using nlohmann::json;

std::string_view to_string(Specialty specialty) {
    switch (specialty) {
        case Specialty::Obstetrics: return "Obstetrics";
        case Specialty::Gynecology: return "Gynecology";
        case Specialty::Fertility: return "Fertility";
        case Specialty::Other: return "Other";
    }
    return "Other";
}

std::optional<Specialty> parse_specialty(std::string_view text) {
    const auto key = unicode::ascii_lower(text);
    for (auto s : kAllSpecialties) {
        if (unicode::ascii_lower(to_string(s)) == key) return s;
    }
    return std::nullopt;
}

namespace {

struct RecordReader {
    std::string_view source;
    std::size_t line;
    const json& record;

    [[noreturn]] void fail(std::string_view field, const std::string& what) const {
        throw InputError(std::string(source), line, std::string(field), what);
    }

    std::string required(std::string_view field, bool allow_empty = false) const {
        auto it = record.find(field);
        if (it == record.end() || it->is_null()) fail(field, "missing");
        if (!it->is_string()) fail(field, "must be a string");
        auto value = it->get<std::string>();
        if (!allow_empty && value.empty()) fail(field, "must not be empty");
        return value;
    }

    std::optional<std::string> optional(std::string_view field) const {
        auto it = record.find(field);
        if (it == record.end() || it->is_null()) return std::nullopt;
        if (!it->is_string()) fail(field, "must be a string");
        auto value = it->get<std::string>();
        if (value.empty()) return std::nullopt;
        return value;
    }

    std::size_t index(std::string_view field) const {
        auto it = record.find(field);
        if (it == record.end()) fail(field, "missing");
        if (!it->is_number_unsigned()) fail(field, "must be a non-negative integer");
        return it->get<std::size_t>();
    }
};

template <typename Visit>
void for_each_record(std::istream& input, std::string_view source_name, Visit&& visit) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(input, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw InputError(std::string(source_name), line_no, "", fmt::format("malformed record: {}", e.what()));
        }
        if (!record.is_object()) throw InputError(std::string(source_name), line_no, "", "record is not an object");
        visit(RecordReader{source_name, line_no, record});
    }
}

} // namespace

std::vector<BookSource> parse_corpus(std::istream& input, CorpusFormat format, std::string_view source_name) {
    if (format != CorpusFormat::JsonLines) throw std::invalid_argument("unsupported corpus format");

    std::vector<BookSource> books;
    std::set<std::string> finished_books;

    for_each_record(input, source_name, [&](const RecordReader& r) {
        const auto title = r.required("book");
        const auto book_id = r.optional("book_id").value_or(title);
        const auto specialty_text = r.required("specialty");
        const auto specialty = parse_specialty(specialty_text);
        if (!specialty) r.fail("specialty", fmt::format("unknown specialty '{}'", specialty_text));
        const auto section = r.optional("section");
        const auto chapter_title = r.required("chapter");
        const auto body = r.required("text", true);
        if (body.empty()) r.fail("text", "chapter body is empty");
        const auto chapter_id_field = r.optional("chapter_id");

        if (books.empty() || books.back().book_id != book_id) {
            if (finished_books.contains(book_id))
                r.fail("book_id", fmt::format("duplicate book_id '{}' (records of a book must be contiguous)", book_id));
            if (!books.empty()) finished_books.insert(books.back().book_id);
            books.push_back(BookSource{book_id, title, *specialty, {}});
        }
        auto& book = books.back();
        if (book.title != title) r.fail("book", fmt::format("conflicts with earlier title '{}' of book '{}'", book.title, book_id));
        if (book.specialty != *specialty) r.fail("specialty", fmt::format("conflicts with earlier records of book '{}'", book_id));

        const std::string section_title = section.value_or(title);
        const bool implicit = !section.has_value();
        if (book.sections.empty() || book.sections.back().title != section_title ||
            book.sections.back().implicit != implicit) {
            for (const auto& s : book.sections) {
                if (s.title == section_title && s.implicit == implicit)
                    r.fail("section", fmt::format("section '{}' is not contiguous", section_title));
            }
            book.sections.push_back(SectionSource{section_title, implicit, {}});
        }

        std::size_t ordinal = 1;
        for (const auto& s : book.sections) ordinal += s.chapters.size();
        const std::string chapter_id = chapter_id_field.value_or(fmt::format("ch{:04}", ordinal));
        for (const auto& s : book.sections) {
            for (const auto& c : s.chapters) {
                if (c.chapter_id == chapter_id) r.fail("chapter_id", fmt::format("duplicate chapter_id '{}'", chapter_id));
            }
        }

        ChapterSource chapter{chapter_id, chapter_title, body, unicode::length(body)};
        book.sections.back().chapters.push_back(std::move(chapter));
    });
    return books;
}

std::vector<BookSource> load_corpus(std::span<const std::filesystem::path> paths) {
    namespace fs = std::filesystem;
    std::vector<BookSource> books;
    std::set<std::string> ids;

    auto load_file = [&](const fs::path& file, bool one_book) {
        std::ifstream in(file, std::ios::binary);
        if (!in) throw InputError(file.string(), 0, "", "cannot open corpus file");
        auto parsed = parse_corpus(in, CorpusFormat::JsonLines, file.string());
        if (one_book && parsed.size() > 1)
            throw InputError(file.string(), 0, "book_id", "a corpus directory expects one book per file");
        for (auto& book : parsed) {
            if (!ids.insert(book.book_id).second)
                throw InputError(file.string(), 0, "book_id", fmt::format("duplicate book_id '{}'", book.book_id));
            books.push_back(std::move(book));
        }
    };

    for (const auto& path : paths) {
        if (fs::is_directory(path)) {
            std::vector<fs::path> files;
            for (const auto& entry : fs::directory_iterator(path)) {
                if (entry.is_regular_file()) files.push_back(entry.path());
            }
            std::sort(files.begin(), files.end());
            for (const auto& file : files) load_file(file, true);
        } else {
            load_file(path, false);
        }
    }
    return books;
}

std::vector<CharSpan> chunk_spans(std::size_t length, const ChunkingOptions& options) {
    if (options.size == 0) throw std::invalid_argument("chunk size must be positive");
    if (options.overlap >= options.size) throw std::invalid_argument("chunk overlap must be smaller than chunk size");
    std::vector<CharSpan> spans;
    if (length == 0) return spans;
    if (length <= options.size) {
        spans.push_back({0, length});
        return spans;
    }
    const std::size_t step = options.size - options.overlap;
    const std::size_t count = (length - options.size + step - 1) / step + 1;
    spans.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t start = i * step;
        spans.push_back({start, std::min(start + options.size, length)});
    }
    return spans;
}

std::string make_chunk_id(std::string_view book_id, std::string_view chapter_id, std::size_t index) {
    return fmt::format("{}/{}#{:04}", book_id, chapter_id, index);
}

std::vector<Chunk> chunk_chapter(const BookSource& book, const SectionSource& section, const ChapterSource& chapter,
                                 const ChunkingOptions& options) {
    if (chapter.body.empty()) throw std::invalid_argument("chapter body is empty");
    const auto bounds = unicode::boundaries(chapter.body);
    const auto spans = chunk_spans(bounds.size() - 1, options);
    std::vector<Chunk> chunks;
    chunks.reserve(spans.size());
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const auto& span = spans[i];
        Chunk chunk;
        chunk.chunk_id = make_chunk_id(book.book_id, chapter.chapter_id, i);
        chunk.book_id = book.book_id;
        chunk.book_title = book.title;
        chunk.specialty = book.specialty;
        chunk.section_title = section.title;
        chunk.section_implicit = section.implicit;
        chunk.chapter_id = chapter.chapter_id;
        chunk.chapter_title = chapter.title;
        chunk.chunk_index = i;
        chunk.text = chapter.body.substr(bounds[span.start], bounds[span.end] - bounds[span.start]);
        chunk.char_span = span;
        chunks.push_back(std::move(chunk));
    }
    return chunks;
}

std::vector<Chunk> chunk_corpus(std::span<const BookSource> books, const ChunkingOptions& options) {
    std::vector<Chunk> chunks;
    for (const auto& book : books) {
        for (const auto& section : book.sections) {
            for (const auto& chapter : section.chapters) {
                auto part = chunk_chapter(book, section, chapter, options);
                std::move(part.begin(), part.end(), std::back_inserter(chunks));
            }
        }
    }
    return chunks;
}

CorpusStats corpus_stats(std::span<const BookSource> books) {
    CorpusStats stats;
    for (auto s : kAllSpecialties) stats.by_specialty[s] = {};
    for (const auto& book : books) {
        auto& counts = stats.by_specialty[book.specialty];
        ++counts.books;
        for (const auto& section : book.sections) {
            counts.chapters += section.chapters.size();
            for (const auto& chapter : section.chapters) counts.characters += chapter.character_count;
        }
    }
    for (const auto& [specialty, counts] : stats.by_specialty) {
        stats.total.books += counts.books;
        stats.total.chapters += counts.chapters;
        stats.total.characters += counts.characters;
    }
    return stats;
}

void write_chunks(std::ostream& out, std::span<const Chunk> chunks) {
    for (const auto& c : chunks) {
        json record = {
            {"chunk_id", c.chunk_id},
            {"book_id", c.book_id},
            {"book", c.book_title},
            {"specialty", to_string(c.specialty)},
            {"section", c.section_title},
            {"section_implicit", c.section_implicit},
            {"chapter_id", c.chapter_id},
            {"chapter", c.chapter_title},
            {"index", c.chunk_index},
            {"start", c.char_span.start},
            {"end", c.char_span.end},
            {"text", c.text},
            {"fingerprint", unicode::fingerprint(c.text)},
        };
        out << record.dump(-1, ' ', false) << '\n';
    }
}

std::vector<Chunk> read_chunks(std::istream& in, std::string_view source_name) {
    std::vector<Chunk> chunks;
    for_each_record(in, source_name, [&](const RecordReader& r) {
        Chunk c;
        c.chunk_id = r.required("chunk_id");
        c.book_id = r.required("book_id");
        c.book_title = r.required("book");
        const auto specialty = parse_specialty(r.required("specialty"));
        if (!specialty) r.fail("specialty", "unknown specialty");
        c.specialty = *specialty;
        c.section_title = r.required("section");
        auto implicit = r.record.find("section_implicit");
        if (implicit == r.record.end() || !implicit->is_boolean()) r.fail("section_implicit", "must be a boolean");
        c.section_implicit = implicit->get<bool>();
        c.chapter_id = r.required("chapter_id");
        c.chapter_title = r.required("chapter");
        c.chunk_index = r.index("index");
        c.char_span = {r.index("start"), r.index("end")};
        c.text = r.required("text");
        if (c.char_span.end < c.char_span.start || c.char_span.end - c.char_span.start != unicode::length(c.text))
            r.fail("end", "span does not match text length");
        chunks.push_back(std::move(c));
    });
    return chunks;
}

} // namespace tcmkg

#include "tcmkg/unicode.hpp"

#include "tcmkg/error.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <fmt/format.h>

#include <cstdint>

namespace tcmkg::unicode {

namespace {

// Decodes one scalar value at `pos`; returns a negative value on malformed input.
UChar32 next(std::string_view text, std::size_t& pos) {
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(text.data());
    int32_t i = static_cast<int32_t>(pos);
    UChar32 c = 0;
    U8_NEXT(bytes, i, static_cast<int32_t>(text.size()), c);
    pos = static_cast<std::size_t>(i);
    return c;
}

void require_valid(std::string_view text) {
    if (!is_valid_utf8(text)) throw Error("invalid UTF-8 text");
}

} // namespace

bool is_valid_utf8(std::string_view text) {
    std::size_t pos = 0;
    while (pos < text.size()) {
        if (next(text, pos) < 0) return false;
    }
    return true;
}

std::size_t length(std::string_view text) {
    std::size_t pos = 0;
    std::size_t n = 0;
    while (pos < text.size()) {
        if (next(text, pos) < 0) throw Error(fmt::format("invalid UTF-8 at byte {}", pos));
        ++n;
    }
    return n;
}

std::vector<std::size_t> boundaries(std::string_view text) {
    std::vector<std::size_t> out;
    out.reserve(text.size() + 1);
    std::size_t pos = 0;
    out.push_back(0);
    while (pos < text.size()) {
        if (next(text, pos) < 0) throw Error(fmt::format("invalid UTF-8 at byte {}", pos));
        out.push_back(pos);
    }
    return out;
}

std::string substr(std::string_view text, std::size_t start, std::size_t end) {
    auto b = boundaries(text);
    const std::size_t n = b.size() - 1;
    if (start > end || end > n) throw std::out_of_range("unicode::substr range");
    return std::string(text.substr(b[start], b[end] - b[start]));
}

std::string nfc(std::string_view text) {
    require_valid(text);
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) throw Error(fmt::format("ICU NFC unavailable: {}", u_errorName(status)));
    auto source = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    if (normalizer->isNormalized(source, status) && U_SUCCESS(status)) return std::string(text);
    status = U_ZERO_ERROR;
    icu::UnicodeString normalized = normalizer->normalize(source, status);
    if (U_FAILURE(status)) throw Error(fmt::format("NFC failed: {}", u_errorName(status)));
    std::string out;
    normalized.toUTF8String(out);
    return out;
}

std::string collapse_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t start = pos;
        const UChar32 c = next(text, pos);
        if (c < 0) throw Error(fmt::format("invalid UTF-8 at byte {}", start));
        if (u_isUWhiteSpace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.append(text.substr(start, pos - start));
    }
    return out;
}

std::u32string to_u32(std::string_view text) {
    std::u32string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const UChar32 c = next(text, pos);
        if (c < 0) throw Error(fmt::format("invalid UTF-8 at byte {}", pos));
        out.push_back(static_cast<char32_t>(c));
    }
    return out;
}

std::string to_utf8(std::u32string_view text) {
    std::string out;
    out.reserve(text.size() * 3);
    for (char32_t c : text) {
        std::uint8_t buffer[U8_MAX_LENGTH];
        int32_t i = 0;
        UBool error = false;
        U8_APPEND(buffer, i, U8_MAX_LENGTH, static_cast<UChar32>(c), error);
        if (error) throw Error("cannot encode code point as UTF-8");
        out.append(reinterpret_cast<const char*>(buffer), static_cast<std::size_t>(i));
    }
    return out;
}

std::string ascii_lower(std::string_view text) {
    std::string out(text);
    for (auto& ch : out) {
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    }
    return out;
}

std::string fingerprint(std::string_view bytes) {
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return fmt::format("{:016x}", hash);
}

} // namespace tcmkg::unicode

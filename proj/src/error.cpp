#include "tcmkg/error.hpp"

#include <fmt/format.h>

namespace tcmkg {

namespace {
std::string describe(const std::string& source, std::size_t line, const std::string& field, const std::string& what) {
    std::string location = line > 0 ? fmt::format("{}:{}", source, line) : source;
    if (!field.empty()) return fmt::format("{}: field '{}': {}", location, field, what);
    return fmt::format("{}: {}", location, what);
}
} // namespace

InputError::InputError(std::string source, std::size_t line, std::string field, const std::string& what)
    : Error(describe(source, line, field, what)), source_(std::move(source)), line_(line), field_(std::move(field)) {}

SnapshotError::SnapshotError(std::size_t line, const std::string& what)
    : Error(line > 0 ? fmt::format("snapshot line {}: {}", line, what) : fmt::format("snapshot: {}", what)),
      line_(line) {}

} // namespace tcmkg

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

namespace tcmkg {

/// The closed vocabulary of graph relations.
enum class RelationType : std::uint8_t {
    BelongToCategory,
    IncludeSection,
    IncludeChapter,
    BelongToBook,
    TreatmentPlan,
    TreatDisease,
    DescribeDisease,
    TreatmentSymptom,
    SymptomsPresent,
    IngredientUse,
};

inline constexpr std::array<RelationType, 10> kAllRelations = {
    RelationType::BelongToCategory, RelationType::IncludeSection, RelationType::IncludeChapter,
    RelationType::BelongToBook,     RelationType::TreatmentPlan,  RelationType::TreatDisease,
    RelationType::DescribeDisease,  RelationType::TreatmentSymptom, RelationType::SymptomsPresent,
    RelationType::IngredientUse,
};

/// Relations derived from corpus metadata rather than requested from a model.
inline constexpr std::array<RelationType, 4> kStructuralRelations = {
    RelationType::BelongToCategory, RelationType::IncludeSection, RelationType::IncludeChapter,
    RelationType::BelongToBook,
};

inline constexpr std::array<RelationType, 6> kContentRelations = {
    RelationType::TreatmentPlan,    RelationType::TreatDisease,    RelationType::DescribeDisease,
    RelationType::TreatmentSymptom, RelationType::SymptomsPresent, RelationType::IngredientUse,
};

/// Canonical surface string used in prompts and storage, e.g. "Treat Disease".
std::string_view surface(RelationType relation);

/// Compact identifier, e.g. "TreatDisease".
std::string_view identifier(RelationType relation);

/// Case-insensitive, whitespace/underscore/hyphen-insensitive match against the
/// surface string, the identifier, and a small alias table.
std::optional<RelationType> parse_relation(std::string_view text);

bool is_structural(RelationType relation);

enum class EntityCategory : std::uint8_t {
    Ingredient,
    Disease,
    Symptom,
    Treatment,
    Book,
    Section,
    Chapter,
    Category,
};

inline constexpr std::array<EntityCategory, 8> kAllCategories = {
    EntityCategory::Ingredient, EntityCategory::Disease, EntityCategory::Symptom,
    EntityCategory::Treatment,  EntityCategory::Book,    EntityCategory::Section,
    EntityCategory::Chapter,    EntityCategory::Category,
};

std::string_view to_string(EntityCategory category);
std::optional<EntityCategory> parse_category(std::string_view text);

/// Bit set over EntityCategory.
class CategorySet {
public:
    constexpr CategorySet() = default;
    constexpr CategorySet(std::initializer_list<EntityCategory> categories) {
        for (auto c : categories) bits_ |= bit(c);
    }
    static constexpr CategorySet any() {
        CategorySet s;
        s.bits_ = 0xFF;
        return s;
    }

    constexpr bool contains(EntityCategory c) const { return (bits_ & bit(c)) != 0; }
    constexpr bool intersects(CategorySet other) const { return (bits_ & other.bits_) != 0; }
    /// The single member, if exactly one.
    std::optional<EntityCategory> sole() const;
    constexpr bool operator==(const CategorySet&) const = default;

private:
    static constexpr std::uint8_t bit(EntityCategory c) {
        return static_cast<std::uint8_t>(1u << static_cast<unsigned>(c));
    }
    std::uint8_t bits_ = 0;
};

struct RelationSignature {
    CategorySet domain;
    CategorySet range;
};

/// Subject/object categories each relation admits.
RelationSignature signature(RelationType relation);

enum class Direction : std::uint8_t { Out, In, Both };

std::string_view to_string(Direction direction);
std::optional<Direction> parse_direction(std::string_view text);

/// Set of relations, used as traversal filters.
class RelationSet {
public:
    RelationSet() = default;
    RelationSet(std::initializer_list<RelationType> relations) {
        for (auto r : relations) insert(r);
    }
    template <typename Range>
    static RelationSet of(const Range& relations) {
        RelationSet s;
        for (auto r : relations) s.insert(r);
        return s;
    }

    void insert(RelationType r) { bits_ |= static_cast<std::uint16_t>(1u << static_cast<unsigned>(r)); }
    bool contains(RelationType r) const { return (bits_ >> static_cast<unsigned>(r)) & 1u; }
    bool empty() const { return bits_ == 0; }
    bool operator==(const RelationSet&) const = default;

private:
    std::uint16_t bits_ = 0;
};

} // namespace tcmkg

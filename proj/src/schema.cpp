#include "tcmkg/schema.hpp"

#include "tcmkg/unicode.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <map>
#include <string>

namespace tcmkg {

namespace {

struct RelationInfo {
    RelationType relation;
    std::string_view surface;
    std::string_view identifier;
};

constexpr std::array<RelationInfo, 10> kRelationInfo = {{
    {RelationType::BelongToCategory, "Belong to Category", "BelongToCategory"},
    {RelationType::IncludeSection, "Include Section", "IncludeSection"},
    {RelationType::IncludeChapter, "Include Chapter", "IncludeChapter"},
    {RelationType::BelongToBook, "Belong to Book", "BelongToBook"},
    {RelationType::TreatmentPlan, "Treatment Plan", "TreatmentPlan"},
    {RelationType::TreatDisease, "Treat Disease", "TreatDisease"},
    {RelationType::DescribeDisease, "Describe Disease", "DescribeDisease"},
    {RelationType::TreatmentSymptom, "Treatment Symptom", "TreatmentSymptom"},
    {RelationType::SymptomsPresent, "Symptoms Present", "SymptomsPresent"},
    {RelationType::IngredientUse, "Ingredient Use", "IngredientUse"},
}};

// Lower-cased ASCII with white space, '_' and '-' removed.
std::string match_key(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    const auto* bytes = reinterpret_cast<const std::uint8_t*>(text.data());
    const auto length = static_cast<int32_t>(text.size());
    int32_t i = 0;
    while (i < length) {
        const int32_t start = i;
        UChar32 c = 0;
        U8_NEXT(bytes, i, length, c);
        if (c < 0) return {};
        if (u_isUWhiteSpace(c) || c == '_' || c == '-') continue;
        if (c >= 'A' && c <= 'Z') {
            out.push_back(static_cast<char>(c - 'A' + 'a'));
            continue;
        }
        out.append(text.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(i - start)));
    }
    return out;
}

const std::map<std::string, RelationType>& relation_lookup() {
    static const auto table = [] {
        std::map<std::string, RelationType> t;
        for (const auto& info : kRelationInfo) {
            t.emplace(match_key(info.surface), info.relation);
            t.emplace(match_key(info.identifier), info.relation);
        }
        const std::pair<std::string_view, RelationType> aliases[] = {
            {"Use Ingredient", RelationType::IngredientUse},
            {"Uses Ingredient", RelationType::IngredientUse},
            {"Belongs to Category", RelationType::BelongToCategory},
            {"Belongs to Book", RelationType::BelongToBook},
            {"Includes Section", RelationType::IncludeSection},
            {"Includes Chapter", RelationType::IncludeChapter},
            {"Treats Disease", RelationType::TreatDisease},
            {"Describes Disease", RelationType::DescribeDisease},
            {"Treat Symptom", RelationType::TreatmentSymptom},
            {"Treats Symptom", RelationType::TreatmentSymptom},
            {"Symptom Present", RelationType::SymptomsPresent},
            {"所属类别", RelationType::BelongToCategory},
            {"包含篇", RelationType::IncludeSection},
            {"包含章节", RelationType::IncludeChapter},
            {"所属书籍", RelationType::BelongToBook},
            {"治疗方案", RelationType::TreatmentPlan},
            {"治疗疾病", RelationType::TreatDisease},
            {"描述疾病", RelationType::DescribeDisease},
            {"治疗症状", RelationType::TreatmentSymptom},
            {"症状表现", RelationType::SymptomsPresent},
            {"药物组成", RelationType::IngredientUse},
        };
        for (const auto& [text, relation] : aliases) t.emplace(match_key(text), relation);
        return t;
    }();
    return table;
}

} // namespace

std::string_view surface(RelationType relation) {
    return kRelationInfo.at(static_cast<std::size_t>(relation)).surface;
}

std::string_view identifier(RelationType relation) {
    return kRelationInfo.at(static_cast<std::size_t>(relation)).identifier;
}

std::optional<RelationType> parse_relation(std::string_view text) {
    const auto key = match_key(text);
    if (key.empty()) return std::nullopt;
    const auto& table = relation_lookup();
    if (auto it = table.find(key); it != table.end()) return it->second;
    return std::nullopt;
}

bool is_structural(RelationType relation) {
    for (auto r : kStructuralRelations) {
        if (r == relation) return true;
    }
    return false;
}

std::string_view to_string(EntityCategory category) {
    switch (category) {
        case EntityCategory::Ingredient: return "Ingredient";
        case EntityCategory::Disease: return "Disease";
        case EntityCategory::Symptom: return "Symptom";
        case EntityCategory::Treatment: return "Treatment";
        case EntityCategory::Book: return "Book";
        case EntityCategory::Section: return "Section";
        case EntityCategory::Chapter: return "Chapter";
        case EntityCategory::Category: return "Category";
    }
    return "?";
}

std::optional<EntityCategory> parse_category(std::string_view text) {
    const auto key = unicode::ascii_lower(text);
    for (auto c : kAllCategories) {
        if (unicode::ascii_lower(to_string(c)) == key) return c;
    }
    return std::nullopt;
}

std::optional<EntityCategory> CategorySet::sole() const {
    std::optional<EntityCategory> found;
    for (auto c : kAllCategories) {
        if (!contains(c)) continue;
        if (found) return std::nullopt;
        found = c;
    }
    return found;
}

RelationSignature signature(RelationType relation) {
    using C = EntityCategory;
    switch (relation) {
        case RelationType::BelongToCategory: return {CategorySet::any(), {C::Category}};
        case RelationType::IncludeSection: return {{C::Book}, {C::Section}};
        case RelationType::IncludeChapter: return {{C::Book, C::Section}, {C::Chapter}};
        case RelationType::BelongToBook: return {{C::Chapter}, {C::Book}};
        case RelationType::TreatmentPlan: return {{C::Chapter}, {C::Treatment}};
        case RelationType::TreatDisease: return {{C::Treatment}, {C::Disease}};
        case RelationType::DescribeDisease: return {{C::Chapter}, {C::Disease}};
        case RelationType::TreatmentSymptom: return {{C::Treatment}, {C::Symptom}};
        case RelationType::SymptomsPresent: return {{C::Disease}, {C::Symptom}};
        case RelationType::IngredientUse: return {{C::Treatment}, {C::Ingredient}};
    }
    return {};
}

std::string_view to_string(Direction direction) {
    switch (direction) {
        case Direction::Out: return "out";
        case Direction::In: return "in";
        case Direction::Both: return "both";
    }
    return "?";
}

std::optional<Direction> parse_direction(std::string_view text) {
    const auto key = unicode::ascii_lower(text);
    if (key == "out") return Direction::Out;
    if (key == "in") return Direction::In;
    if (key == "both") return Direction::Both;
    return std::nullopt;
}

} // namespace tcmkg

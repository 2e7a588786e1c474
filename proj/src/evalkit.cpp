#include "tcmkg/evalkit.hpp"

#include "tcmkg/error.hpp"
#include "tcmkg/graph.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <map>
#include <stdexcept>

namespace tcmkg::eval {

using nlohmann::json;

ExtractionMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    ExtractionMetrics m{tp, fp, fn};
    auto ratio = [&](std::size_t num, std::size_t den) {
        if (den == 0) {
            m.degenerate = true;
            return 1.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    m.precision = ratio(tp, tp + fp);
    m.recall = ratio(tp, tp + fn);
    m.accuracy = ratio(tp, tp + fp + fn);
    m.f1 = (m.precision + m.recall) > 0.0 ? f1_from_pr(m.precision, m.recall) : 0.0;
    return m;
}

double f1_from_pr(double precision, double recall) {
    if (precision + recall <= 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

double accuracy_from_pr(double precision, double recall) {
    if (!(precision > 0.0 && precision <= 1.0) || !(recall > 0.0 && recall <= 1.0))
        throw std::invalid_argument("precision and recall must lie in (0, 1]");
    return 1.0 / (1.0 / precision + 1.0 / recall - 1.0);
}

namespace {

AnnotatedTriple parse_triple_record(const json& record, std::string_view source, std::size_t line) {
    const std::string src(source);
    if (!record.is_object()) throw InputError(src, line, "", "record is not an object");
    auto text = [&](std::string_view field, bool required) -> std::string {
        auto it = record.find(field);
        if (it == record.end() || it->is_null()) {
            if (required) throw InputError(src, line, std::string(field), "missing");
            return {};
        }
        if (!it->is_string()) throw InputError(src, line, std::string(field), "must be a string");
        return it->get<std::string>();
    };
    const auto relation = parse_relation(text("predicate", true));
    if (!relation) throw InputError(src, line, "predicate", "unknown relation");
    AnnotatedTriple t;
    t.item = text("item", false);
    try {
        t.triple = CanonicalTriple{normalize_entity_name(text("subject", true)), *relation,
                                   normalize_entity_name(text("object", true))};
    } catch (const InvalidNameError& e) {
        throw InputError(src, line, "subject/object", e.what());
    }
    return t;
}

} // namespace

std::set<AnnotatedTriple> read_triples(std::istream& in, std::string_view source_name) {
    std::set<AnnotatedTriple> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw InputError(std::string(source_name), line_no, "", fmt::format("malformed record: {}", e.what()));
        }
        out.insert(parse_triple_record(record, source_name, line_no));
    }
    return out;
}

std::set<AnnotatedTriple> parse_triples(const json& array, std::string_view source_name) {
    if (!array.is_array()) throw InputError(std::string(source_name), 0, "", "expected an array of triples");
    std::set<AnnotatedTriple> out;
    std::size_t n = 0;
    for (const auto& record : array) out.insert(parse_triple_record(record, source_name, ++n));
    return out;
}

RatingMatrix::RatingMatrix(std::vector<std::string> items, std::vector<std::string> raters, std::vector<int> scores)
    : items_(std::move(items)), raters_(std::move(raters)), scores_(std::move(scores)) {
    if (scores_.size() != items_.size() * raters_.size()) throw std::invalid_argument("rating grid size mismatch");
    for (int s : scores_) {
        if (s < 1 || s > 5) throw std::invalid_argument(fmt::format("score {} outside 1..5", s));
    }
}

RatingMatrix RatingMatrix::from_records(std::span<const Record> records, std::string_view source_name) {
    const std::string src(source_name);
    std::vector<std::string> items, raters;
    std::map<std::string, std::size_t> item_index, rater_index;
    std::map<std::pair<std::size_t, std::size_t>, int> cells;
    std::size_t n = 0;
    for (const auto& r : records) {
        ++n;
        if (r.score < 1 || r.score > 5) throw InputError(src, n, "score", fmt::format("{} is outside 1..5", r.score));
        auto [ii, new_item] = item_index.try_emplace(r.item, items.size());
        if (new_item) items.push_back(r.item);
        auto [ri, new_rater] = rater_index.try_emplace(r.rater, raters.size());
        if (new_rater) raters.push_back(r.rater);
        if (!cells.emplace(std::pair{ii->second, ri->second}, r.score).second)
            throw InputError(src, n, "rater", fmt::format("rater '{}' scored item '{}' twice", r.rater, r.item));
    }
    if (cells.size() != items.size() * raters.size())
        throw InputError(src, 0, "score", fmt::format("incomplete matrix: {} of {} cells present", cells.size(),
                                                     items.size() * raters.size()));
    std::vector<int> scores(items.size() * raters.size());
    for (const auto& [key, score] : cells) scores[key.first * raters.size() + key.second] = score;
    return RatingMatrix(std::move(items), std::move(raters), std::move(scores));
}

namespace {

RatingMatrix::Record rating_record(const json& record, std::string_view source, std::size_t line) {
    const std::string src(source);
    if (!record.is_object()) throw InputError(src, line, "", "record is not an object");
    auto id = [&](std::string_view field) {
        auto it = record.find(field);
        if (it == record.end()) throw InputError(src, line, std::string(field), "missing");
        if (it->is_string()) return it->get<std::string>();
        if (it->is_number_integer()) return it->dump();
        throw InputError(src, line, std::string(field), "must be a string or integer");
    };
    auto score = record.find("score");
    if (score == record.end() || !score->is_number_integer())
        throw InputError(src, line, "score", "missing or not an integer");
    return {id("item"), id("rater"), score->get<int>()};
}

} // namespace

RatingMatrix RatingMatrix::read(std::istream& in, std::string_view source_name) {
    std::vector<Record> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error& e) {
            throw InputError(std::string(source_name), line_no, "", fmt::format("malformed record: {}", e.what()));
        }
        records.push_back(rating_record(record, source_name, line_no));
    }
    return from_records(records, source_name);
}

RatingMatrix RatingMatrix::from_json(const json& array, std::string_view source_name) {
    if (!array.is_array()) throw InputError(std::string(source_name), 0, "", "expected an array of ratings");
    std::vector<Record> records;
    std::size_t n = 0;
    for (const auto& r : array) records.push_back(rating_record(r, source_name, ++n));
    return from_records(records, source_name);
}

double mean_expert_score(const RatingMatrix& matrix) {
    if (matrix.empty()) throw Error("rating matrix is empty");
    double sum = 0.0;
    for (int s : matrix.scores()) sum += s;
    return sum / static_cast<double>(matrix.scores().size());
}

double response_accuracy(const RatingMatrix& matrix, int threshold, AccuracyBasis basis) {
    if (matrix.empty()) throw Error("rating matrix is empty");
    if (basis == AccuracyBasis::PerRating) {
        std::size_t correct = 0;
        for (int s : matrix.scores()) correct += s >= threshold ? 1 : 0;
        return static_cast<double>(correct) / static_cast<double>(matrix.scores().size());
    }
    std::size_t correct_items = 0;
    for (std::size_t i = 0; i < matrix.item_count(); ++i) {
        std::size_t votes = 0;
        for (std::size_t r = 0; r < matrix.rater_count(); ++r) votes += matrix.at(i, r) >= threshold ? 1 : 0;
        correct_items += 2 * votes > matrix.rater_count() ? 1 : 0;
    }
    return static_cast<double>(correct_items) / static_cast<double>(matrix.item_count());
}

double fleiss_kappa(const std::vector<std::vector<std::size_t>>& counts, std::size_t raters) {
    if (raters < 2) throw Error("agreement needs at least two raters");
    if (counts.empty()) throw Error("agreement needs at least one item");
    const std::size_t categories = counts.front().size();
    const double n = static_cast<double>(raters);
    const double items = static_cast<double>(counts.size());

    std::vector<double> totals(categories, 0.0);
    double observed = 0.0;
    for (const auto& row : counts) {
        if (row.size() != categories) throw std::invalid_argument("ragged category counts");
        std::size_t row_sum = 0;
        double squares = 0.0;
        for (std::size_t j = 0; j < categories; ++j) {
            row_sum += row[j];
            squares += static_cast<double>(row[j]) * static_cast<double>(row[j]);
            totals[j] += static_cast<double>(row[j]);
        }
        if (row_sum != raters) throw std::invalid_argument("each item must be rated by every rater");
        observed += (squares - n) / (n * (n - 1.0));
    }
    observed /= items;

    double expected = 0.0;
    for (double t : totals) {
        const double p = t / (items * n);
        expected += p * p;
    }
    if (expected >= 1.0 - 1e-12) return 1.0;
    return (observed - expected) / (1.0 - expected);
}

double inter_rater_agreement(const RatingMatrix& matrix, int threshold) {
    if (matrix.rater_count() < 2) throw Error("inter-rater agreement needs at least two raters");
    if (matrix.item_count() < 1) throw Error("inter-rater agreement needs at least one item");
    std::vector<std::vector<std::size_t>> counts(matrix.item_count(), std::vector<std::size_t>(2, 0));
    for (std::size_t i = 0; i < matrix.item_count(); ++i) {
        for (std::size_t r = 0; r < matrix.rater_count(); ++r) ++counts[i][matrix.at(i, r) >= threshold ? 1 : 0];
    }
    return fleiss_kappa(counts, matrix.rater_count());
}

RatingSummary summarize_ratings(const RatingMatrix& matrix, int threshold) {
    RatingSummary s;
    s.items = matrix.item_count();
    s.raters = matrix.rater_count();
    s.mes = mean_expert_score(matrix);
    s.accuracy = response_accuracy(matrix, threshold, AccuracyBasis::PerRating);
    s.accuracy_per_item = response_accuracy(matrix, threshold, AccuracyBasis::PerItemMajority);
    if (matrix.rater_count() >= 2) s.ira = inter_rater_agreement(matrix, threshold);
    return s;
}

std::span<const ReferenceExtractionFigures> reference_extraction_figures() {
    static const std::vector<ReferenceExtractionFigures> figures = {
        {"kimi/general-prompt", 90.1, 95.9, 92.3, 86.8},
        {"kimi/customized-prompt", 98.55, 99.60, 99.55, 98.17},
        {"gpt4/customized-prompt", 94.6, 98.0, 95.6, 92.8},
        {"claude2/customized-prompt", 94.26, 97.41, 95.37, 91.96},
        {"deepseek/customized-prompt", 98.61, 99.27, 98.49, 97.9},
    };
    return figures;
}

std::vector<ConsistencyRow> check_reference_consistency(double tolerance_pp) {
    std::vector<ConsistencyRow> rows;
    for (const auto& f : reference_extraction_figures()) {
        ConsistencyRow row{f};
        row.computed_f1 = 100.0 * f1_from_pr(f.precision / 100.0, f.recall / 100.0);
        row.computed_accuracy = 100.0 * accuracy_from_pr(f.precision / 100.0, f.recall / 100.0);
        row.accuracy_consistent = std::abs(row.computed_accuracy - f.accuracy) <= tolerance_pp;
        row.f1_deviates = std::abs(row.computed_f1 - f.f1) > tolerance_pp;
        rows.push_back(row);
    }
    return rows;
}

json reference_targets() {
    return json{
        {"reproducible", false},
        {"note", "published figures for the reference system; they depend on the original 68-book corpus, "
                 "commercial model backbones and a four-expert panel, and are reported here for comparison only"},
        {"corpus",
         {{"Obstetrics", {{"books", 20}, {"chapters", 1987}, {"characters", 734095}}},
          {"Gynecology", {{"books", 43}, {"chapters", 4496}, {"characters", 2813900}}},
          {"Fertility", {{"books", 5}, {"chapters", 304}, {"characters", 183363}}},
          {"total", {{"books", 68}, {"chapters", 6787}, {"characters", 3731358}}}}},
        {"entities",
         {{"Ingredient", 3737}, {"Disease", 14059}, {"Symptom", 17031}, {"Treatment", 17031},
          {"ingredient_references", 65847}, {"total", 48406}}},
        {"relations",
         {{"Belong to Category", 48406}, {"Include Section", 294}, {"Include Chapter", 6786},
          {"Belong to Book", 6786}, {"Treatment Plan", 17001}, {"Treat Disease", 16133},
          {"Describe Disease", 16104}, {"Treatment Symptom", 13605}, {"Symptoms Present", 13581},
          {"Ingredient Use", 65846}, {"total", 152754}}},
        {"ratings",
         {{"ingredient_retrieval", {{"mes", 4.378}, {"accuracy", 0.990}, {"ira", 0.057}}},
          {"diagnostic_qa", {{"mes", 4.045}, {"accuracy", 0.988}, {"ira", -0.013}}}}},
    };
}

json to_json(const ExtractionMetrics& m) {
    return json{{"tp", m.tp},           {"fp", m.fp},         {"fn", m.fn},   {"precision", m.precision},
                {"recall", m.recall},   {"f1", m.f1},         {"accuracy", m.accuracy},
                {"degenerate", m.degenerate}};
}

json to_json(const RatingSummary& s) {
    json j{{"items", s.items},
           {"raters", s.raters},
           {"mes", s.mes},
           {"accuracy", s.accuracy},
           {"accuracy_per_item", s.accuracy_per_item}};
    j["ira"] = s.ira ? json(*s.ira) : json(nullptr);
    return j;
}

json to_json(const EvalReport& report) {
    json j = json::object();
    if (report.extraction) j["extraction"] = to_json(*report.extraction);
    if (report.ratings) j["ratings"] = to_json(*report.ratings);
    json rows = json::array();
    for (const auto& r : report.consistency) {
        rows.push_back(json{{"label", r.printed.label},
                            {"printed", {{"precision", r.printed.precision}, {"recall", r.printed.recall},
                                         {"f1", r.printed.f1}, {"accuracy", r.printed.accuracy}}},
                            {"computed_f1", r.computed_f1},
                            {"computed_accuracy", r.computed_accuracy},
                            {"accuracy_consistent", r.accuracy_consistent},
                            {"f1_deviates", r.f1_deviates}});
    }
    j["reference_consistency"] = std::move(rows);
    j["reference_targets"] = reference_targets();
    return j;
}

std::string metrics_line(const ExtractionMetrics& m) {
    return fmt::format("P={:.4f} R={:.4f} F1={:.4f} Acc={:.4f}", m.precision, m.recall, m.f1, m.accuracy);
}

std::string to_text(const EvalReport& report) {
    std::string out;
    if (report.extraction) {
        const auto& m = *report.extraction;
        out += metrics_line(m) + "\n";
        out += fmt::format("tp={} fp={} fn={}{}\n", m.tp, m.fp, m.fn, m.degenerate ? " (degenerate: empty denominator)" : "");
    }
    if (report.ratings) {
        const auto& s = *report.ratings;
        out += fmt::format("MES={:.3f} Acc={:.4f} Acc(per-item)={:.4f} IRA={}\n", s.mes, s.accuracy, s.accuracy_per_item,
                           s.ira ? fmt::format("{:.4f}", *s.ira) : std::string("n/a"));
        out += fmt::format("items={} raters={}\n", s.items, s.raters);
    }
    if (!report.consistency.empty()) {
        out += "reference figures (percent): label | P | R | F1 printed -> recomputed | Acc printed -> recomputed\n";
        for (const auto& r : report.consistency) {
            out += fmt::format("  {} | {:.2f} | {:.2f} | {:.2f} -> {:.2f}{} | {:.2f} -> {:.2f}{}\n", r.printed.label,
                               r.printed.precision, r.printed.recall, r.printed.f1, r.computed_f1,
                               r.f1_deviates ? " [F1 DEVIATES]" : "", r.printed.accuracy, r.computed_accuracy,
                               r.accuracy_consistent ? "" : " [ACC INCONSISTENT]");
        }
    }
    return out;
}

} // namespace tcmkg::eval

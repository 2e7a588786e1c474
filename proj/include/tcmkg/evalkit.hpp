#pragma once

#include "tcmkg/schema.hpp"

#include <nlohmann/json_fwd.hpp>

#include <algorithm>
#include <compare>
#include <cstddef>
#include <istream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tcmkg::eval {

struct ExtractionMetrics {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double accuracy = 0.0;
    /// Some denominator was zero and the corresponding value defaulted to 1.0.
    bool degenerate = false;
};

/// precision = tp/(tp+fp), recall = tp/(tp+fn), f1 = harmonic mean,
/// accuracy = tp/(tp+fp+fn). A zero denominator yields 1.0 and sets degenerate.
ExtractionMetrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

template <typename T>
ExtractionMetrics extraction_metrics(const std::set<T>& predicted, const std::set<T>& gold) {
    std::size_t tp = 0;
    for (const auto& t : predicted) tp += gold.contains(t) ? 1 : 0;
    return metrics_from_counts(tp, predicted.size() - tp, gold.size() - tp);
}

double f1_from_pr(double precision, double recall);

/// Accuracy implied by precision and recall alone: 1 / (1/P + 1/R - 1).
/// Throws std::invalid_argument unless 0 < P, R <= 1.
double accuracy_from_pr(double precision, double recall);

struct CanonicalTriple {
    std::string subject;
    RelationType relation;
    std::string object;
    auto operator<=>(const CanonicalTriple&) const = default;
};

/// A triple tied to the annotation item (e.g. the chunk) it was judged in.
struct AnnotatedTriple {
    std::string item;
    CanonicalTriple triple;
    auto operator<=>(const AnnotatedTriple&) const = default;
};

/// Line-delimited {"item", "subject", "predicate", "object"}; names are
/// normalised and predicates resolved, so comparison is exact on canonical form.
std::set<AnnotatedTriple> read_triples(std::istream& in, std::string_view source_name = "<stream>");
std::set<AnnotatedTriple> parse_triples(const nlohmann::json& array, std::string_view source_name = "<request>");

/// Items x raters grid of Likert scores in 1..5.
class RatingMatrix {
public:
    struct Record {
        std::string item;
        std::string rater;
        int score = 0;
    };

    RatingMatrix() = default;
    /// Rows are items, columns raters, both in first-seen order.
    RatingMatrix(std::vector<std::string> items, std::vector<std::string> raters, std::vector<int> scores);

    /// Requires every (item, rater) cell exactly once.
    static RatingMatrix from_records(std::span<const Record> records, std::string_view source_name = "<records>");
    static RatingMatrix read(std::istream& in, std::string_view source_name = "<stream>");
    static RatingMatrix from_json(const nlohmann::json& array, std::string_view source_name = "<request>");

    std::size_t item_count() const { return items_.size(); }
    std::size_t rater_count() const { return raters_.size(); }
    bool empty() const { return scores_.empty(); }
    int at(std::size_t item, std::size_t rater) const { return scores_.at(item * raters_.size() + rater); }
    const std::vector<std::string>& items() const { return items_; }
    const std::vector<std::string>& raters() const { return raters_; }
    std::span<const int> scores() const { return scores_; }

private:
    std::vector<std::string> items_;
    std::vector<std::string> raters_;
    std::vector<int> scores_;
};

inline constexpr int kCorrectThreshold = 3;

double mean_expert_score(const RatingMatrix& matrix);

enum class AccuracyBasis {
    PerRating,
    /// An item counts as correct when a strict majority of raters score >= threshold.
    PerItemMajority,
};

double response_accuracy(const RatingMatrix& matrix, int threshold = kCorrectThreshold,
                         AccuracyBasis basis = AccuracyBasis::PerRating);

/// Fleiss' kappa. `counts[i][j]` = raters putting item i in category j; each
/// row must sum to `raters`. Returns 1.0 when observed and expected agreement
/// are both 1.
double fleiss_kappa(const std::vector<std::vector<std::size_t>>& counts, std::size_t raters);

/// Binarise at `threshold`, then Fleiss' kappa over {incorrect, correct}.
double inter_rater_agreement(const RatingMatrix& matrix, int threshold = kCorrectThreshold);

struct RatingSummary {
    std::size_t items = 0;
    std::size_t raters = 0;
    double mes = 0.0;
    double accuracy = 0.0;
    double accuracy_per_item = 0.0;
    std::optional<double> ira;
};

RatingSummary summarize_ratings(const RatingMatrix& matrix, int threshold = kCorrectThreshold);

/// Extraction figures as published for the reference system, in percent.
struct ReferenceExtractionFigures {
    std::string label;
    double precision;
    double recall;
    double f1;
    double accuracy;
};

std::span<const ReferenceExtractionFigures> reference_extraction_figures();

struct ConsistencyRow {
    ReferenceExtractionFigures printed;
    double computed_f1 = 0.0;
    double computed_accuracy = 0.0;
    bool accuracy_consistent = false;
    /// Printed F1 is not the harmonic mean of printed P and R.
    bool f1_deviates = false;
};

inline constexpr double kConsistencyTolerancePp = 0.05;

/// Recompute F1 and accuracy from each published (P, R) pair.
std::vector<ConsistencyRow> check_reference_consistency(double tolerance_pp = kConsistencyTolerancePp);

/// Published figures that cannot be reproduced without the original corpus,
/// commercial backbones and expert panel. Reported, never asserted.
nlohmann::json reference_targets();

struct EvalReport {
    std::optional<ExtractionMetrics> extraction;
    std::optional<RatingSummary> ratings;
    std::vector<ConsistencyRow> consistency;
};

nlohmann::json to_json(const ExtractionMetrics& metrics);
nlohmann::json to_json(const RatingSummary& summary);
nlohmann::json to_json(const EvalReport& report);
std::string to_text(const EvalReport& report);

/// "P=0.6667 R=0.6667 F1=0.6667 Acc=0.5000"
std::string metrics_line(const ExtractionMetrics& metrics);

} // namespace tcmkg::eval

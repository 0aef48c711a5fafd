#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "afflabel/catalog.hpp"
#include "afflabel/feature_store.hpp"

namespace afflabel {

struct Counts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  Counts& operator+=(const Counts& other);
  bool operator==(const Counts&) const = default;
};

struct ConfusionCounts {
  std::vector<Counts> per_affordance;  // catalog order
  std::uint64_t scenes = 0;
};

// A rate with a zero denominator is absent, never zero.
struct Rates {
  std::optional<double> tpr;
  std::optional<double> fpr;
};

// Predicted scenes must all appear in `truth`; truth may hold more scenes.
ConfusionCounts confusion_counts(const Assignments& predicted, const LabelTable& truth,
                                 const AffordanceCatalog& catalog);

Rates tpr_fpr(const Counts& counts);

/// Per-affordance and pooled (micro-averaged) rates. An affordance that is
/// neither in the ground truth nor ever predicted contributes only true
/// negatives; it is listed but left out of the pooled counts.
struct EvalReport {
  std::string method;
  std::string extractor;
  std::int64_t vector_size = 0;
  std::vector<std::string> catalog;
  std::vector<Counts> per_affordance;
  std::vector<bool> pooled;  // included in the aggregate
  Counts aggregate;
  std::uint64_t scenes = 0;

  Rates rates(std::size_t affordance) const { return tpr_fpr(per_affordance.at(affordance)); }
  Rates aggregate_rates() const { return tpr_fpr(aggregate); }
};

EvalReport make_report(const ConfusionCounts& counts, const AffordanceCatalog& catalog,
                       std::string method, std::string extractor, std::int64_t vector_size);

nlohmann::ordered_json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);  // recomputes the aggregate

// Aligned-column table: method, extractor, vector size, TPR%, FPR%, followed
// by one line per affordance.
std::string format_report_table(const EvalReport& report);

/// Differences a - b. A delta is absent when either side's rate is.
struct RateDelta {
  std::optional<double> tpr;
  std::optional<double> fpr;
};

struct ReportDiff {
  std::vector<std::string> catalog;
  std::vector<RateDelta> per_affordance;
  RateDelta aggregate;
};

ReportDiff compare_reports(const EvalReport& a, const EvalReport& b);
nlohmann::ordered_json diff_to_json(const ReportDiff& diff);
std::string format_diff_table(const ReportDiff& diff, const EvalReport& a, const EvalReport& b);

}  // namespace afflabel

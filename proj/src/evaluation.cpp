#include "afflabel/evaluation.hpp"

#include <iomanip>
#include <sstream>
#include <unordered_set>

#include "afflabel/errors.hpp"

namespace afflabel {

Counts& Counts::operator+=(const Counts& other) {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  tn += other.tn;
  return *this;
}

ConfusionCounts confusion_counts(const Assignments& predicted, const LabelTable& truth,
                                 const AffordanceCatalog& catalog) {
  if (predicted.scene_ids.size() != predicted.sets.size()) {
    throw DataError("predictions: id/set count mismatch");
  }
  ConfusionCounts out;
  out.per_affordance.resize(catalog.size());
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < predicted.scene_ids.size(); ++i) {
    const std::string& id = predicted.scene_ids[i];
    if (!seen.insert(id).second) throw DataError("predictions list scene \"" + id + "\" twice");
    if (!truth.contains(id)) {
      throw DataError("scene \"" + id + "\" present in predictions but absent from truth");
    }
    const LabelSet& actual = truth.find(id);
    const LabelSet& guess = predicted.sets[i];
    for (std::size_t k = 0; k < catalog.size(); ++k) {
      Counts& c = out.per_affordance[k];
      if (guess.test(k)) {
        actual.test(k) ? ++c.tp : ++c.fp;
      } else {
        actual.test(k) ? ++c.fn : ++c.tn;
      }
    }
  }
  out.scenes = predicted.scene_ids.size();
  return out;
}

Rates tpr_fpr(const Counts& counts) {
  Rates r;
  if (counts.tp + counts.fn > 0) {
    r.tpr = static_cast<double>(counts.tp) / static_cast<double>(counts.tp + counts.fn);
  }
  if (counts.fp + counts.tn > 0) {
    r.fpr = static_cast<double>(counts.fp) / static_cast<double>(counts.fp + counts.tn);
  }
  return r;
}

namespace {

Counts pool(const std::vector<Counts>& per, const std::vector<bool>& pooled) {
  Counts total;
  for (std::size_t k = 0; k < per.size(); ++k) {
    if (pooled[k]) total += per[k];
  }
  return total;
}

nlohmann::json rate_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::ordered_json counts_json(const Counts& c) {
  nlohmann::ordered_json j;
  j["tp"] = c.tp;
  j["fp"] = c.fp;
  j["fn"] = c.fn;
  j["tn"] = c.tn;
  const Rates r = tpr_fpr(c);
  j["tpr"] = rate_json(r.tpr);
  j["fpr"] = rate_json(r.fpr);
  return j;
}

Counts counts_from_json(const nlohmann::json& j) {
  Counts c;
  c.tp = j.at("tp").get<std::uint64_t>();
  c.fp = j.at("fp").get<std::uint64_t>();
  c.fn = j.at("fn").get<std::uint64_t>();
  c.tn = j.at("tn").get<std::uint64_t>();
  return c;
}

std::string percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << 100.0 * *v;
  return out.str();
}

std::string signed_percent(const std::optional<double>& v) {
  if (!v) return "n/a";
  std::ostringstream out;
  out << std::showpos << std::fixed << std::setprecision(2) << 100.0 * *v;
  return out.str();
}

std::optional<double> minus(const std::optional<double>& a, const std::optional<double>& b) {
  if (!a || !b) return std::nullopt;
  return *a - *b;
}

}  // namespace

EvalReport make_report(const ConfusionCounts& counts, const AffordanceCatalog& catalog,
                       std::string method, std::string extractor, std::int64_t vector_size) {
  EvalReport r;
  r.method = std::move(method);
  r.extractor = std::move(extractor);
  r.vector_size = vector_size;
  r.catalog = catalog.labels();
  r.per_affordance = counts.per_affordance;
  r.scenes = counts.scenes;
  r.pooled.resize(r.per_affordance.size());
  for (std::size_t k = 0; k < r.per_affordance.size(); ++k) {
    const Counts& c = r.per_affordance[k];
    r.pooled[k] = c.tp + c.fn > 0 || c.fp > 0;
  }
  r.aggregate = pool(r.per_affordance, r.pooled);
  return r;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["method"] = report.method;
  j["extractor"] = report.extractor;
  j["vector_size"] = report.vector_size;
  j["scenes"] = report.scenes;
  j["averaging"] = "micro";
  j["averaging_note"] =
      "aggregate rates pool counts over affordances present in the truth or in the predictions";
  auto agg = counts_json(report.aggregate);
  const Rates r = report.aggregate_rates();
  agg["tpr_percent"] = r.tpr ? nlohmann::ordered_json(100.0 * *r.tpr) : nlohmann::ordered_json(nullptr);
  agg["fpr_percent"] = r.fpr ? nlohmann::ordered_json(100.0 * *r.fpr) : nlohmann::ordered_json(nullptr);
  j["aggregate"] = agg;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < report.per_affordance.size(); ++k) {
    nlohmann::ordered_json row;
    row["label"] = report.catalog.at(k);
    const nlohmann::ordered_json counts = counts_json(report.per_affordance[k]);
    for (const auto& [key, v] : counts.items()) row[key] = v;
    const Rates rk = report.rates(k);
    row["tpr_percent"] = rk.tpr ? nlohmann::ordered_json(100.0 * *rk.tpr) : nlohmann::ordered_json(nullptr);
    row["fpr_percent"] = rk.fpr ? nlohmann::ordered_json(100.0 * *rk.fpr) : nlohmann::ordered_json(nullptr);
    row["pooled"] = static_cast<bool>(report.pooled[k]);
    rows.push_back(row);
  }
  j["affordances"] = rows;
  return j;
}

EvalReport report_from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.method = j.at("method").get<std::string>();
    r.extractor = j.at("extractor").get<std::string>();
    r.vector_size = j.at("vector_size").get<std::int64_t>();
    r.scenes = j.at("scenes").get<std::uint64_t>();
    for (const auto& row : j.at("affordances")) {
      r.catalog.push_back(row.at("label").get<std::string>());
      r.per_affordance.push_back(counts_from_json(row));
      r.pooled.push_back(row.at("pooled").get<bool>());
      if (r.per_affordance.back().total() != r.scenes) {
        throw DataError("report: counts for \"" + r.catalog.back() + "\" do not sum to scenes");
      }
    }
    r.aggregate = pool(r.per_affordance, r.pooled);
    if (!(r.aggregate == counts_from_json(j.at("aggregate")))) {
      throw DataError("report: stored aggregate does not match per-affordance counts");
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

std::string format_report_table(const EvalReport& report) {
  std::ostringstream out;
  const Rates agg = report.aggregate_rates();
  out << std::left << std::setw(8) << "method" << std::setw(16) << "extractor" << std::right
      << std::setw(12) << "vector size" << std::setw(10) << "TPR(%)" << std::setw(10) << "FPR(%)"
      << '\n';
  out << std::left << std::setw(8) << report.method << std::setw(16) << report.extractor
      << std::right << std::setw(12) << report.vector_size << std::setw(10) << percent(agg.tpr)
      << std::setw(10) << percent(agg.fpr) << '\n';
  out << '\n';
  out << std::left << std::setw(16) << "affordance" << std::right << std::setw(8) << "TP"
      << std::setw(8) << "FP" << std::setw(8) << "FN" << std::setw(8) << "TN" << std::setw(10)
      << "TPR(%)" << std::setw(10) << "FPR(%)" << '\n';
  for (std::size_t k = 0; k < report.per_affordance.size(); ++k) {
    const Counts& c = report.per_affordance[k];
    const Rates r = tpr_fpr(c);
    out << std::left << std::setw(16) << report.catalog[k] << std::right << std::setw(8) << c.tp
        << std::setw(8) << c.fp << std::setw(8) << c.fn << std::setw(8) << c.tn << std::setw(10)
        << percent(r.tpr) << std::setw(10) << percent(r.fpr)
        << (report.pooled[k] ? "" : "  (not pooled)") << '\n';
  }
  out << "aggregate: micro-averaged over pooled affordances, " << report.scenes << " scenes\n";
  return out.str();
}

ReportDiff compare_reports(const EvalReport& a, const EvalReport& b) {
  if (a.catalog != b.catalog) throw DataError("cannot compare reports with different catalogs");
  if (a.scenes != b.scenes) {
    throw DataError("cannot compare reports over different scene counts (" +
                    std::to_string(a.scenes) + " vs " + std::to_string(b.scenes) + ")");
  }
  ReportDiff d;
  d.catalog = a.catalog;
  for (std::size_t k = 0; k < a.catalog.size(); ++k) {
    const Rates ra = a.rates(k), rb = b.rates(k);
    d.per_affordance.push_back({minus(ra.tpr, rb.tpr), minus(ra.fpr, rb.fpr)});
  }
  const Rates ra = a.aggregate_rates(), rb = b.aggregate_rates();
  d.aggregate = {minus(ra.tpr, rb.tpr), minus(ra.fpr, rb.fpr)};
  return d;
}

nlohmann::ordered_json diff_to_json(const ReportDiff& diff) {
  nlohmann::ordered_json j;
  j["sign"] = "a - b";
  j["aggregate"] = {{"tpr", rate_json(diff.aggregate.tpr)}, {"fpr", rate_json(diff.aggregate.fpr)}};
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < diff.catalog.size(); ++k) {
    nlohmann::ordered_json row;
    row["label"] = diff.catalog[k];
    row["tpr"] = rate_json(diff.per_affordance[k].tpr);
    row["fpr"] = rate_json(diff.per_affordance[k].fpr);
    rows.push_back(row);
  }
  j["affordances"] = rows;
  return j;
}

std::string format_diff_table(const ReportDiff& diff, const EvalReport& a, const EvalReport& b) {
  std::ostringstream out;
  out << "delta = a - b   (a: " << a.method << "/" << a.extractor << ", b: " << b.method << "/"
      << b.extractor << ")\n";
  out << std::left << std::setw(16) << "affordance" << std::right << std::setw(12) << "dTPR(pt)"
      << std::setw(12) << "dFPR(pt)" << '\n';
  for (std::size_t k = 0; k < diff.catalog.size(); ++k) {
    out << std::left << std::setw(16) << diff.catalog[k] << std::right << std::setw(12)
        << signed_percent(diff.per_affordance[k].tpr) << std::setw(12)
        << signed_percent(diff.per_affordance[k].fpr) << '\n';
  }
  out << std::left << std::setw(16) << "aggregate" << std::right << std::setw(12)
      << signed_percent(diff.aggregate.tpr) << std::setw(12) << signed_percent(diff.aggregate.fpr)
      << '\n';
  return out.str();
}

}  // namespace afflabel

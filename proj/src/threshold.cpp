#include "afflabel/threshold.hpp"

#include <algorithm>
#include <cmath>

#include "afflabel/errors.hpp"

namespace afflabel {

double threshold_score(double tpr, double fpr) {
  return std::sqrt((1.0 - tpr) * (1.0 - tpr) + fpr * fpr);
}

std::vector<double> ThresholdGrid::values() const {
  if (!(step > 0.0) || !(hi >= lo)) throw DataError("invalid threshold grid");
  const auto k_max = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9));
  std::vector<double> out;
  out.reserve(k_max + 2);
  for (std::size_t k = 0; k <= k_max; ++k) {
    out.push_back(std::min(hi, lo + static_cast<double>(k) * step));
  }
  if (out.back() < hi) out.push_back(hi);
  return out;
}

std::vector<RocPoint> roc_sweep(std::span<const double> labeled, std::span<const double> unlabeled,
                                const ThresholdGrid& grid, Decision decision) {
  if (labeled.empty() || unlabeled.empty()) {
    throw DataError("threshold undefined: empty labeled or unlabeled population");
  }
  std::vector<double> pos(labeled.begin(), labeled.end());
  std::vector<double> neg(unlabeled.begin(), unlabeled.end());
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());

  // Fraction of a sorted population that receives the label at threshold t.
  auto assigned = [decision](const std::vector<double>& sorted, double t) {
    const auto at_most = static_cast<double>(
        std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
    const auto n = static_cast<double>(sorted.size());
    return decision == Decision::kAbove ? (n - at_most) / n : at_most / n;
  };

  std::vector<RocPoint> sweep;
  for (double t : grid.values()) {
    RocPoint p;
    p.threshold = t;
    p.tpr = assigned(pos, t);
    p.fpr = assigned(neg, t);
    p.ts = threshold_score(p.tpr, p.fpr);
    sweep.push_back(p);
  }
  return sweep;
}

ThresholdFit select_threshold(std::span<const RocPoint> sweep) {
  if (sweep.empty()) throw DataError("empty threshold sweep");
  const RocPoint* best = &sweep.front();
  for (const auto& p : sweep) {
    if (p.ts < best->ts || (p.ts == best->ts && p.threshold > best->threshold)) best = &p;
  }
  return ThresholdFit{best->threshold, best->tpr, best->fpr, best->ts, best->tpr <= best->fpr};
}

ThresholdFit fit_threshold(std::span<const double> labeled, std::span<const double> unlabeled,
                           const ThresholdGrid& grid, Decision decision) {
  const auto sweep = roc_sweep(labeled, unlabeled, grid, decision);
  return select_threshold(sweep);
}

std::size_t ThresholdTable::enabled_count() const {
  return static_cast<std::size_t>(
      std::count_if(fits.begin(), fits.end(), [](const auto& f) { return f.has_value(); }));
}

}  // namespace afflabel

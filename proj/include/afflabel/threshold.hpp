#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace afflabel {

// Distance of an ROC point to the ideal corner (TPR = 1, FPR = 0).
double threshold_score(double tpr, double fpr);

// How a score is compared against a threshold when assigning a label.
enum class Decision {
  kAbove,   // label iff score > threshold (projection ratios)
  kAtMost,  // label iff score <= threshold (curvature angles)
};

/// Evenly spaced candidate thresholds lo, lo + step, ... up to hi. The upper
/// end is always included, even when (hi - lo) is not a multiple of step.
struct ThresholdGrid {
  double lo = 0.0;
  double hi = 1.0;
  double step = 0.001;

  std::vector<double> values() const;
};

struct RocPoint {
  double threshold = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double ts = 0.0;
};

/// Optimum of a sweep. Ties in ts go to the larger threshold.
struct ThresholdFit {
  double threshold = 0.0;
  double tpr = 0.0;
  double fpr = 0.0;
  double ts = 0.0;
  // The optimum sits on or below the chance diagonal (TPR <= FPR).
  bool degenerate = false;
};

// One ROC point per grid value. `labeled` are scores of vectors carrying the
// label, `unlabeled` of those that do not; both must be non-empty.
std::vector<RocPoint> roc_sweep(std::span<const double> labeled, std::span<const double> unlabeled,
                                const ThresholdGrid& grid, Decision decision);

ThresholdFit fit_threshold(std::span<const double> labeled, std::span<const double> unlabeled,
                           const ThresholdGrid& grid, Decision decision);

// Picks the optimum from an existing sweep.
ThresholdFit select_threshold(std::span<const RocPoint> sweep);

/// Per-affordance fitted thresholds. An affordance without a fit is disabled
/// and never assigned; `notes` says why.
struct ThresholdTable {
  Decision decision = Decision::kAbove;
  ThresholdGrid grid;
  std::vector<std::optional<ThresholdFit>> fits;
  std::vector<std::string> notes;
  // Full sweep behind each fit; empty for disabled affordances and for
  // tables read back from a model file.
  std::vector<std::vector<RocPoint>> roc;

  bool enabled(std::size_t affordance) const {
    return affordance < fits.size() && fits[affordance].has_value();
  }
  std::size_t enabled_count() const;
};

}  // namespace afflabel

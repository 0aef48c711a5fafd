#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "afflabel/catalog.hpp"
#include "afflabel/feature_store.hpp"
#include "afflabel/threshold.hpp"

namespace afflabel {

/// How many leading left singular vectors form an affordance subspace.
struct DimPolicy {
  enum class Mode { kFixed, kEnergy };

  Mode mode = Mode::kEnergy;
  Eigen::Index fixed_dim = 0;
  double energy = 0.95;  // fraction of sum(sigma^2) to capture
  Eigen::Index cap = 64;

  static DimPolicy fixed(Eigen::Index d, Eigen::Index cap = 64);
  static DimPolicy energy_fraction(double fraction, Eigen::Index cap = 64);

  void validate() const;  // throws DataError
};

struct SubspaceBasis {
  std::size_t affordance = 0;
  Eigen::MatrixXd U;                // D x d, orthonormal columns
  Eigen::VectorXd singular_values;  // full spectrum of the group matrix
  std::vector<std::string> warnings;

  Eigen::Index dim() const { return U.cols(); }
};

/// `group` holds one affordance's learning vectors as columns; the basis is
/// its first d left singular vectors.
/// A requested d above the numerical rank is clamped and a warning recorded.
SubspaceBasis fit_subspace(const FeatureMatrix& group, const DimPolicy& policy,
                           std::size_t affordance = 0);

// |U^T j| / |j|. Throws DataError on a zero vector or a dimension mismatch.
double projection_ratio(const Eigen::Ref<const Eigen::MatrixXd>& basis,
                        const Eigen::Ref<const Eigen::VectorXd>& j);
double projection_ratio(const SubspaceBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& j);

inline constexpr double kDefaultRatioGridStep = 0.001;

/// Fitted subspace projection model. bases[k] is empty for affordances whose
/// group was empty.
struct SpmModel {
  AffordanceCatalog catalog;
  Eigen::Index feature_dim = 0;
  DimPolicy policy;
  std::vector<std::optional<SubspaceBasis>> bases;
  ThresholdTable thresholds;

  bool enabled(std::size_t affordance) const {
    return bases.at(affordance).has_value() && thresholds.enabled(affordance);
  }
};

// Affordances x scenes matrix of projection ratios; NaN rows for affordances
// without a basis.
Eigen::MatrixXd projection_ratios(const std::vector<std::optional<SubspaceBasis>>& bases,
                                  const FeatureMatrix& features, unsigned threads = 1);

/// Sweeps ratio thresholds over [0, 1] on the learning set. Affordances with
/// no labeled or no unlabeled learning vector get no threshold.
ThresholdTable fit_thresholds(const std::vector<std::optional<SubspaceBasis>>& bases,
                              const LabeledSet& learning, double grid_step = kDefaultRatioGridStep,
                              unsigned threads = 1);

SpmModel fit_spm(const LabeledSet& learning, const AffordanceCatalog& catalog,
                 const DimPolicy& policy, double grid_step = kDefaultRatioGridStep,
                 unsigned threads = 1);

// Scene gets label k iff ratio_k > threshold_k.
Assignments label_spm(const SpmModel& model, const FeatureMatrix& features, unsigned threads = 1);

}  // namespace afflabel

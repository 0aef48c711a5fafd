#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "afflabel/catalog.hpp"
#include "afflabel/feature_store.hpp"
#include "afflabel/linalg.hpp"
#include "afflabel/threshold.hpp"

namespace afflabel {

/// The n cluster vectors closest to a query, with and without the query.
struct NeighborhoodPair {
  Eigen::MatrixXd neighbors;  // D x n, ascending distance, ties by cluster column
  Eigen::MatrixXd stacked;    // D x (n + 1): [query | neighbors]
  std::vector<std::size_t> cluster_columns;
  std::vector<double> distances;  // squared L2, same order as neighbors
};

/// Exact nearest neighbours by L2. `exclude` drops one cluster column from
/// consideration (leave-one-out). Throws DataError if fewer than n
/// candidates remain or dimensions disagree.
NeighborhoodPair nearest_neighbors(const Eigen::Ref<const Eigen::MatrixXd>& cluster,
                                   const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t n,
                                   std::optional<std::size_t> exclude = std::nullopt);

struct AngleResult {
  double theta_w = 0.0;  // operational statistic, [0, pi/2]
  // Unweighted diagnostic: arccos of the summed diagonal of U^T U~. Usually
  // outside arccos's domain once two or more directions agree.
  double theta_raw = 0.0;
  bool raw_clamped = false;
  bool weighted_clamped = false;
  double numerator = 0.0;    // sum of singular values of R
  double denominator = 0.0;  // sum_k sigma_k * sigma~_k
  Eigen::Index rank = 0;
  Eigen::Index rank_tilde = 0;
};

/// Weighted subspace-change angle between the column spaces of `with_query`
/// and `without_query`:
///   R = (U S)^T (U~ S~),  theta_w = arccos( sum sv(R) / sum_k s_k s~_k ),
/// with k running over the smaller of the two skinny ranks.
/// Throws NumericalError when either matrix is numerically zero.
AngleResult weighted_angle(const Eigen::Ref<const Eigen::MatrixXd>& with_query,
                           const Eigen::Ref<const Eigen::MatrixXd>& without_query,
                           double rel_tol = kDefaultRankTolerance);

AngleResult curvature_angle(const NeighborhoodPair& pair, double rel_tol = kDefaultRankTolerance);

inline constexpr std::size_t kDefaultNeighborCount = 16;
inline constexpr double kDefaultAngleGridStep = 0.001;

struct CurvatureModel {
  AffordanceCatalog catalog;
  Eigen::Index feature_dim = 0;
  std::size_t n = kDefaultNeighborCount;
  double rel_tol = kDefaultRankTolerance;
  AffordanceGroups clusters;
  ThresholdTable thresholds;

  bool enabled(std::size_t affordance) const { return thresholds.enabled(affordance); }
};

struct AngleScores {
  Eigen::MatrixXd theta_w;  // affordances x scenes; NaN where not computed
  std::size_t clamped = 0;  // weighted arccos arguments outside [-1, 1]
};

// theta_w of every scene against every usable cluster. `leave_one_out` takes
// the cluster column of each member scene out of its own neighbourhood
// search (scenes and cluster source columns must share indexing). A
// non-empty `active` mask restricts scoring to the flagged clusters.
AngleScores curvature_angles(const AffordanceGroups& clusters, const FeatureMatrix& features,
                             std::size_t n, double rel_tol, bool leave_one_out,
                             unsigned threads = 1, const std::vector<bool>& active = {});

/// Angle thresholds on [0, pi/2] from the learning set: members are scored
/// leave-one-out against their own cluster, non-members plainly. Clusters
/// with n or fewer members are disabled.
ThresholdTable fit_mcm_thresholds(const AffordanceGroups& clusters, const LabeledSet& learning,
                                  std::size_t n, double grid_step = kDefaultAngleGridStep,
                                  double rel_tol = kDefaultRankTolerance, unsigned threads = 1);

CurvatureModel fit_mcm(const LabeledSet& learning, const AffordanceCatalog& catalog,
                       std::size_t n = kDefaultNeighborCount,
                       double grid_step = kDefaultAngleGridStep,
                       double rel_tol = kDefaultRankTolerance, unsigned threads = 1);

// Scene gets label k iff theta_w(k, scene) <= threshold_k.
Assignments label_mcm(const CurvatureModel& model, const FeatureMatrix& features,
                      unsigned threads = 1);

}  // namespace afflabel

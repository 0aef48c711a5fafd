#include "afflabel/manifold_curvature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/SVD>

#include "afflabel/errors.hpp"
#include "afflabel/parallel.hpp"

namespace afflabel {

NeighborhoodPair nearest_neighbors(const Eigen::Ref<const Eigen::MatrixXd>& cluster,
                                   const Eigen::Ref<const Eigen::VectorXd>& query, std::size_t n,
                                   std::optional<std::size_t> exclude) {
  if (cluster.rows() != query.size()) {
    throw DataError("dimension mismatch: cluster has " + std::to_string(cluster.rows()) +
                    " rows, query has " + std::to_string(query.size()));
  }
  if (n == 0) throw DataError("neighbour count must be positive");
  const auto cols = static_cast<std::size_t>(cluster.cols());
  const std::size_t available = cols - (exclude && *exclude < cols ? 1 : 0);
  if (available < n) {
    throw DataError("cluster smaller than n: " + std::to_string(available) +
                    " candidates for n = " + std::to_string(n));
  }

  std::vector<std::pair<double, std::size_t>> dist;
  dist.reserve(available);
  for (std::size_t c = 0; c < cols; ++c) {
    if (exclude && c == *exclude) continue;
    dist.emplace_back((cluster.col(static_cast<Eigen::Index>(c)) - query).squaredNorm(), c);
  }
  // Pair ordering sorts by distance, then by column index.
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(n), dist.end());

  NeighborhoodPair out;
  const auto nn = static_cast<Eigen::Index>(n);
  out.neighbors.resize(cluster.rows(), nn);
  out.stacked.resize(cluster.rows(), nn + 1);
  out.stacked.col(0) = query;
  for (std::size_t k = 0; k < n; ++k) {
    const auto idx = static_cast<Eigen::Index>(k);
    out.neighbors.col(idx) = cluster.col(static_cast<Eigen::Index>(dist[k].second));
    out.cluster_columns.push_back(dist[k].second);
    out.distances.push_back(dist[k].first);
  }
  out.stacked.rightCols(nn) = out.neighbors;
  return out;
}

AngleResult weighted_angle(const Eigen::Ref<const Eigen::MatrixXd>& with_query,
                           const Eigen::Ref<const Eigen::MatrixXd>& without_query,
                           double rel_tol) {
  if (with_query.rows() != without_query.rows()) {
    throw DataError("weighted_angle: row count mismatch");
  }
  const SkinnySvd full = skinny_svd(with_query, rel_tol);
  const SkinnySvd local = skinny_svd(without_query, rel_tol);
  if (full.rank() == 0 || local.rank() == 0) {
    throw NumericalError("degenerate (all-zero) neighbourhood");
  }

  AngleResult out;
  out.rank = full.rank();
  out.rank_tilde = local.rank();
  const Eigen::Index common = std::min(out.rank, out.rank_tilde);

  const Eigen::MatrixXd weighted = full.U * full.sigma.asDiagonal();
  const Eigen::MatrixXd weighted_tilde = local.U * local.sigma.asDiagonal();
  const Eigen::MatrixXd r = weighted.transpose() * weighted_tilde;
  const Eigen::VectorXd r_sigma = Eigen::JacobiSVD<Eigen::MatrixXd>(r).singularValues();

  out.numerator = r_sigma.sum();
  out.denominator = full.sigma.head(common).dot(local.sigma.head(common));
  double cosine = out.numerator / out.denominator;
  if (cosine > 1.0 || cosine < -1.0) {
    out.weighted_clamped = true;
    cosine = std::clamp(cosine, -1.0, 1.0);
  }
  out.theta_w = std::acos(cosine);

  const double raw = (full.U.leftCols(common).transpose() * local.U.leftCols(common)).trace();
  out.raw_clamped = raw > 1.0 || raw < -1.0;
  out.theta_raw = std::acos(std::clamp(raw, -1.0, 1.0));
  return out;
}

AngleResult curvature_angle(const NeighborhoodPair& pair, double rel_tol) {
  return weighted_angle(pair.stacked, pair.neighbors, rel_tol);
}

AngleScores curvature_angles(const AffordanceGroups& clusters, const FeatureMatrix& features,
                             std::size_t n, double rel_tol, bool leave_one_out, unsigned threads,
                             const std::vector<bool>& active) {
  const std::size_t n_aff = clusters.size();
  const auto scenes = static_cast<std::size_t>(features.size());
  for (const auto& g : clusters.groups) {
    if (!g.members.empty() && !features.empty() && g.members.dim() != features.dim()) {
      throw DataError("dimension mismatch: clusters hold " + std::to_string(g.members.dim()) +
                      "-dimensional vectors, got " + std::to_string(features.dim()));
    }
  }

  // position of scene c inside cluster k, for leave-one-out
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::vector<std::size_t>> member_slot(n_aff);
  if (leave_one_out) {
    for (std::size_t k = 0; k < n_aff; ++k) {
      member_slot[k].assign(scenes, kNone);
      const auto& src = clusters[k].source_columns;
      for (std::size_t m = 0; m < src.size(); ++m) {
        if (src[m] >= scenes) throw DataError("cluster source column outside the scored set");
        member_slot[k][src[m]] = m;
      }
    }
  }

  AngleScores out;
  out.theta_w = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n_aff),
                                          static_cast<Eigen::Index>(scenes),
                                          std::numeric_limits<double>::quiet_NaN());
  std::vector<std::size_t> clamped(scenes, 0);
  parallel_for(scenes, threads, [&](std::size_t c) {
    const auto col = static_cast<Eigen::Index>(c);
    for (std::size_t k = 0; k < n_aff; ++k) {
      if (!active.empty() && !active.at(k)) continue;
      const auto& members = clusters[k].members;
      const std::size_t needed = n + (leave_one_out ? 1 : 0);
      if (static_cast<std::size_t>(members.size()) < needed) continue;
      std::optional<std::size_t> exclude;
      if (leave_one_out && member_slot[k][c] != kNone) exclude = member_slot[k][c];
      const NeighborhoodPair pair = nearest_neighbors(members.data(), features.column(col), n, exclude);
      const AngleResult angle = curvature_angle(pair, rel_tol);
      out.theta_w(static_cast<Eigen::Index>(k), col) = angle.theta_w;
      if (angle.weighted_clamped) ++clamped[c];
    }
  });
  for (auto v : clamped) out.clamped += v;
  return out;
}

ThresholdTable fit_mcm_thresholds(const AffordanceGroups& clusters, const LabeledSet& learning,
                                  std::size_t n, double grid_step, double rel_tol,
                                  unsigned threads) {
  if (n < 2) throw DataError("neighbour count n must be >= 2");
  if (!(grid_step > 0.0)) throw DataError("grid step must be positive");
  ThresholdTable table;
  table.decision = Decision::kAtMost;
  table.grid = ThresholdGrid{0.0, std::numbers::pi / 2.0, grid_step};
  table.fits.resize(clusters.size());
  table.notes.resize(clusters.size());
  table.roc.resize(clusters.size());

  const AngleScores scores =
      curvature_angles(clusters, learning.features, n, rel_tol, /*leave_one_out=*/true, threads);
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    const auto members = static_cast<std::size_t>(clusters[k].members.size());
    if (members <= n) {
      table.notes[k] = "disabled: cluster has " + std::to_string(members) +
                       " members; leave-one-out needs at least n + 1 = " + std::to_string(n + 1);
      continue;
    }
    std::vector<double> labeled, unlabeled;
    for (std::size_t c = 0; c < learning.size(); ++c) {
      const double theta = scores.theta_w(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
      (learning.labels.at(c).test(k) ? labeled : unlabeled).push_back(theta);
    }
    if (unlabeled.empty()) {
      table.notes[k] = "disabled: no unlabeled learning vectors";
      continue;
    }
    table.roc[k] = roc_sweep(labeled, unlabeled, table.grid, Decision::kAtMost);
    table.fits[k] = select_threshold(table.roc[k]);
    if (table.fits[k]->degenerate) table.notes[k] = "warning: optimum at or below chance (TPR <= FPR)";
  }
  if (scores.clamped > 0) {
    table.notes.push_back("clamped " + std::to_string(scores.clamped) + " arccos arguments");
  }
  return table;
}

CurvatureModel fit_mcm(const LabeledSet& learning, const AffordanceCatalog& catalog, std::size_t n,
                       double grid_step, double rel_tol, unsigned threads) {
  CurvatureModel model;
  model.catalog = catalog;
  model.feature_dim = learning.features.dim();
  model.n = n;
  model.rel_tol = rel_tol;
  model.clusters = group_by_affordance(learning, catalog);
  model.thresholds = fit_mcm_thresholds(model.clusters, learning, n, grid_step, rel_tol, threads);
  return model;
}

Assignments label_mcm(const CurvatureModel& model, const FeatureMatrix& features, unsigned threads) {
  if (!features.empty() && features.dim() != model.feature_dim) {
    throw DataError("dimension mismatch: model expects " + std::to_string(model.feature_dim) +
                    "-dimensional features, got " + std::to_string(features.dim()));
  }
  std::vector<bool> active(model.clusters.size());
  for (std::size_t k = 0; k < active.size(); ++k) active[k] = model.enabled(k);
  const AngleScores scores = curvature_angles(model.clusters, features, model.n, model.rel_tol,
                                              /*leave_one_out=*/false, threads, active);

  Assignments out;
  out.scene_ids = features.scene_ids();
  out.sets.resize(static_cast<std::size_t>(features.size()));
  for (std::size_t k = 0; k < model.clusters.size(); ++k) {
    if (!model.enabled(k)) continue;
    const double th = model.thresholds.fits[k]->threshold;
    for (Eigen::Index c = 0; c < features.size(); ++c) {
      const double theta = scores.theta_w(static_cast<Eigen::Index>(k), c);
      if (theta <= th) out.sets[static_cast<std::size_t>(c)].set(k);
    }
  }
  return out;
}

}  // namespace afflabel

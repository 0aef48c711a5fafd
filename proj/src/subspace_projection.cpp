#include "afflabel/subspace_projection.hpp"

#include <cmath>
#include <limits>

#include "afflabel/errors.hpp"
#include "afflabel/linalg.hpp"
#include "afflabel/parallel.hpp"

namespace afflabel {

DimPolicy DimPolicy::fixed(Eigen::Index d, Eigen::Index cap) {
  DimPolicy p;
  p.mode = Mode::kFixed;
  p.fixed_dim = d;
  p.cap = cap;
  p.validate();
  return p;
}

DimPolicy DimPolicy::energy_fraction(double fraction, Eigen::Index cap) {
  DimPolicy p;
  p.mode = Mode::kEnergy;
  p.energy = fraction;
  p.cap = cap;
  p.validate();
  return p;
}

void DimPolicy::validate() const {
  if (cap < 1) throw DataError("dimension cap must be >= 1");
  if (mode == Mode::kFixed && fixed_dim < 1) throw DataError("fixed subspace dimension must be >= 1");
  if (mode == Mode::kEnergy && !(energy > 0.0 && energy <= 1.0)) {
    throw DataError("energy fraction must lie in (0, 1]");
  }
}

SubspaceBasis fit_subspace(const FeatureMatrix& group, const DimPolicy& policy,
                           std::size_t affordance) {
  policy.validate();
  if (group.empty()) throw DataError("cannot fit a subspace to an empty group");

  // Keep every nonzero singular value for diagnostics; rank uses the default tolerance.
  const SkinnySvd svd = skinny_svd(group.data(), 0.0);
  SubspaceBasis out;
  out.affordance = affordance;
  out.singular_values = svd.sigma;

  Eigen::Index rank = 0;
  while (rank < svd.sigma.size() && svd.sigma(rank) > kDefaultRankTolerance * svd.sigma(0)) ++rank;
  if (rank == 0) throw NumericalError("group matrix is numerically zero");

  Eigen::Index d = 0;
  if (policy.mode == DimPolicy::Mode::kFixed) {
    d = policy.fixed_dim;
  } else {
    const Eigen::ArrayXd energy = svd.sigma.head(rank).array().square();
    const double target = policy.energy * energy.sum();
    double acc = 0.0;
    while (d < rank) {
      acc += energy(d++);
      if (acc >= target) break;
    }
  }
  if (d > policy.cap) {
    out.warnings.push_back("dimension " + std::to_string(d) + " capped at " +
                           std::to_string(policy.cap));
    d = policy.cap;
  }
  if (d > rank) {
    out.warnings.push_back("requested dimension " + std::to_string(d) +
                           " exceeds numerical rank " + std::to_string(rank) + "; clamped");
    d = rank;
  }
  out.U = svd.U.leftCols(d);
  return out;
}

double projection_ratio(const Eigen::Ref<const Eigen::MatrixXd>& basis,
                        const Eigen::Ref<const Eigen::VectorXd>& j) {
  if (basis.rows() != j.size()) {
    throw DataError("dimension mismatch: basis has " + std::to_string(basis.rows()) +
                    " rows, vector has " + std::to_string(j.size()));
  }
  const double norm = j.norm();
  if (!(norm > 0.0)) throw DataError("projection ratio of a zero vector is undefined");
  return (basis.transpose() * j).norm() / norm;
}

double projection_ratio(const SubspaceBasis& basis, const Eigen::Ref<const Eigen::VectorXd>& j) {
  return projection_ratio(basis.U, j);
}

Eigen::MatrixXd projection_ratios(const std::vector<std::optional<SubspaceBasis>>& bases,
                                  const FeatureMatrix& features, unsigned threads) {
  const auto n_aff = static_cast<Eigen::Index>(bases.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(n_aff, features.size(),
                                                  std::numeric_limits<double>::quiet_NaN());
  for (const auto& b : bases) {
    if (b && b->U.rows() != features.dim()) {
      throw DataError("dimension mismatch: model expects " + std::to_string(b->U.rows()) +
                      "-dimensional features, got " + std::to_string(features.dim()));
    }
  }
  parallel_for(static_cast<std::size_t>(features.size()), threads, [&](std::size_t c) {
    const auto col = static_cast<Eigen::Index>(c);
    for (Eigen::Index k = 0; k < n_aff; ++k) {
      if (bases[k]) out(k, col) = projection_ratio(bases[k]->U, features.column(col));
    }
  });
  return out;
}

ThresholdTable fit_thresholds(const std::vector<std::optional<SubspaceBasis>>& bases,
                              const LabeledSet& learning, double grid_step, unsigned threads) {
  if (!(grid_step > 0.0 && grid_step <= 0.5)) throw DataError("grid step must lie in (0, 0.5]");
  ThresholdTable table;
  table.decision = Decision::kAbove;
  table.grid = ThresholdGrid{0.0, 1.0, grid_step};
  table.fits.resize(bases.size());
  table.notes.resize(bases.size());
  table.roc.resize(bases.size());

  const Eigen::MatrixXd ratios = projection_ratios(bases, learning.features, threads);
  for (std::size_t k = 0; k < bases.size(); ++k) {
    if (!bases[k]) {
      table.notes[k] = "disabled: empty affordance group";
      continue;
    }
    std::vector<double> labeled, unlabeled;
    for (std::size_t c = 0; c < learning.size(); ++c) {
      const double r = ratios(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c));
      (learning.labels.at(c).test(k) ? labeled : unlabeled).push_back(r);
    }
    if (labeled.empty() || unlabeled.empty()) {
      table.notes[k] = labeled.empty() ? "disabled: no labeled learning vectors"
                                       : "disabled: no unlabeled learning vectors";
      continue;
    }
    table.roc[k] = roc_sweep(labeled, unlabeled, table.grid, Decision::kAbove);
    table.fits[k] = select_threshold(table.roc[k]);
    if (table.fits[k]->degenerate) table.notes[k] = "warning: optimum at or below chance (TPR <= FPR)";
  }
  return table;
}

SpmModel fit_spm(const LabeledSet& learning, const AffordanceCatalog& catalog,
                 const DimPolicy& policy, double grid_step, unsigned threads) {
  policy.validate();
  SpmModel model;
  model.catalog = catalog;
  model.feature_dim = learning.features.dim();
  model.policy = policy;

  const AffordanceGroups groups = group_by_affordance(learning, catalog);
  model.bases.resize(catalog.size());
  parallel_for(catalog.size(), threads, [&](std::size_t k) {
    if (!groups[k].members.empty()) model.bases[k] = fit_subspace(groups[k].members, policy, k);
  });
  model.thresholds = fit_thresholds(model.bases, learning, grid_step, threads);
  return model;
}

Assignments label_spm(const SpmModel& model, const FeatureMatrix& features, unsigned threads) {
  if (!features.empty() && features.dim() != model.feature_dim) {
    throw DataError("dimension mismatch: model expects " + std::to_string(model.feature_dim) +
                    "-dimensional features, got " + std::to_string(features.dim()));
  }
  const Eigen::MatrixXd ratios = projection_ratios(model.bases, features, threads);
  Assignments out;
  out.scene_ids = features.scene_ids();
  out.sets.resize(static_cast<std::size_t>(features.size()));
  for (std::size_t k = 0; k < model.bases.size(); ++k) {
    if (!model.enabled(k)) continue;
    const double th = model.thresholds.fits[k]->threshold;
    for (Eigen::Index c = 0; c < features.size(); ++c) {
      if (ratios(static_cast<Eigen::Index>(k), c) > th) out.sets[static_cast<std::size_t>(c)].set(k);
    }
  }
  return out;
}

}  // namespace afflabel

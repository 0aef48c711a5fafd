#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "afflabel/catalog.hpp"
#include "afflabel/feature_store.hpp"

namespace afflabel::testkit {

enum class Curvature { kLinear, kQuadraticEmbedding };

/// Synthetic ground truth. Groups are labeled with the first `groups`
/// catalog entries.
struct SynthSpec {
  Eigen::Index dim = 128;                  // ambient dimension D
  std::size_t groups = 5;
  Eigen::Index d_true = 6;                 // intrinsic dimension per group
  std::size_t points_per_group = 400;      // learning block
  std::size_t validation_per_group = 100;  // validation block
  // Linear only: each pair shares `intersection_dim` basis directions, and
  // `overlap_fraction` of each block's points are drawn from those shared
  // directions and carry both labels.
  std::vector<std::pair<std::size_t, std::size_t>> overlap_pairs;
  Eigen::Index intersection_dim = 1;
  double overlap_fraction = 0.0;
  double noise_sigma = 0.0;
  Curvature curvature = Curvature::kLinear;
  // Quadratic embedding x = c + A t + curvature_scale * Q (t (x) t), t in
  // [-1, 1]^d_true. `shared_span_dim` > 0 draws every group's c, A, Q inside
  // one common random subspace of that dimension; 0 gives each group its own.
  double curvature_scale = 1.0;
  double offset_scale = 2.0;
  Eigen::Index shared_span_dim = 0;
  std::uint64_t seed = 0;

  void validate() const;  // throws DataError
};

struct SynthData {
  LabeledSet set;               // learning block first, then validation block
  std::size_t n_learning = 0;   // columns in the learning block
  // Linear: orthonormal D x d_true basis per group. Quadratic: empty.
  std::vector<Eigen::MatrixXd> bases;
};

// Ring of pairs (0,1), (1,2), ..., (groups-1, 0).
std::vector<std::pair<std::size_t, std::size_t>> ring_pairs(std::size_t groups);

SynthData gen_union_of_subspaces(const SynthSpec& spec);
SynthData gen_curved_manifold(const SynthSpec& spec);

// Deterministic helpers built only on the standard engines, so outputs do not
// depend on the standard library's distribution implementations.
double uniform01(std::mt19937_64& rng);
double standard_normal(std::mt19937_64& rng);
Eigen::MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng);

// ---- independent oracles ----
// These do not call into the production scoring paths.

struct ProjectionOracle {
  double via_projection_matrix = 0.0;  // |U U^T j| / |j|
  double via_least_squares = 0.0;      // sqrt(|j|^2 - |min_x |Ux - j||^2) / |j|
};

// Throws DataError for an empty basis or zero vector.
ProjectionOracle oracle_projection(const Eigen::Ref<const Eigen::MatrixXd>& basis,
                                   const Eigen::Ref<const Eigen::VectorXd>& j);

// theta_w from full (untruncated) dense SVDs of both matrices and of R.
double oracle_angle(const Eigen::Ref<const Eigen::MatrixXd>& with_query,
                    const Eigen::Ref<const Eigen::MatrixXd>& without_query);

}  // namespace afflabel::testkit

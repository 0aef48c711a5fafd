#pragma once

#include <Eigen/Dense>

namespace afflabel {

// Default relative rank tolerance: singular values at or below
// kDefaultRankTolerance * sigma_max are treated as zero.
inline constexpr double kDefaultRankTolerance = 1e-10;

/// Truncated ("skinny") SVD: A ~= U * diag(sigma) * Vt with only the
/// singular triplets whose value exceeds rel_tol * sigma_max.
struct SkinnySvd {
  Eigen::MatrixXd U;      // rows(A) x r, orthonormal columns
  Eigen::VectorXd sigma;  // r values, descending
  Eigen::MatrixXd Vt;     // r x cols(A)

  Eigen::Index rank() const { return sigma.size(); }
};

/// Tall inputs are reduced by Householder QR first; the SVD then runs on the
/// small triangular factor. Wide inputs are handled through the transpose.
/// An all-zero input yields rank 0.
SkinnySvd skinny_svd(const Eigen::Ref<const Eigen::MatrixXd>& a,
                     double rel_tol = kDefaultRankTolerance);

}  // namespace afflabel

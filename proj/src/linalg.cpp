#include "afflabel/linalg.hpp"

#include <Eigen/SVD>

namespace afflabel {

namespace {

SkinnySvd truncate(Eigen::MatrixXd U, const Eigen::VectorXd& sigma, Eigen::MatrixXd Vt,
                   double rel_tol) {
  SkinnySvd out;
  const double sigma_max = sigma.size() > 0 ? sigma(0) : 0.0;
  Eigen::Index r = 0;
  if (sigma_max > 0.0) {
    while (r < sigma.size() && sigma(r) > rel_tol * sigma_max) ++r;
  }
  out.U = U.leftCols(r);
  out.sigma = sigma.head(r);
  out.Vt = Vt.topRows(r);
  return out;
}

// rows >= cols
SkinnySvd tall_svd(const Eigen::Ref<const Eigen::MatrixXd>& a, double rel_tol) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  // Q * [U_r; 0] without forming the full m x m Q.
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(m, n);
  u.topRows(n) = svd.matrixU();
  u.applyOnTheLeft(qr.householderQ());
  return truncate(std::move(u), svd.singularValues(), svd.matrixV().transpose(), rel_tol);
}

}  // namespace

SkinnySvd skinny_svd(const Eigen::Ref<const Eigen::MatrixXd>& a, double rel_tol) {
  if (a.rows() == 0 || a.cols() == 0) {
    return SkinnySvd{Eigen::MatrixXd(a.rows(), 0), Eigen::VectorXd(0), Eigen::MatrixXd(0, a.cols())};
  }
  if (a.rows() >= a.cols()) return tall_svd(a, rel_tol);
  // A^T = U' S V'^T  =>  A = V' S U'^T
  SkinnySvd t = tall_svd(a.transpose(), rel_tol);
  return SkinnySvd{t.Vt.transpose(), t.sigma, t.U.transpose()};
}

}  // namespace afflabel

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <random>

#include "afflabel/linalg.hpp"
#include "afflabel/testkit.hpp"

using namespace afflabel;

namespace {

double orthonormality_error(const Eigen::MatrixXd& u) {
  return (u.transpose() * u - Eigen::MatrixXd::Identity(u.cols(), u.cols())).cwiseAbs().maxCoeff();
}

double relative_reconstruction_error(const Eigen::MatrixXd& a, const SkinnySvd& s) {
  return (s.U * s.sigma.asDiagonal() * s.Vt - a).norm() / a.norm();
}

}  // namespace

TEST_CASE("identity") {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(3, 3);
  const SkinnySvd s = skinny_svd(a);
  REQUIRE(s.rank() == 3);
  CHECK((s.sigma - Eigen::VectorXd::Ones(3)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((s.U.cwiseAbs() * s.U.cwiseAbs().transpose() - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(relative_reconstruction_error(a, s) < 1e-14);
}

TEST_CASE("unit outer product has rank one") {
  std::mt19937_64 rng(1);
  const Eigen::VectorXd u = testkit::gaussian_matrix(9, 1, rng).col(0).normalized();
  const Eigen::VectorXd v = testkit::gaussian_matrix(5, 1, rng).col(0).normalized();
  const SkinnySvd s = skinny_svd(u * v.transpose());
  REQUIRE(s.rank() == 1);
  CHECK(s.sigma(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(std::abs(s.U.col(0).dot(u)) - 1.0) < 1e-12);
}

TEST_CASE("random 32 x 8 against the Gram-matrix eigenvalues") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd a = testkit::gaussian_matrix(32, 8, rng);
    const SkinnySvd s = skinny_svd(a);
    REQUIRE(s.rank() == 8);
    CHECK(relative_reconstruction_error(a, s) < 1e-8);
    CHECK(orthonormality_error(s.U) < 1e-10);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a.transpose() * a);
    Eigen::VectorXd expected = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    std::sort(expected.data(), expected.data() + expected.size(), std::greater<>());
    CHECK((s.sigma - expected).cwiseAbs().maxCoeff() < 1e-8);
    for (Eigen::Index k = 1; k < s.rank(); ++k) CHECK(s.sigma(k) <= s.sigma(k - 1));
  }
}

TEST_CASE("wide and rank-deficient inputs") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd wide = testkit::gaussian_matrix(6, 20, rng);
  const SkinnySvd w = skinny_svd(wide);
  CHECK(w.rank() == 6);
  CHECK(w.U.rows() == 6);
  CHECK(w.Vt.cols() == 20);
  CHECK(relative_reconstruction_error(wide, w) < 1e-12);

  const Eigen::MatrixXd low = testkit::gaussian_matrix(30, 3, rng) * testkit::gaussian_matrix(3, 10, rng);
  const SkinnySvd l = skinny_svd(low);
  CHECK(l.rank() == 3);
  CHECK(l.sigma.minCoeff() > 1e-10 * l.sigma.maxCoeff());
  CHECK(relative_reconstruction_error(low, l) < 1e-12);
  CHECK(orthonormality_error(l.U) < 1e-10);

  // A looser tolerance drops the small singular values explicitly.
  Eigen::MatrixXd scaled = testkit::gaussian_matrix(12, 4, rng);
  Eigen::JacobiSVD<Eigen::MatrixXd> ref(scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Eigen::VectorXd sv = ref.singularValues();
  sv(3) = 1e-6 * sv(0);
  scaled = ref.matrixU() * sv.asDiagonal() * ref.matrixV().transpose();
  CHECK(skinny_svd(scaled).rank() == 4);
  CHECK(skinny_svd(scaled, 1e-4).rank() == 3);
}

TEST_CASE("zero matrix has rank zero") {
  const SkinnySvd s = skinny_svd(Eigen::MatrixXd::Zero(5, 3));
  CHECK(s.rank() == 0);
  CHECK(s.U.cols() == 0);
}

#include <doctest.h>

#include <Eigen/QR>

#include <random>

#include "afflabel/errors.hpp"
#include "afflabel/subspace_projection.hpp"
#include "afflabel/testkit.hpp"

using namespace afflabel;

namespace {

FeatureMatrix as_group(const Eigen::MatrixXd& m) {
  std::vector<std::string> ids;
  for (Eigen::Index c = 0; c < m.cols(); ++c) ids.push_back("g" + std::to_string(c));
  return FeatureMatrix(m, ids);
}

Eigen::MatrixXd orthonormal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(testkit::gaussian_matrix(rows, cols, rng));
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

// Largest sine of the principal angles between span(a) and span(b), both orthonormal.
double max_principal_sine(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const Eigen::MatrixXd residual = b - a * (a.transpose() * b);
  return Eigen::JacobiSVD<Eigen::MatrixXd>(residual).singularValues()(0);
}

LabelSet bit(std::size_t k) {
  LabelSet s;
  s.set(k);
  return s;
}

}  // namespace

TEST_CASE("two axis vectors and their sum span a plane") {
  Eigen::MatrixXd m(3, 3);
  m << 1, 0, 1,  //
      0, 1, 1,   //
      0, 0, 0;
  const SubspaceBasis b = fit_subspace(as_group(m), DimPolicy::fixed(2));
  REQUIRE(b.dim() == 2);
  CHECK(b.U.row(2).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(max_principal_sine(Eigen::MatrixXd::Identity(3, 2), b.U) < 1e-14);
  CHECK((b.singular_values.size() == 2 || std::abs(b.singular_values(2)) < 1e-12));
}

TEST_CASE("single vector gives its own direction") {
  Eigen::VectorXd v(4);
  v << 3, -1, 2, 0.5;
  for (const DimPolicy& p : {DimPolicy::fixed(1), DimPolicy::fixed(3), DimPolicy::energy_fraction(0.95),
                             DimPolicy::energy_fraction(1.0)}) {
    const SubspaceBasis b = fit_subspace(as_group(v), p);
    REQUIRE(b.dim() == 1);
    CHECK(std::abs(std::abs(b.U.col(0).dot(v.normalized())) - 1.0) < 1e-14);
  }
  CHECK_FALSE(fit_subspace(as_group(v), DimPolicy::fixed(3)).warnings.empty());
}

TEST_CASE("energy policy recovers a planted rank") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd q = orthonormal(20, 5, rng);
    const Eigen::MatrixXd m = q * testkit::gaussian_matrix(5, 50, rng) + 1e-9 * testkit::gaussian_matrix(20, 50, rng);
    const SubspaceBasis b = fit_subspace(as_group(m), DimPolicy::energy_fraction(0.999));
    CHECK(b.dim() == 5);
    CHECK(max_principal_sine(q, b.U) < 1e-6);
  }
}

TEST_CASE("basis is orthonormal and ordered") {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd m = testkit::gaussian_matrix(40, 30, rng);
  const SubspaceBasis b = fit_subspace(as_group(m), DimPolicy::fixed(12));
  CHECK((b.U.transpose() * b.U - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-10);
  for (Eigen::Index k = 1; k < b.singular_values.size(); ++k) {
    CHECK(b.singular_values(k) <= b.singular_values(k - 1));
  }
  // The first d left singular vectors capture the leading energy.
  const double captured = (b.U.transpose() * m).squaredNorm();
  CHECK(captured == doctest::Approx(b.singular_values.head(12).squaredNorm()).epsilon(1e-10));
}

TEST_CASE("cap and rank clamps are recorded") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd m = testkit::gaussian_matrix(30, 3, rng) * testkit::gaussian_matrix(3, 20, rng);
  const SubspaceBasis clamped = fit_subspace(as_group(m), DimPolicy::fixed(8));
  CHECK(clamped.dim() == 3);
  CHECK(clamped.warnings.size() == 1);

  const Eigen::MatrixXd wide = testkit::gaussian_matrix(30, 40, rng);
  const SubspaceBasis capped = fit_subspace(as_group(wide), DimPolicy::energy_fraction(1.0, 4));
  CHECK(capped.dim() == 4);
  CHECK(capped.warnings.size() == 1);
}

TEST_CASE("policy and input validation") {
  CHECK_THROWS_AS(DimPolicy::fixed(0).validate(), DataError);
  CHECK_THROWS_AS(DimPolicy::energy_fraction(0.0).validate(), DataError);
  CHECK_THROWS_AS(DimPolicy::energy_fraction(1.01).validate(), DataError);
  CHECK_NOTHROW(DimPolicy::energy_fraction(1.0).validate());
  CHECK_THROWS_AS(fit_subspace(FeatureMatrix(Eigen::MatrixXd(4, 0), {}), DimPolicy{}), DataError);
}

TEST_CASE("projection ratio: in span, orthogonal, least-squares oracle") {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd u = orthonormal(64, 4, rng);
  const Eigen::VectorXd inside = u * testkit::gaussian_matrix(4, 1, rng).col(0);
  CHECK(std::abs(projection_ratio(u, inside) - 1.0) < 1e-10);

  Eigen::VectorXd outside = testkit::gaussian_matrix(64, 1, rng).col(0);
  outside -= u * (u.transpose() * outside);
  CHECK(projection_ratio(u, outside) < 1e-10);

  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::MatrixXd basis = orthonormal(64, 4, rng);
    const Eigen::VectorXd j = testkit::gaussian_matrix(64, 1, rng).col(0);
    const auto oracle = testkit::oracle_projection(basis, j);
    CHECK(std::abs(projection_ratio(basis, j) - oracle.via_least_squares) < 1e-8);
    CHECK(std::abs(projection_ratio(basis, j) - oracle.via_projection_matrix) < 1e-10);
  }

  CHECK_THROWS_AS(projection_ratio(u, Eigen::VectorXd::Zero(64)), DataError);
  CHECK_THROWS_AS(projection_ratio(u, Eigen::VectorXd::Ones(63)), DataError);
}

TEST_CASE("projection ratio properties") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index d = 1 + trial % 8;
    const Eigen::MatrixXd u = orthonormal(32, d, rng);
    const Eigen::VectorXd j = testkit::gaussian_matrix(32, 1, rng).col(0);
    const double r = projection_ratio(u, j);
    CHECK(r >= 0.0);
    CHECK(r <= 1.0 + 1e-12);
    for (double c : {1e-6, 0.5, 3.0, 1e6}) CHECK(std::abs(projection_ratio(u, c * j) - r) < 1e-12);
    const Eigen::MatrixXd rotation = orthonormal(d, d, rng);
    CHECK(std::abs(projection_ratio(u * rotation, j) - r) < 1e-10);
  }
}

TEST_CASE("scoring is independent of the thread count") {
  std::mt19937_64 rng(6);
  std::vector<std::optional<SubspaceBasis>> bases(3);
  bases[0] = fit_subspace(as_group(testkit::gaussian_matrix(16, 10, rng)), DimPolicy::fixed(3));
  bases[2] = fit_subspace(as_group(testkit::gaussian_matrix(16, 10, rng)), DimPolicy::fixed(5));
  const FeatureMatrix f = as_group(testkit::gaussian_matrix(16, 300, rng));
  const Eigen::MatrixXd one = projection_ratios(bases, f, 1);
  const Eigen::MatrixXd eight = projection_ratios(bases, f, 8);
  CHECK(one.row(1).array().isNaN().all());
  CHECK(one.row(2) == eight.row(2));
  CHECK(one.row(0) == eight.row(0));
}

TEST_CASE("threshold fitting disables affordances without both populations") {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd m = testkit::gaussian_matrix(8, 6, rng);
  const std::vector<std::string> ids{"a", "b", "c", "d", "e", "f"};
  // Label 0 on every scene, label 1 on some, label 2 nowhere.
  LabelSet both = bit(0);
  both.set(1);
  const LabeledSet set(FeatureMatrix(m, ids), LabelTable(ids, {both, bit(0), both, bit(0), bit(0), bit(0)}));
  const AffordanceCatalog catalog;
  const SpmModel model = fit_spm(set, catalog, DimPolicy::fixed(2));
  CHECK_FALSE(model.enabled(0));
  CHECK(model.thresholds.notes[0].find("no unlabeled") != std::string::npos);
  CHECK(model.enabled(1));
  CHECK_FALSE(model.bases[2].has_value());
  CHECK(model.thresholds.notes[2].find("empty affordance group") != std::string::npos);
  CHECK(model.thresholds.enabled_count() == 1);

  CHECK_THROWS_AS(fit_thresholds(model.bases, set, 0.0), DataError);
  CHECK_THROWS_AS(fit_thresholds(model.bases, set, 0.6), DataError);
}

TEST_CASE("labeling rule and edge cases") {
  const AffordanceCatalog catalog;
  SpmModel model;
  model.catalog = catalog;
  model.feature_dim = 6;
  model.bases.resize(kCatalogSize);
  model.thresholds.fits.resize(kCatalogSize);
  model.thresholds.notes.resize(kCatalogSize);
  const std::size_t grasp = catalog.index_of("grasp");
  const std::size_t cut = catalog.index_of("cut");
  model.bases[grasp] = SubspaceBasis{grasp, Eigen::MatrixXd::Identity(6, 2), Eigen::VectorXd::Ones(2), {}};
  model.bases[cut] = SubspaceBasis{cut, Eigen::MatrixXd::Identity(6, 4).rightCols(2), Eigen::VectorXd::Ones(2), {}};
  model.thresholds.fits[grasp] = ThresholdFit{0.9, 1, 0, 0, false};
  model.thresholds.fits[cut] = ThresholdFit{0.5, 1, 0, 0, false};

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(6, 4);
  x(0, 0) = 1;  // in span(grasp)
  x(1, 0) = 2;
  x(5, 1) = 1;  // orthogonal to both bases
  x(0, 2) = 1;  // grasp ratio 0.9
  x(4, 2) = std::sqrt(1 / 0.81 - 1);
  x(2, 3) = 1;  // in span(cut)
  const FeatureMatrix f(x, {"in", "orth", "edge", "cut"});
  const Assignments a = label_spm(model, f);
  CHECK(a.sets[0] == bit(grasp));
  CHECK(a.sets[1].none());
  CHECK(a.sets[3] == bit(cut));
  const double edge = projection_ratio(model.bases[grasp]->U, f.column(2));
  CHECK(edge == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(a.sets[2].test(grasp) == (edge > 0.9));

  CHECK_THROWS_AS(label_spm(model, FeatureMatrix(Eigen::MatrixXd::Ones(5, 1), {"x"})), DataError);
  CHECK(label_spm(model, FeatureMatrix(Eigen::MatrixXd(6, 0), {})).sets.empty());
}

TEST_CASE("benchmark assignments match direct matrix arithmetic") {
  testkit::SynthSpec spec;
  spec.overlap_pairs = testkit::ring_pairs(5);
  spec.overlap_fraction = 0.1;
  spec.noise_sigma = 0.01;
  spec.points_per_group = 200;
  spec.validation_per_group = 50;
  spec.seed = 8;
  const testkit::SynthData data = testkit::gen_union_of_subspaces(spec);
  const auto [learning, validation] =
      split_dataset(data.set, SplitSpec{data.n_learning, 0, SplitStrategy::kSequential});
  const AffordanceCatalog catalog;
  const SpmModel model = fit_spm(learning, catalog, DimPolicy{});
  CHECK(model.thresholds.enabled_count() == 5);
  const Assignments a = label_spm(model, validation.features, 4);

  std::size_t near_ties = 0;
  for (std::size_t k = 0; k < kCatalogSize; ++k) {
    if (!model.enabled(k)) continue;
    const Eigen::MatrixXd p = model.bases[k]->U * model.bases[k]->U.transpose();
    const double th = model.thresholds.fits[k]->threshold;
    for (Eigen::Index c = 0; c < validation.features.size(); ++c) {
      const Eigen::VectorXd j = validation.features.column(c);
      const double r = (p * j).norm() / j.norm();
      if (std::abs(r - th) < 1e-12) {
        ++near_ties;
        continue;
      }
      CHECK(a.sets[static_cast<std::size_t>(c)].test(k) == (r > th));
    }
  }
  CHECK(near_ties == 0);

  // Lowering a threshold can only add labels.
  SpmModel lowered = model;
  for (auto& fit : lowered.thresholds.fits) {
    if (fit) fit->threshold -= 0.05;
  }
  const Assignments b = label_spm(lowered, validation.features);
  for (std::size_t i = 0; i < a.sets.size(); ++i) CHECK((a.sets[i] & ~b.sets[i]).none());
}

#include <doctest.h>

#include <cstring>

#include "afflabel/errors.hpp"
#include "afflabel/manifold_curvature.hpp"
#include "afflabel/subspace_projection.hpp"
#include "afflabel/testkit.hpp"

using namespace afflabel;

namespace {

bool same_bits(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

testkit::SynthSpec curved_spec() {
  testkit::SynthSpec s;
  s.dim = 64;
  s.groups = 3;
  s.d_true = 3;
  s.points_per_group = 300;
  s.validation_per_group = 70;
  s.curvature = testkit::Curvature::kQuadraticEmbedding;
  s.curvature_scale = 2.0;
  s.noise_sigma = 0.01;
  s.seed = 21;
  return s;
}

}  // namespace

TEST_CASE("uniform and normal helpers") {
  std::mt19937_64 rng(1);
  double sum = 0, sq = 0;
  for (int i = 0; i < 20000; ++i) {
    const double u = testkit::uniform01(rng);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const double z = testkit::standard_normal(rng);
    sum += z;
    sq += z * z;
  }
  CHECK(std::abs(sum / 20000) < 0.05);
  CHECK(std::abs(sq / 20000 - 1.0) < 0.05);
}

TEST_CASE("noise-free single subspace projects fully") {
  testkit::SynthSpec s;
  s.dim = 40;
  s.groups = 1;
  s.d_true = 5;
  s.points_per_group = 50;
  s.validation_per_group = 10;
  const auto data = testkit::gen_union_of_subspaces(s);
  CHECK(data.n_learning == 50);
  CHECK(data.set.size() == 60);
  REQUIRE(data.bases.size() == 1);
  CHECK((data.bases[0].transpose() * data.bases[0] - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-12);
  for (Eigen::Index c = 0; c < 60; ++c) {
    CHECK(projection_ratio(data.bases[0], data.set.features.column(c)) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("independent groups barely project onto each other") {
  testkit::SynthSpec s;
  s.dim = 128;
  s.groups = 5;
  s.d_true = 6;
  s.points_per_group = 40;
  s.validation_per_group = 0;
  const auto data = testkit::gen_union_of_subspaces(s);
  // Noise-free, mutually orthogonal bases: cross ratios vanish.
  for (std::size_t g = 0; g < 5; ++g) {
    for (std::size_t h = 0; h < 5; ++h) {
      if (g == h) continue;
      CHECK((data.bases[g].transpose() * data.bases[h]).norm() < 1e-12);
    }
  }
  for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(data.set.size()); ++c) {
    const std::size_t g = static_cast<std::size_t>(c) / 40;
    for (std::size_t h = 0; h < 5; ++h) {
      const double r = projection_ratio(data.bases[h], data.set.features.column(c));
      if (h == g) {
        CHECK(r > 1.0 - 1e-12);
      } else {
        CHECK(r < 1e-10);
      }
    }
  }

  // With noise the cross ratios sit near the random-direction level sqrt(d / D).
  s.noise_sigma = 0.05;
  const auto noisy = testkit::gen_union_of_subspaces(s);
  std::mt19937_64 rng(3);
  double random_level = 0;
  for (int i = 0; i < 200; ++i) {
    random_level = std::max(random_level, projection_ratio(noisy.bases[0], testkit::gaussian_matrix(128, 1, rng).col(0)));
  }
  for (Eigen::Index c = 40; c < 200; ++c) {
    CHECK(projection_ratio(noisy.bases[0], noisy.set.features.column(c)) < random_level);
  }
}

TEST_CASE("overlap points carry both labels and lie in both subspaces") {
  testkit::SynthSpec s;
  s.dim = 96;
  s.groups = 4;
  s.d_true = 6;
  s.points_per_group = 50;
  s.validation_per_group = 20;
  s.overlap_pairs = testkit::ring_pairs(4);
  s.intersection_dim = 2;
  s.overlap_fraction = 0.2;
  s.noise_sigma = 1e-3;
  s.seed = 4;
  const auto data = testkit::gen_union_of_subspaces(s);
  std::size_t doubles = 0;
  for (std::size_t i = 0; i < data.set.size(); ++i) {
    const LabelSet& l = data.set.labels.at(i);
    if (l.count() != 2) continue;
    ++doubles;
    for (std::size_t g = 0; g < 4; ++g) {
      if (l.test(g)) CHECK(projection_ratio(data.bases[g], data.set.features.column(static_cast<Eigen::Index>(i))) > 0.99);
    }
  }
  CHECK(doubles == 4 * 10 + 4 * 4);
  CHECK(testkit::ring_pairs(2).size() == 1);
  CHECK(testkit::ring_pairs(1).empty());
}

TEST_CASE("curved manifolds: on-manifold queries bend the neighbourhood less") {
  const auto data = testkit::gen_curved_manifold(curved_spec());
  CHECK(data.bases.empty());
  const auto [learning, validation] =
      split_dataset(data.set, SplitSpec{data.n_learning, 0, SplitStrategy::kSequential});
  const AffordanceGroups groups = group_by_affordance(learning, AffordanceCatalog());
  std::mt19937_64 rng(5);
  int wins = 0;
  const int trials = 200;
  for (int t = 0; t < trials; ++t) {
    const auto col = static_cast<Eigen::Index>(t % validation.size());
    const std::size_t g = validation.labels.at(static_cast<std::size_t>(col)).to_ulong() == 1 ? 0
                          : validation.labels.at(static_cast<std::size_t>(col)).test(1) ? 1 : 2;
    const Eigen::VectorXd on = validation.features.column(col);
    Eigen::VectorXd push = testkit::gaussian_matrix(64, 1, rng).col(0);
    push *= 0.3 * on.norm() / push.norm();
    const Eigen::VectorXd off = on + push;
    const Eigen::MatrixXd& cluster = groups[g].members.data();
    const double a = curvature_angle(nearest_neighbors(cluster, on, 16)).theta_w;
    const double b = curvature_angle(nearest_neighbors(cluster, off, 16)).theta_w;
    wins += a < b;
  }
  MESSAGE("on-manifold smaller in " << wins << " of " << trials);
  CHECK(wins >= 190);
}

TEST_CASE("flat limit: both methods label the same way") {
  testkit::SynthSpec s = curved_spec();
  s.curvature_scale = 0.0;
  s.offset_scale = 0.0;
  s.noise_sigma = 0.001;
  const auto data = testkit::gen_curved_manifold(s);
  const auto [learning, validation] =
      split_dataset(data.set, SplitSpec{data.n_learning, 0, SplitStrategy::kSequential});
  const AffordanceCatalog catalog;
  const SpmModel spm = fit_spm(learning, catalog, DimPolicy::fixed(3));
  const CurvatureModel mcm = fit_mcm(learning, catalog, 16, 0.001, kDefaultRankTolerance, 4);
  const Assignments a = label_spm(spm, validation.features);
  const Assignments b = label_mcm(mcm, validation.features, 4);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.sets.size(); ++i) agree += a.sets[i] == b.sets[i];
  const double share = static_cast<double>(agree) / static_cast<double>(a.sets.size());
  MESSAGE("agreement " << share);
  CHECK(share >= 0.99);
}

TEST_CASE("generation is reproducible from the seed") {
  testkit::SynthSpec s;
  s.dim = 32;
  s.groups = 3;
  s.d_true = 4;
  s.points_per_group = 30;
  s.validation_per_group = 10;
  s.overlap_pairs = {{0, 2}};
  s.overlap_fraction = 0.1;
  s.noise_sigma = 0.02;
  s.seed = 77;
  const auto a = testkit::gen_union_of_subspaces(s);
  const auto b = testkit::gen_union_of_subspaces(s);
  CHECK(same_bits(a.set.features.data(), b.set.features.data()));
  CHECK(a.set.labels.sets() == b.set.labels.sets());
  CHECK(a.set.features.scene_ids() == b.set.features.scene_ids());
  s.seed = 78;
  CHECK_FALSE(same_bits(a.set.features.data(), testkit::gen_union_of_subspaces(s).set.features.data()));

  const auto c = testkit::gen_curved_manifold(curved_spec());
  const auto d = testkit::gen_curved_manifold(curved_spec());
  CHECK(same_bits(c.set.features.data(), d.set.features.data()));
}

TEST_CASE("invalid specs are rejected") {
  testkit::SynthSpec s;
  s.dim = 16;
  s.d_true = 16;
  CHECK_THROWS_AS(s.validate(), DataError);
  s.d_true = 4;
  s.groups = 0;
  CHECK_THROWS_AS(s.validate(), DataError);
  s.groups = 16;
  CHECK_THROWS_AS(s.validate(), DataError);
  s.groups = 5;
  CHECK_THROWS_AS(testkit::gen_union_of_subspaces(s), DataError);  // 20 directions in D = 16
  s.groups = 2;
  s.noise_sigma = -1;
  CHECK_THROWS_AS(s.validate(), DataError);
  s.noise_sigma = 0;
  s.overlap_fraction = 0.5;
  CHECK_THROWS_AS(s.validate(), DataError);
  s.overlap_pairs = {{0, 0}};
  CHECK_THROWS_AS(s.validate(), DataError);
  s.overlap_pairs = {{0, 1}};
  s.intersection_dim = 4;
  CHECK_THROWS_AS(s.validate(), DataError);
  s.intersection_dim = 1;
  CHECK_NOTHROW(s.validate());
  s.curvature = testkit::Curvature::kQuadraticEmbedding;
  CHECK_THROWS_AS(s.validate(), DataError);
  s.overlap_pairs.clear();
  s.overlap_fraction = 0;
  s.shared_span_dim = 3;
  CHECK_THROWS_AS(s.validate(), DataError);
  s.shared_span_dim = 0;
  CHECK_THROWS_AS(testkit::gen_union_of_subspaces(s), DataError);
}

TEST_CASE("projection oracle") {
  std::mt19937_64 rng(8);
  Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(4, 2);
  basis(0, 0) = 1;
  basis(1, 1) = 1;
  Eigen::VectorXd j(4);
  j << 3, 0, 4, 0;
  const auto o = testkit::oracle_projection(basis, j);
  CHECK(o.via_projection_matrix == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(o.via_least_squares == doctest::Approx(0.6).epsilon(1e-12));
  CHECK_THROWS_AS(testkit::oracle_projection(basis, Eigen::VectorXd::Zero(4)), DataError);
  CHECK_THROWS_AS(testkit::oracle_projection(Eigen::MatrixXd(4, 0), j), DataError);
}

TEST_CASE("angle oracle") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 1);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 1);
  a(0, 0) = 1;
  b(0, 0) = 5;
  CHECK(testkit::oracle_angle(a, b) == doctest::Approx(0.0).epsilon(1e-12));
  b(0, 0) = 0;
  b(2, 0) = 1;
  CHECK(testkit::oracle_angle(a, b) == doctest::Approx(std::numbers::pi / 2).epsilon(1e-12));
}

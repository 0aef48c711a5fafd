#include <doctest.h>

#include "afflabel/errors.hpp"
#include "afflabel/model_io.hpp"
#include "afflabel/testkit.hpp"
#include "test_support.hpp"

using namespace afflabel;

namespace {

testkit::SynthData small_data(std::uint64_t seed) {
  testkit::SynthSpec s;
  s.dim = 24;
  s.groups = 3;
  s.d_true = 3;
  s.points_per_group = 40;
  s.validation_per_group = 10;
  s.noise_sigma = 0.01;
  s.seed = seed;
  return testkit::gen_union_of_subspaces(s);
}

}  // namespace

TEST_CASE("fnv-1a reference values") {
  test::TempDir dir;
  test::write_bytes(dir / "empty", "");
  test::write_bytes(dir / "a", "a");
  test::write_bytes(dir / "foobar", "foobar");
  CHECK(file_checksum(dir / "empty") == "cbf29ce484222325");
  CHECK(file_checksum(dir / "a") == "af63dc4c8601ec8c");
  CHECK(file_checksum(dir / "foobar") == "85944171f73967e8");
  CHECK_THROWS_AS(file_checksum(dir / "missing"), DataError);
}

TEST_CASE("atomic write replaces contents and leaves no temporary") {
  test::TempDir dir;
  write_file_atomic(dir / "out.txt", "first");
  write_file_atomic(dir / "out.txt", "second");
  CHECK(test::read_bytes(dir / "out.txt") == "second");
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++entries;
  CHECK(entries == 1);
}

TEST_CASE("method names") {
  CHECK(parse_method("spm") == Method::kSpm);
  CHECK(parse_method("mcm") == Method::kMcm);
  CHECK(method_name(Method::kMcm) == "mcm");
  CHECK_THROWS_AS(parse_method("knn"), DataError);
}

TEST_CASE("projection model round trip") {
  test::TempDir dir;
  const auto data = small_data(1);
  const auto [learning, validation] =
      split_dataset(data.set, SplitSpec{data.n_learning, 0, SplitStrategy::kSequential});
  const AffordanceCatalog catalog;
  const SpmModel model = fit_spm(learning, catalog, DimPolicy::energy_fraction(0.95));
  save_spm_model(dir / "m.json", model);
  CHECK(std::filesystem::exists(dir / "m.basis.0.npy"));
  CHECK_FALSE(std::filesystem::exists(dir / "m.basis.3.npy"));
  CHECK(model_method(dir / "m.json") == Method::kSpm);

  const SpmModel back = load_spm_model(dir / "m.json");
  CHECK(back.feature_dim == model.feature_dim);
  for (std::size_t k = 0; k < catalog.size(); ++k) {
    CHECK(back.enabled(k) == model.enabled(k));
    if (!model.bases[k]) continue;
    CHECK(back.bases[k]->U == model.bases[k]->U);
    CHECK(back.thresholds.fits[k]->threshold == model.thresholds.fits[k]->threshold);
  }
  CHECK(label_spm(back, validation.features).sets == label_spm(model, validation.features).sets);

  std::filesystem::remove(dir / "m.basis.1.npy");
  CHECK_THROWS_AS(load_spm_model(dir / "m.json"), DataError);
  test::write_bytes(dir / "bad.json", "{\"method\": \"spm\"}");
  CHECK_THROWS_AS(load_spm_model(dir / "bad.json"), DataError);
  CHECK_THROWS_AS(load_curvature_model(dir / "m.json"), DataError);
}

TEST_CASE("curvature model round trip and stale learning files") {
  test::TempDir dir;
  const auto data = small_data(2);
  const auto [learning_mem, validation] =
      split_dataset(data.set, SplitSpec{data.n_learning, 0, SplitStrategy::kSequential});
  const AffordanceCatalog catalog;
  store_labeled_set(dir / "learn.npy", dir / "learn.jsonl", learning_mem, catalog);
  const LabeledSet learning = load_labeled_set(dir / "learn.npy", dir / "learn.jsonl", catalog);
  const CurvatureModel model = fit_mcm(learning, catalog, 6);
  save_curvature_model(dir / "c.json", model, dir / "learn.npy", dir / "learn.jsonl");
  CHECK(model_method(dir / "c.json") == Method::kMcm);

  const CurvatureModel back = load_curvature_model(dir / "c.json");
  CHECK(back.n == 6);
  for (std::size_t k = 0; k < catalog.size(); ++k) {
    CHECK(back.enabled(k) == model.enabled(k));
    CHECK(back.clusters[k].members.data() == model.clusters[k].members.data());
  }
  CHECK(label_mcm(back, validation.features).sets == label_mcm(model, validation.features).sets);

  std::string labels = test::read_bytes(dir / "learn.jsonl");
  labels.back() = ' ';
  labels.push_back('\n');
  test::write_bytes(dir / "learn.jsonl", labels);
  CHECK_THROWS_WITH_AS(load_curvature_model(dir / "c.json"), doctest::Contains("changed"), DataError);
}

#include "afflabel/feature_store.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "afflabel/errors.hpp"
#include "afflabel/npy.hpp"

namespace afflabel {

namespace {

void check_unique(const std::vector<std::string>& ids, const std::string& what) {
  std::unordered_set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw DataError(what + ": duplicate scene id \"" + id + "\"");
  }
}

// Calls fn(line_number, object) for each non-blank line.
template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.at("id").is_string()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) +
                      ": expected an object with a string \"id\"");
    }
    fn(line_no, obj);
  }
}

LabelSet parse_label_list(const nlohmann::json& obj, const AffordanceCatalog& catalog,
                          const std::string& where) {
  if (!obj.contains("labels") || !obj.at("labels").is_array()) {
    throw DataError(where + ": expected a \"labels\" array");
  }
  LabelSet set;
  for (const auto& v : obj.at("labels")) {
    if (!v.is_string()) throw DataError(where + ": labels must be strings");
    const auto name = v.get<std::string>();
    auto k = catalog.find(name);
    if (!k) throw DataError(where + ": unknown label \"" + name + "\"");
    set.set(*k);
  }
  return set;
}

std::string label_line(const std::string& id, const LabelSet& set,
                       const AffordanceCatalog& catalog) {
  nlohmann::ordered_json obj;
  obj["id"] = id;
  obj["labels"] = catalog.names_of(set);
  return obj.dump();
}

// Unbiased integer in [0, bound) from a 64-bit engine (rejection sampling).
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

// ---- FeatureMatrix ----

FeatureMatrix::FeatureMatrix(Eigen::MatrixXd data, std::vector<std::string> scene_ids)
    : data_(std::move(data)), scene_ids_(std::move(scene_ids)) {
  if (static_cast<Eigen::Index>(scene_ids_.size()) != data_.cols()) {
    throw DataError("id/column count mismatch: " + std::to_string(scene_ids_.size()) +
                    " ids for " + std::to_string(data_.cols()) + " columns");
  }
  if (data_.rows() == 0) throw DataError("feature dimension must be positive");
  check_unique(scene_ids_, "feature matrix");
  for (Eigen::Index c = 0; c < data_.cols(); ++c) {
    if (!data_.col(c).allFinite()) {
      throw DataError("non-finite value in feature vector of scene \"" + scene_ids_[c] + "\"");
    }
    if ((data_.col(c).array() == 0.0).all()) {
      throw DataError("zero feature vector for scene \"" + scene_ids_[c] + "\"");
    }
  }
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> columns) const {
  Eigen::MatrixXd out(data_.rows(), static_cast<Eigen::Index>(columns.size()));
  std::vector<std::string> ids;
  ids.reserve(columns.size());
  for (std::size_t k = 0; k < columns.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = data_.col(static_cast<Eigen::Index>(columns[k]));
    ids.push_back(scene_ids_.at(columns[k]));
  }
  return FeatureMatrix(std::move(out), std::move(ids));
}

// ---- LabelTable ----

LabelTable::LabelTable(std::vector<std::string> scene_ids, std::vector<LabelSet> sets)
    : scene_ids_(std::move(scene_ids)), sets_(std::move(sets)) {
  if (scene_ids_.size() != sets_.size()) throw DataError("label table: id/set count mismatch");
  for (std::size_t i = 0; i < scene_ids_.size(); ++i) {
    if (sets_[i].none()) throw DataError("empty label set for scene \"" + scene_ids_[i] + "\"");
    if (!index_.emplace(scene_ids_[i], i).second) {
      throw DataError("label table: duplicate scene id \"" + scene_ids_[i] + "\"");
    }
  }
}

const LabelSet& LabelTable::find(const std::string& scene_id) const {
  auto it = index_.find(scene_id);
  if (it == index_.end()) throw DataError("scene \"" + scene_id + "\" has no ground truth");
  return sets_[it->second];
}

LabelTable LabelTable::select(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  std::vector<LabelSet> sets;
  for (auto r : rows) {
    ids.push_back(scene_ids_.at(r));
    sets.push_back(sets_.at(r));
  }
  return LabelTable(std::move(ids), std::move(sets));
}

LabeledSet::LabeledSet(FeatureMatrix f, LabelTable l) : features(std::move(f)), labels(std::move(l)) {
  if (features.scene_ids() != labels.scene_ids()) {
    throw DataError("feature rows and label lines are not aligned (scene ids differ)");
  }
}

// ---- files ----

FeatureMatrix load_feature_matrix(const std::filesystem::path& npy_path,
                                  std::vector<std::string> scene_ids) {
  const npy::Array2D array = npy::read(npy_path);
  if (scene_ids.size() != array.rows) {
    throw DataError("id/column count mismatch: " + std::to_string(scene_ids.size()) +
                    " ids for " + std::to_string(array.rows) + " feature rows in " +
                    npy_path.string());
  }
  if (array.cols == 0) throw DataError(npy_path.string() + ": feature dimension is zero");
  // Rows on disk are scenes; columns in memory are scenes.
  Eigen::MatrixXd data(static_cast<Eigen::Index>(array.cols), static_cast<Eigen::Index>(array.rows));
  for (std::size_t r = 0; r < array.rows; ++r) {
    for (std::size_t c = 0; c < array.cols; ++c) {
      data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = array.values[r * array.cols + c];
    }
  }
  return FeatureMatrix(std::move(data), std::move(scene_ids));
}

FeatureMatrix load_feature_matrix(const std::filesystem::path& npy_path,
                                  const std::filesystem::path& ids_jsonl_path) {
  return load_feature_matrix(npy_path, load_scene_ids(ids_jsonl_path));
}

void store_feature_matrix(const std::filesystem::path& npy_path, const FeatureMatrix& features) {
  npy::Array2D array;
  array.rows = static_cast<std::size_t>(features.size());
  array.cols = static_cast<std::size_t>(features.dim());
  array.dtype = npy::DType::kFloat32;
  array.values.resize(array.rows * array.cols);
  for (std::size_t r = 0; r < array.rows; ++r) {
    for (std::size_t c = 0; c < array.cols; ++c) {
      array.values[r * array.cols + c] =
          features.data()(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r));
    }
  }
  npy::write(npy_path, array);
}

std::vector<std::string> load_scene_ids(const std::filesystem::path& jsonl_path) {
  std::vector<std::string> ids;
  for_each_json_line(jsonl_path, [&](std::size_t, const nlohmann::json& obj) {
    ids.push_back(obj.at("id").get<std::string>());
  });
  check_unique(ids, jsonl_path.string());
  return ids;
}

LabelTable load_labels(const std::filesystem::path& jsonl_path, const AffordanceCatalog& catalog) {
  std::vector<std::string> ids;
  std::vector<LabelSet> sets;
  for_each_json_line(jsonl_path, [&](std::size_t line_no, const nlohmann::json& obj) {
    const std::string where = jsonl_path.string() + ":" + std::to_string(line_no);
    ids.push_back(obj.at("id").get<std::string>());
    sets.push_back(parse_label_list(obj, catalog, where));
    if (sets.back().none()) throw DataError(where + ": empty label set for scene \"" + ids.back() + "\"");
  });
  return LabelTable(std::move(ids), std::move(sets));
}

void store_labels(const std::filesystem::path& jsonl_path, const LabelTable& labels,
                  const AffordanceCatalog& catalog) {
  std::ofstream out(jsonl_path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + jsonl_path.string() + " for writing");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out << label_line(labels.scene_ids()[i], labels.sets()[i], catalog) << '\n';
  }
}

Assignments load_assignments(const std::filesystem::path& jsonl_path,
                             const AffordanceCatalog& catalog) {
  Assignments out;
  for_each_json_line(jsonl_path, [&](std::size_t line_no, const nlohmann::json& obj) {
    out.scene_ids.push_back(obj.at("id").get<std::string>());
    out.sets.push_back(
        parse_label_list(obj, catalog, jsonl_path.string() + ":" + std::to_string(line_no)));
  });
  check_unique(out.scene_ids, jsonl_path.string());
  return out;
}

std::string format_assignments(const Assignments& assignments, const AffordanceCatalog& catalog) {
  std::string out;
  for (std::size_t i = 0; i < assignments.scene_ids.size(); ++i) {
    out += label_line(assignments.scene_ids[i], assignments.sets[i], catalog);
    out += '\n';
  }
  return out;
}

void store_assignments(const std::filesystem::path& jsonl_path, const Assignments& assignments,
                       const AffordanceCatalog& catalog) {
  std::ofstream out(jsonl_path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + jsonl_path.string() + " for writing");
  out << format_assignments(assignments, catalog);
}

LabeledSet load_labeled_set(const std::filesystem::path& npy_path,
                            const std::filesystem::path& jsonl_path,
                            const AffordanceCatalog& catalog) {
  LabelTable labels = load_labels(jsonl_path, catalog);
  FeatureMatrix features = load_feature_matrix(npy_path, labels.scene_ids());
  return LabeledSet(std::move(features), std::move(labels));
}

void store_labeled_set(const std::filesystem::path& npy_path,
                       const std::filesystem::path& jsonl_path, const LabeledSet& set,
                       const AffordanceCatalog& catalog) {
  store_feature_matrix(npy_path, set.features);
  store_labels(jsonl_path, set.labels, catalog);
}

// ---- split / group ----

std::vector<std::size_t> split_order(std::size_t n, const SplitSpec& spec) {
  if (spec.n_learning == 0 || spec.n_learning >= n) {
    throw DataError("n_learning must satisfy 0 < n_learning < N (got " +
                    std::to_string(spec.n_learning) + " for N = " + std::to_string(n) + ")");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (spec.strategy == SplitStrategy::kShuffled) {
    std::mt19937_64 rng(spec.seed);
    for (std::size_t i = n - 1; i > 0; --i) {
      std::swap(order[i], order[bounded(rng, i + 1)]);
    }
    const auto mid = order.begin() + static_cast<std::ptrdiff_t>(spec.n_learning);
    std::sort(order.begin(), mid);
    std::sort(mid, order.end());
  }
  return order;
}

std::pair<LabeledSet, LabeledSet> split_dataset(const LabeledSet& set, const SplitSpec& spec) {
  const auto order = split_order(set.size(), spec);
  const std::span<const std::size_t> all(order);
  const auto learning = all.first(spec.n_learning);
  const auto validation = all.subspan(spec.n_learning);
  return {LabeledSet(set.features.select(learning), set.labels.select(learning)),
          LabeledSet(set.features.select(validation), set.labels.select(validation))};
}

AffordanceGroups group_by_affordance(const LabeledSet& learning, const AffordanceCatalog& catalog) {
  AffordanceGroups out;
  out.groups.resize(catalog.size());
  std::vector<std::vector<std::size_t>> columns(catalog.size());
  for (std::size_t c = 0; c < learning.size(); ++c) {
    const LabelSet& set = learning.labels.at(c);
    for (std::size_t k = 0; k < catalog.size(); ++k) {
      if (set.test(k)) columns[k].push_back(c);
    }
  }
  for (std::size_t k = 0; k < catalog.size(); ++k) {
    if (columns[k].empty()) {
      out.groups[k].members = FeatureMatrix(Eigen::MatrixXd(learning.features.dim(), 0), {});
    } else {
      out.groups[k].members = learning.features.select(columns[k]);
    }
    out.groups[k].source_columns = std::move(columns[k]);
  }
  return out;
}

}  // namespace afflabel

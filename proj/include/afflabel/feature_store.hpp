#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "afflabel/catalog.hpp"

namespace afflabel {

/// Column-stacked feature vectors, one column per scene. Entries are finite
/// and no column is all zeros; scene ids are unique.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(Eigen::MatrixXd data, std::vector<std::string> scene_ids);

  Eigen::Index dim() const { return data_.rows(); }
  Eigen::Index size() const { return data_.cols(); }
  bool empty() const { return data_.cols() == 0; }

  const Eigen::MatrixXd& data() const { return data_; }
  const std::vector<std::string>& scene_ids() const { return scene_ids_; }
  auto column(Eigen::Index k) const { return data_.col(k); }

  // Columns in the given order.
  FeatureMatrix select(std::span<const std::size_t> columns) const;

 private:
  Eigen::MatrixXd data_;
  std::vector<std::string> scene_ids_;
};

/// Ground-truth label sets in file order. Every scene carries at least one label.
class LabelTable {
 public:
  LabelTable() = default;
  LabelTable(std::vector<std::string> scene_ids, std::vector<LabelSet> sets);

  std::size_t size() const { return scene_ids_.size(); }
  const std::vector<std::string>& scene_ids() const { return scene_ids_; }
  const std::vector<LabelSet>& sets() const { return sets_; }
  const LabelSet& at(std::size_t row) const { return sets_.at(row); }
  const LabelSet& find(const std::string& scene_id) const;  // throws DataError
  bool contains(const std::string& scene_id) const { return index_.count(scene_id) != 0; }

  LabelTable select(std::span<const std::size_t> rows) const;

 private:
  std::vector<std::string> scene_ids_;
  std::vector<LabelSet> sets_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Features and labels aligned column-for-row.
struct LabeledSet {
  FeatureMatrix features;
  LabelTable labels;

  LabeledSet() = default;
  LabeledSet(FeatureMatrix f, LabelTable l);

  std::size_t size() const { return labels.size(); }
};

/// Predicted label sets; unlike LabelTable an empty set is legal.
struct Assignments {
  std::vector<std::string> scene_ids;
  std::vector<LabelSet> sets;
};

enum class SplitStrategy { kSequential, kShuffled };

struct SplitSpec {
  std::size_t n_learning = 0;
  std::uint64_t seed = 0;
  SplitStrategy strategy = SplitStrategy::kShuffled;
};

struct AffordanceGroup {
  FeatureMatrix members;
  std::vector<std::size_t> source_columns;  // column index in the learning set
};

/// One group per catalog entry; a learning vector with k labels lands in k groups.
struct AffordanceGroups {
  std::vector<AffordanceGroup> groups;

  const AffordanceGroup& operator[](std::size_t affordance) const { return groups.at(affordance); }
  std::size_t size() const { return groups.size(); }
};

// ---- interchange files ----

FeatureMatrix load_feature_matrix(const std::filesystem::path& npy_path,
                                  std::vector<std::string> scene_ids);
FeatureMatrix load_feature_matrix(const std::filesystem::path& npy_path,
                                  const std::filesystem::path& ids_jsonl_path);
void store_feature_matrix(const std::filesystem::path& npy_path, const FeatureMatrix& features);

// Reads only the "id" field of each line.
std::vector<std::string> load_scene_ids(const std::filesystem::path& jsonl_path);

LabelTable load_labels(const std::filesystem::path& jsonl_path, const AffordanceCatalog& catalog);
void store_labels(const std::filesystem::path& jsonl_path, const LabelTable& labels,
                  const AffordanceCatalog& catalog);

Assignments load_assignments(const std::filesystem::path& jsonl_path,
                             const AffordanceCatalog& catalog);
void store_assignments(const std::filesystem::path& jsonl_path, const Assignments& assignments,
                       const AffordanceCatalog& catalog);
std::string format_assignments(const Assignments& assignments, const AffordanceCatalog& catalog);

LabeledSet load_labeled_set(const std::filesystem::path& npy_path,
                            const std::filesystem::path& jsonl_path,
                            const AffordanceCatalog& catalog);
void store_labeled_set(const std::filesystem::path& npy_path,
                       const std::filesystem::path& jsonl_path, const LabeledSet& set,
                       const AffordanceCatalog& catalog);

// ---- learning/validation ----

std::pair<LabeledSet, LabeledSet> split_dataset(const LabeledSet& set, const SplitSpec& spec);

// Column permutation used by split_dataset: first n_learning entries are the
// learning columns, each partition sorted ascending.
std::vector<std::size_t> split_order(std::size_t n, const SplitSpec& spec);

AffordanceGroups group_by_affordance(const LabeledSet& learning, const AffordanceCatalog& catalog);

}  // namespace afflabel

#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "afflabel/manifold_curvature.hpp"
#include "afflabel/subspace_projection.hpp"

namespace afflabel {

enum class Method { kSpm, kMcm };

std::string method_name(Method method);
Method parse_method(const std::string& name);  // throws DataError

// Reads the "method" field of a model file.
Method model_method(const std::filesystem::path& model_path);

/// SPM model: a JSON document plus one NPY (<f8, shape (d, D)) per enabled
/// basis, written next to it as <stem>.basis.<index>.npy.
void save_spm_model(const std::filesystem::path& model_path, const SpmModel& model);
SpmModel load_spm_model(const std::filesystem::path& model_path);

/// MCM model: JSON only. Clusters are rebuilt from the referenced learning
/// files, whose checksums are verified on load.
void save_curvature_model(const std::filesystem::path& model_path, const CurvatureModel& model,
                          const std::filesystem::path& learning_features,
                          const std::filesystem::path& learning_labels);
CurvatureModel load_curvature_model(const std::filesystem::path& model_path);

nlohmann::json threshold_table_to_json(const ThresholdTable& table,
                                       const AffordanceCatalog& catalog);
ThresholdTable threshold_table_from_json(const nlohmann::json& j);

// FNV-1a 64-bit over the file bytes, as 16 hex digits. A change detector,
// not a cryptographic hash.
std::string file_checksum(const std::filesystem::path& path);

// Writes to a sibling temporary file, then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace afflabel

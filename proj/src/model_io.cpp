#include "afflabel/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "afflabel/errors.hpp"
#include "afflabel/npy.hpp"

namespace afflabel {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string method_name(Method method) { return method == Method::kSpm ? "spm" : "mcm"; }

Method parse_method(const std::string& name) {
  if (name == "spm") return Method::kSpm;
  if (name == "mcm") return Method::kMcm;
  throw DataError("unknown method \"" + name + "\" (expected spm or mcm)");
}

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

ordered_json catalog_json(const AffordanceCatalog& catalog) {
  ordered_json j;
  j["labels"] = catalog.labels();
  j["aliases"] = catalog.aliases();
  return j;
}

AffordanceCatalog catalog_from_json(const json& j) {
  return AffordanceCatalog(j.at("labels").get<std::vector<std::string>>(),
                           j.value("aliases", std::map<std::string, std::string>{}));
}

const char* decision_name(Decision d) { return d == Decision::kAbove ? "above" : "at_most"; }

Decision parse_decision(const std::string& s) {
  if (s == "above") return Decision::kAbove;
  if (s == "at_most") return Decision::kAtMost;
  throw DataError("unknown decision rule \"" + s + "\"");
}

ordered_json policy_json(const DimPolicy& p) {
  ordered_json j;
  j["mode"] = p.mode == DimPolicy::Mode::kFixed ? "fixed" : "energy";
  j["fixed_dim"] = p.fixed_dim;
  j["energy"] = p.energy;
  j["cap"] = p.cap;
  return j;
}

DimPolicy policy_from_json(const json& j) {
  DimPolicy p;
  const auto mode = j.at("mode").get<std::string>();
  if (mode != "fixed" && mode != "energy") throw DataError("unknown dimension policy \"" + mode + "\"");
  p.mode = mode == "fixed" ? DimPolicy::Mode::kFixed : DimPolicy::Mode::kEnergy;
  p.fixed_dim = j.at("fixed_dim").get<Eigen::Index>();
  p.energy = j.at("energy").get<double>();
  p.cap = j.at("cap").get<Eigen::Index>();
  p.validate();
  return p;
}

fs::path basis_path(const fs::path& model_path, std::size_t k) {
  return model_path.parent_path() /
         (model_path.stem().string() + ".basis." + std::to_string(k) + ".npy");
}

std::string relative_to_model(const fs::path& target, const fs::path& model_path) {
  const fs::path base = fs::absolute(model_path).parent_path();
  return fs::absolute(target).lexically_normal().lexically_relative(base.lexically_normal()).generic_string();
}

}  // namespace

std::string file_checksum(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + tmp.string() + " for writing");
    out << contents;
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

Method model_method(const fs::path& model_path) {
  const json j = read_json(model_path);
  if (!j.contains("method")) throw DataError(model_path.string() + ": missing \"method\"");
  return parse_method(j.at("method").get<std::string>());
}

nlohmann::json threshold_table_to_json(const ThresholdTable& table,
                                       const AffordanceCatalog& catalog) {
  ordered_json j;
  j["decision"] = decision_name(table.decision);
  j["grid"] = {{"lo", table.grid.lo}, {"hi", table.grid.hi}, {"step", table.grid.step}};
  ordered_json rows = ordered_json::array();
  for (std::size_t k = 0; k < table.fits.size(); ++k) {
    ordered_json row;
    row["label"] = catalog.name(k);
    row["enabled"] = table.fits[k].has_value();
    if (table.fits[k]) {
      row["threshold"] = table.fits[k]->threshold;
      row["tpr"] = table.fits[k]->tpr;
      row["fpr"] = table.fits[k]->fpr;
      row["ts"] = table.fits[k]->ts;
      row["degenerate"] = table.fits[k]->degenerate;
    }
    rows.push_back(row);
  }
  j["affordances"] = rows;
  j["notes"] = table.notes;
  return json::parse(j.dump());
}

ThresholdTable threshold_table_from_json(const nlohmann::json& j) {
  ThresholdTable t;
  t.decision = parse_decision(j.at("decision").get<std::string>());
  t.grid = ThresholdGrid{j.at("grid").at("lo").get<double>(), j.at("grid").at("hi").get<double>(),
                         j.at("grid").at("step").get<double>()};
  for (const auto& row : j.at("affordances")) {
    if (row.at("enabled").get<bool>()) {
      t.fits.push_back(ThresholdFit{row.at("threshold").get<double>(), row.at("tpr").get<double>(),
                                    row.at("fpr").get<double>(), row.at("ts").get<double>(),
                                    row.at("degenerate").get<bool>()});
    } else {
      t.fits.emplace_back(std::nullopt);
    }
  }
  t.notes = j.at("notes").get<std::vector<std::string>>();
  return t;
}

void save_spm_model(const fs::path& model_path, const SpmModel& model) {
  ordered_json j;
  j["format"] = "afflabel-model";
  j["version"] = 1;
  j["method"] = "spm";
  j["catalog"] = catalog_json(model.catalog);
  j["feature_dim"] = model.feature_dim;
  j["policy"] = policy_json(model.policy);
  ordered_json bases = ordered_json::array();
  for (std::size_t k = 0; k < model.bases.size(); ++k) {
    ordered_json b;
    b["label"] = model.catalog.name(k);
    const auto& basis = model.bases[k];
    if (basis) {
      const fs::path path = basis_path(model_path, k);
      npy::Array2D array;
      array.rows = static_cast<std::size_t>(basis->U.cols());
      array.cols = static_cast<std::size_t>(basis->U.rows());
      array.dtype = npy::DType::kFloat64;
      array.values.resize(array.rows * array.cols);
      for (std::size_t r = 0; r < array.rows; ++r) {
        for (std::size_t c = 0; c < array.cols; ++c) {
          array.values[r * array.cols + c] =
              basis->U(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r));
        }
      }
      npy::write(path, array);
      b["dim"] = basis->U.cols();
      b["basis_file"] = path.filename().string();
      b["singular_values"] =
          std::vector<double>(basis->singular_values.data(),
                              basis->singular_values.data() + basis->singular_values.size());
      b["warnings"] = basis->warnings;
    } else {
      b["dim"] = nullptr;
      b["basis_file"] = nullptr;
    }
    bases.push_back(b);
  }
  j["bases"] = bases;
  j["thresholds"] = threshold_table_to_json(model.thresholds, model.catalog);
  write_file_atomic(model_path, j.dump(2) + "\n");
}

SpmModel load_spm_model(const fs::path& model_path) {
  const json j = read_json(model_path);
  try {
    if (j.at("method").get<std::string>() != "spm") throw DataError("not an SPM model");
    SpmModel model;
    model.catalog = catalog_from_json(j.at("catalog"));
    model.feature_dim = j.at("feature_dim").get<Eigen::Index>();
    model.policy = policy_from_json(j.at("policy"));
    const auto& bases = j.at("bases");
    if (bases.size() != model.catalog.size()) throw DataError("basis count differs from catalog size");
    for (std::size_t k = 0; k < bases.size(); ++k) {
      const auto& b = bases[k];
      if (b.at("basis_file").is_null()) {
        model.bases.emplace_back(std::nullopt);
        continue;
      }
      const npy::Array2D array =
          npy::read(model_path.parent_path() / b.at("basis_file").get<std::string>());
      if (static_cast<Eigen::Index>(array.cols) != model.feature_dim ||
          static_cast<Eigen::Index>(array.rows) != b.at("dim").get<Eigen::Index>()) {
        throw DataError("basis file shape disagrees with model metadata");
      }
      SubspaceBasis basis;
      basis.affordance = k;
      basis.U.resize(static_cast<Eigen::Index>(array.cols), static_cast<Eigen::Index>(array.rows));
      for (std::size_t r = 0; r < array.rows; ++r) {
        for (std::size_t c = 0; c < array.cols; ++c) {
          basis.U(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) =
              array.values[r * array.cols + c];
        }
      }
      const auto sv = b.at("singular_values").get<std::vector<double>>();
      basis.singular_values = Eigen::Map<const Eigen::VectorXd>(sv.data(), static_cast<Eigen::Index>(sv.size()));
      basis.warnings = b.at("warnings").get<std::vector<std::string>>();
      model.bases.emplace_back(std::move(basis));
    }
    model.thresholds = threshold_table_from_json(j.at("thresholds"));
    if (model.thresholds.fits.size() != model.catalog.size()) {
      throw DataError("threshold count differs from catalog size");
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError(model_path.string() + ": malformed model: " + e.what());
  }
}

void save_curvature_model(const fs::path& model_path, const CurvatureModel& model,
                          const fs::path& learning_features, const fs::path& learning_labels) {
  ordered_json j;
  j["format"] = "afflabel-model";
  j["version"] = 1;
  j["method"] = "mcm";
  j["catalog"] = catalog_json(model.catalog);
  j["feature_dim"] = model.feature_dim;
  j["n"] = model.n;
  j["rank_tolerance"] = model.rel_tol;
  j["learning"] = {
      {"features", relative_to_model(learning_features, model_path)},
      {"labels", relative_to_model(learning_labels, model_path)},
      {"features_checksum", file_checksum(learning_features)},
      {"labels_checksum", file_checksum(learning_labels)},
  };
  ordered_json sizes = ordered_json::array();
  for (const auto& g : model.clusters.groups) sizes.push_back(g.members.size());
  j["cluster_sizes"] = sizes;
  j["thresholds"] = threshold_table_to_json(model.thresholds, model.catalog);
  write_file_atomic(model_path, j.dump(2) + "\n");
}

CurvatureModel load_curvature_model(const fs::path& model_path) {
  const json j = read_json(model_path);
  try {
    if (j.at("method").get<std::string>() != "mcm") throw DataError("not an MCM model");
    CurvatureModel model;
    model.catalog = catalog_from_json(j.at("catalog"));
    model.feature_dim = j.at("feature_dim").get<Eigen::Index>();
    model.n = j.at("n").get<std::size_t>();
    model.rel_tol = j.at("rank_tolerance").get<double>();
    const auto& learning = j.at("learning");
    const fs::path base = fs::absolute(model_path).parent_path();
    const fs::path features = base / learning.at("features").get<std::string>();
    const fs::path labels = base / learning.at("labels").get<std::string>();
    if (file_checksum(features) != learning.at("features_checksum").get<std::string>() ||
        file_checksum(labels) != learning.at("labels_checksum").get<std::string>()) {
      throw DataError("learning files referenced by " + model_path.string() +
                      " changed since the model was fitted");
    }
    const LabeledSet set = load_labeled_set(features, labels, model.catalog);
    if (set.features.dim() != model.feature_dim) throw DataError("learning feature dimension changed");
    model.clusters = group_by_affordance(set, model.catalog);
    model.thresholds = threshold_table_from_json(j.at("thresholds"));
    if (model.thresholds.fits.size() != model.catalog.size()) {
      throw DataError("threshold count differs from catalog size");
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError(model_path.string() + ": malformed model: " + e.what());
  }
}

}  // namespace afflabel

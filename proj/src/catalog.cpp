#include "afflabel/catalog.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "afflabel/errors.hpp"

namespace afflabel {

namespace {

const std::vector<std::string>& default_labels() {
  static const std::vector<std::string> labels = {
      "grasp", "wrap-grasp", "contain", "liquid contain", "open",
      "dry",   "tip-push",   "display", "illuminate",     "cut",
      "pour",  "roll",       "absorb",  "grip",           "staple",
  };
  return labels;
}

}  // namespace

AffordanceCatalog::AffordanceCatalog() : AffordanceCatalog(default_labels()) {}

AffordanceCatalog::AffordanceCatalog(std::vector<std::string> labels,
                                     std::map<std::string, std::string> aliases)
    : labels_(std::move(labels)), aliases_(std::move(aliases)) {
  if (labels_.size() != kCatalogSize) {
    throw DataError("catalog must have exactly " + std::to_string(kCatalogSize) +
                    " labels, got " + std::to_string(labels_.size()));
  }
  std::set<std::string> seen;
  for (const auto& label : labels_) {
    if (label.empty()) throw DataError("catalog label must not be empty");
    if (!seen.insert(label).second) throw DataError("duplicate catalog label \"" + label + "\"");
  }
  for (const auto& [alias, target] : aliases_) {
    if (!seen.count(target)) {
      throw DataError("alias \"" + alias + "\" targets unknown label \"" + target + "\"");
    }
  }
}

std::map<std::string, std::string> AffordanceCatalog::dataset_aliases() {
  return {
      {"openable", "open"},         {"illumination", "illuminate"},
      {"pourable", "pour"},         {"rollable", "roll"},
      {"stapling", "staple"},       {"containment", "contain"},
      {"liquid-containment", "liquid contain"},
  };
}

AffordanceCatalog AffordanceCatalog::with_aliases(std::map<std::string, std::string> aliases) const {
  return AffordanceCatalog(labels_, std::move(aliases));
}

AffordanceCatalog AffordanceCatalog::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open catalog file " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("catalog " + path + ": " + e.what());
  }
  // Either a bare array of labels, or {"labels": [...], "aliases": {...}}.
  nlohmann::json labels = doc;
  std::map<std::string, std::string> aliases;
  if (doc.is_object()) {
    if (!doc.contains("labels")) throw DataError("catalog " + path + ": missing \"labels\"");
    labels = doc.at("labels");
    if (doc.contains("aliases")) {
      if (!doc.at("aliases").is_object()) {
        throw DataError("catalog " + path + ": \"aliases\" must be an object");
      }
      for (const auto& [k, v] : doc.at("aliases").items()) {
        if (!v.is_string()) throw DataError("catalog " + path + ": alias values must be strings");
        aliases[k] = v.get<std::string>();
      }
    }
  }
  if (!labels.is_array()) throw DataError("catalog " + path + ": expected an array of labels");
  std::vector<std::string> names;
  for (const auto& v : labels) {
    if (!v.is_string()) throw DataError("catalog " + path + ": labels must be strings");
    names.push_back(v.get<std::string>());
  }
  return AffordanceCatalog(std::move(names), std::move(aliases));
}

std::optional<std::size_t> AffordanceCatalog::find(std::string_view name) const {
  for (std::size_t k = 0; k < labels_.size(); ++k) {
    if (labels_[k] == name) return k;
  }
  auto alias = aliases_.find(std::string(name));
  if (alias != aliases_.end()) return find(alias->second);
  return std::nullopt;
}

std::size_t AffordanceCatalog::index_of(std::string_view name) const {
  auto k = find(name);
  if (!k) throw DataError("unknown label \"" + std::string(name) + "\"");
  return *k;
}

std::vector<std::string> AffordanceCatalog::names_of(const LabelSet& set) const {
  std::vector<std::string> names;
  for (std::size_t k = 0; k < labels_.size(); ++k) {
    if (set.test(k)) names.push_back(labels_[k]);
  }
  return names;
}

}  // namespace afflabel

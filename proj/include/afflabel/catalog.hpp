#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace afflabel {

inline constexpr std::size_t kCatalogSize = 15;

// Multi-hot label set; bit k corresponds to catalog position k.
using LabelSet = std::bitset<kCatalogSize>;

/// The fixed affordance vocabulary. Position in the list is the bit position
/// in every LabelSet, so the order is part of the file formats.
///
/// Default order:
///   0 grasp, 1 wrap-grasp, 2 contain, 3 liquid contain, 4 open, 5 dry,
///   6 tip-push, 7 display, 8 illuminate, 9 cut, 10 pour, 11 roll,
///   12 absorb, 13 grip, 14 staple
class AffordanceCatalog {
 public:
  AffordanceCatalog();
  explicit AffordanceCatalog(std::vector<std::string> labels,
                             std::map<std::string, std::string> aliases = {});

  static AffordanceCatalog load(const std::string& path);

  // Dataset spellings mapped to the names used here ("openable" -> "open").
  static std::map<std::string, std::string> dataset_aliases();

  AffordanceCatalog with_aliases(std::map<std::string, std::string> aliases) const;

  std::size_t size() const { return labels_.size(); }
  const std::string& name(std::size_t index) const { return labels_.at(index); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::map<std::string, std::string>& aliases() const { return aliases_; }

  // Resolves a name (or an alias, when aliases are configured).
  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws DataError

  std::vector<std::string> names_of(const LabelSet& set) const;

  bool operator==(const AffordanceCatalog& other) const { return labels_ == other.labels_; }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, std::string> aliases_;
};

}  // namespace afflabel

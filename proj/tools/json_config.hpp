#pragma once

#include <CLI11.hpp>

#include <istream>
#include <string>
#include <vector>

namespace afflabel::cli {

/// CLI11 config reader for JSON files. Top-level keys name options of the
/// main app; a nested object names a subcommand whose options it holds:
///
///   {"threads": 4, "fit": {"method": "mcm", "n": 12}}
///
/// Arrays become multi-value inputs. Options given on the command line win.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                        std::string prefix) const override;
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;
};

}  // namespace afflabel::cli

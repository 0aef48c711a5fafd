#include "json_config.hpp"

#include <iterator>

#include <json.hpp>

namespace afflabel::cli {

namespace {

std::string scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

void collect(const nlohmann::json& object, std::vector<std::string>& parents,
             std::vector<CLI::ConfigItem>& items) {
  for (const auto& [key, value] : object.items()) {
    if (value.is_null()) continue;
    if (value.is_object()) {
      parents.push_back(key);
      collect(value, parents, items);
      parents.pop_back();
      continue;
    }
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = key;
    if (value.is_array()) {
      for (const auto& v : value) {
        if (v.is_structured()) throw CLI::ConfigError("config: nested value under \"" + key + "\"");
        item.inputs.push_back(scalar_text(v));
      }
    } else {
      item.inputs.push_back(scalar_text(value));
    }
    items.push_back(std::move(item));
  }
}

void emit(const CLI::App* app, bool default_also, nlohmann::ordered_json& out) {
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (opt->get_lnames().empty() || name == "help" || name == "config") continue;
    std::vector<std::string> values = opt->results();
    if (values.empty() && default_also && !opt->get_default_str().empty()) {
      values.push_back(opt->get_default_str());
    }
    if (values.empty()) continue;
    if (values.size() == 1) {
      out[name] = values.front();
    } else {
      out[name] = values;
    }
  }
  for (const CLI::App* sub : app->get_subcommands({})) {
    nlohmann::ordered_json child = nlohmann::ordered_json::object();
    emit(sub, default_also, child);
    if (!child.empty()) out[sub->get_name()] = child;
  }
}

}  // namespace

std::string JsonConfig::to_config(const CLI::App* app, bool default_also, bool, std::string) const {
  nlohmann::ordered_json out = nlohmann::ordered_json::object();
  emit(app, default_also, out);
  return out.dump(2) + "\n";
}

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const {
  const std::string text{std::istreambuf_iterator<char>(input), std::istreambuf_iterator<char>()};
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CLI::ConfigError(std::string("config: ") + e.what());
  }
  if (!root.is_object()) throw CLI::ConfigError("config: top level must be a JSON object");
  std::vector<CLI::ConfigItem> items;
  std::vector<std::string> parents;
  collect(root, parents, items);
  return items;
}

}  // namespace afflabel::cli

#include "json_config.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "objconf/analysis.hpp"

namespace objconf::cli {

namespace {

using json = nlohmann::json;

std::string scalar_text(const json& v, const std::string& key) {
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_number(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  throw CLI::ConversionError("config key \"" + key + "\" must hold a scalar or a list of scalars");
}

}  // namespace

std::string JsonConfig::to_config(const CLI::App* app, bool default_also, bool, std::string) const {
  json j = json::object();
  for (const CLI::Option* opt : app->get_options({})) {
    if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
    const std::string& name = opt->get_lnames().front();
    if (opt->get_type_size() == 0) {
      if (opt->count() > 0 || default_also) j[name] = opt->count() > 0;
    } else if (opt->count() == 1) {
      j[name] = opt->results().front();
    } else if (opt->count() > 1) {
      j[name] = opt->results();
    } else if (default_also && !opt->get_default_str().empty()) {
      j[name] = opt->get_default_str();
    }
  }
  return j.dump(2);
}

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const {
  json j;
  try {
    input >> j;
  } catch (const json::parse_error& e) {
    throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");

  std::vector<std::string> active;
  for (const CLI::App* sub : app_->get_subcommands()) active.push_back(sub->get_name());

  std::vector<CLI::ConfigItem> items;
  auto add = [&](const std::string& key, const json& value, std::vector<std::string> parents) {
    if (value.is_null()) return;
    CLI::ConfigItem item;
    item.name = key;
    item.parents = std::move(parents);
    if (value.is_array()) {
      for (const auto& v : value) item.inputs.push_back(scalar_text(v, key));
    } else {
      item.inputs.push_back(scalar_text(value, key));
    }
    items.push_back(std::move(item));
  };
  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) {
      // Sections for subcommands not being run are skipped.
      if (std::find(active.begin(), active.end(), key) == active.end()) continue;
      for (const auto& [k, v] : value.items()) add(k, v, {key});
    } else {
      add(key, value, active);
    }
  }
  return items;
}

}  // namespace objconf::cli

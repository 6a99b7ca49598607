#pragma once

#include <istream>
#include <string>
#include <vector>

#include <CLI11.hpp>

namespace objconf::cli {

// Reads CLI11 config files written as one JSON object keyed by long option
// name without the dashes, {"alpha": 0.5, "mode": "cls"}. Flat keys belong to
// the subcommand being run; a nested object such as {"nms": {...}} targets
// that subcommand explicitly. Options given on the command line take
// precedence.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* app) : app_(app) {}

  std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                        std::string prefix) const override;
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;

 private:
  const CLI::App* app_;
};

}  // namespace objconf::cli

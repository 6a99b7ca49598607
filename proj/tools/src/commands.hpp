#pragma once

// Subcommands of the objconf tool. Each cmd_* takes fully parsed options and
// the streams standing in for stdout/stderr; a path of "-" means those
// streams (or stdin for inputs). Return values are process exit codes.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "objconf/analysis.hpp"
#include "objconf/assignment.hpp"
#include "objconf/fusion.hpp"
#include "objconf/geometry.hpp"
#include "objconf/postprocess.hpp"
#include "objconf/toytrain.hpp"

namespace objconf::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // bad input data, failed check
inline constexpr int kExitUsage = 2;    // bad flags

struct ImageSize {
  int width = 0;
  int height = 0;
};

/// "1216x800" -> {1216, 800}. Throws std::invalid_argument.
ImageSize parse_image_size(const std::string& text);

struct AnchorsOptions {
  std::optional<std::string> config_path;
  ImageSize image_size;
  std::string out = "-";
};

struct AssignOptions {
  std::optional<std::string> anchors_config;
  ImageSize image_size;
  std::string gts;
  std::optional<std::string> image_id;
  AssignerConfig assigner;
  std::string out = "-";
};

struct NmsOptions {
  std::string in = "-";
  std::string out = "-";
  FusionParams fusion;
  NmsParams nms;
};

struct AnalyzeOptions {
  std::optional<std::string> counts;
  std::optional<std::string> before;
  std::optional<std::string> after;
  std::optional<std::string> gts;
  /// Conditions to report; empty means every default condition except the
  /// cls>0.05 total.
  std::vector<Condition> conditions;
  std::optional<std::string> anchors_config;
  std::optional<ImageSize> image_size;
  std::string report = "-";
  std::optional<std::string> stats;
  std::optional<std::string> table;
  std::optional<std::string> scatter;
};

struct GradcheckOptions {
  GradcheckLoss loss = GradcheckLoss::CE;
  std::size_t trials = 100;
  double tol = 1e-6;
  std::uint64_t seed = 0;
};

struct ToytrainOptions {
  ToyTrainConfig train;
  std::uint64_t seed = 0;
  std::size_t n = 256;
  std::size_t d = 4;
  std::string out = "-";
};

int cmd_anchors(const AnchorsOptions& opts, std::ostream& out, std::ostream& err);
int cmd_assign(const AssignOptions& opts, std::ostream& out, std::ostream& err);
int cmd_nms(const NmsOptions& opts, std::ostream& out, std::ostream& err);
int cmd_analyze(const AnalyzeOptions& opts, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradcheckOptions& opts, std::ostream& out, std::ostream& err);
int cmd_toytrain(const ToytrainOptions& opts, std::ostream& out, std::ostream& err);

/// Parses argv (argv[0] is the program name) and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace objconf::cli

#include "commands.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "json_config.hpp"
#include "objconf/error.hpp"
#include "objconf/io.hpp"

namespace objconf::cli {

namespace {

struct CommandError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CommandError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Runs fn(istream&) on a file or stdin, prefixing parse errors with the path.
template <typename Fn>
auto with_input(const std::string& path, Fn&& fn) {
  try {
    if (path == "-") return fn(std::cin);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CommandError("cannot open " + path);
    return fn(in);
  } catch (const ParseError& e) {
    throw CommandError(path + ": " + e.what());
  }
}

template <typename Fn>
void with_output(const std::string& path, std::ostream& stdout_stream, Fn&& fn) {
  if (path == "-") {
    fn(stdout_stream);
    stdout_stream.flush();
    if (!stdout_stream) throw CommandError("failed writing to standard output");
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CommandError("cannot open " + path + " for writing");
  fn(out);
  out.close();
  if (!out) throw CommandError("failed writing " + path);
}

AnchorGridConfig load_anchor_config(const std::optional<std::string>& path) {
  if (!path) return AnchorGridConfig::retinanet();
  try {
    return parse_anchor_config(read_file(*path));
  } catch (const ParseError& e) {
    throw CommandError(*path + ": " + e.what());
  }
}

template <typename Fn>
int guarded(const char* name, std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    err << "objconf " << name << ": error: " << e.what() << '\n';
    return kExitFailure;
  }
}

std::vector<Condition> report_conditions(const std::vector<Condition>& requested) {
  if (!requested.empty()) return requested;
  std::vector<Condition> out;
  for (const auto& c : default_conditions()) {
    if (c != Condition::cls_above(kTotalScoreThreshold)) out.push_back(c);
  }
  return out;
}

std::vector<std::string> image_order(const std::vector<Detection>& a, const std::vector<Detection>& b) {
  std::vector<std::string> ids;
  std::set<std::string> seen;
  for (const auto* list : {&a, &b}) {
    for (const auto& d : *list) {
      if (seen.insert(d.image_id).second) ids.push_back(d.image_id);
    }
  }
  return ids;
}

std::vector<Detection> of_image(const std::vector<Detection>& dets, const std::string& id) {
  std::vector<Detection> out;
  for (const auto& d : dets) {
    if (d.image_id == id) out.push_back(d);
  }
  return out;
}

}  // namespace

ImageSize parse_image_size(const std::string& text) {
  const auto x = text.find('x');
  ImageSize s;
  auto parse_int = [&](std::string_view part, int& v) {
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    return !part.empty() && ec == std::errc{} && ptr == part.data() + part.size() && v > 0;
  };
  const std::string_view all(text);
  if (x == std::string::npos || !parse_int(all.substr(0, x), s.width) ||
      !parse_int(all.substr(x + 1), s.height)) {
    throw std::invalid_argument("image size \"" + text + "\" must look like WIDTHxHEIGHT");
  }
  return s;
}

int cmd_anchors(const AnchorsOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded("anchors", err, [&] {
    const AnchorGridConfig cfg = load_anchor_config(opts.config_path);
    const auto anchors = generate_anchors(cfg, opts.image_size.width, opts.image_size.height);
    with_output(opts.out, out, [&](std::ostream& o) { write_anchors(o, anchors); });
    return kExitOk;
  });
}

int cmd_assign(const AssignOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded("assign", err, [&] {
    const AnchorGridConfig cfg = load_anchor_config(opts.anchors_config);
    const auto anchors = generate_anchors(cfg, opts.image_size.width, opts.image_size.height);
    const auto all_gts = with_input(opts.gts, [](std::istream& in) { return read_ground_truth(in); });

    std::vector<std::string> ids;
    if (opts.image_id) {
      ids.push_back(*opts.image_id);
    } else {
      std::set<std::string> seen;
      for (const auto& g : all_gts) {
        if (seen.insert(g.image_id).second) ids.push_back(g.image_id);
      }
    }
    with_output(opts.out, out, [&](std::ostream& o) {
      for (const auto& id : ids) {
        const auto gts = ground_truth_for(all_gts, id);
        write_assignment(o, id, anchors, gts, assign(anchors, gts, opts.assigner));
      }
    });
    return kExitOk;
  });
}

int cmd_nms(const NmsOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded("nms", err, [&] {
    validate(opts.fusion);
    validate(opts.nms);
    const auto dets = with_input(opts.in, [](std::istream& in) { return read_detections(in); });
    std::vector<Detection> kept;
    for (const auto& group : group_by_image(dets)) {
      const auto survivors = inference_pipeline(group, opts.fusion, opts.nms);
      kept.insert(kept.end(), survivors.begin(), survivors.end());
    }
    with_output(opts.out, out, [&](std::ostream& o) { write_detections(o, kept); });
    return kExitOk;
  });
}

int cmd_analyze(const AnalyzeOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded("analyze", err, [&] {
    std::vector<ImageStats> stats;
    if (opts.counts) {
      stats = with_input(*opts.counts, [](std::istream& in) { return parse_count_table(in); });
    } else {
      if (!opts.before || !opts.after) throw CommandError("need --counts, or both --before and --after");
      const auto before = with_input(*opts.before, [](std::istream& in) { return read_detections(in); });
      const auto after = with_input(*opts.after, [](std::istream& in) { return read_detections(in); });
      std::vector<LabeledGroundTruth> gts;
      if (opts.gts) gts = with_input(*opts.gts, [](std::istream& in) { return read_ground_truth(in); });

      std::vector<Condition> conditions = default_conditions();
      for (const auto& c : opts.conditions) {
        if (std::find(conditions.begin(), conditions.end(), c) == conditions.end()) conditions.push_back(c);
      }
      std::optional<std::vector<Anchor>> anchors;
      if (opts.image_size) {
        anchors = generate_anchors(load_anchor_config(opts.anchors_config), opts.image_size->width,
                                   opts.image_size->height);
      }

      std::vector<ScatterPoint> scatter;
      std::vector<std::string> warnings;
      for (const auto& id : image_order(before, after)) {
        const auto img_before = of_image(before, id);
        const auto img_gts = ground_truth_for(gts, id);
        std::optional<std::span<const Anchor>> anchor_span;
        if (anchors) anchor_span = std::span<const Anchor>(*anchors);
        stats.push_back(compute_image_stats(id, img_before, of_image(after, id), img_gts, anchor_span,
                                            conditions, &warnings));
        const auto points = misalignment_summary(img_before, img_gts);
        scatter.insert(scatter.end(), points.begin(), points.end());
      }
      for (const auto& w : warnings) err << "objconf analyze: warning: " << w << '\n';
      if (opts.scatter) {
        with_output(*opts.scatter, out, [&](std::ostream& o) { write_scatter_csv(o, scatter); });
      }
    }

    for (const auto& s : stats) {
      for (const auto& issue : consistency_issues(s)) err << "objconf analyze: warning: " << issue << '\n';
    }

    std::vector<ProportionReport> reports;
    for (const auto& c : report_conditions(opts.conditions)) {
      reports.push_back(proportions_from_counts(stats, c));
      for (const auto& r : reports.back().rejected) {
        err << "objconf analyze: warning: " << to_string(c) << ": skipped " << r.image_id << ": "
            << r.reason << '\n';
      }
    }
    if (opts.stats) with_output(*opts.stats, out, [&](std::ostream& o) { emit_count_table(o, stats); });
    if (opts.table) with_output(*opts.table, out, [&](std::ostream& o) { emit_table_layout(o, stats); });
    with_output(opts.report, out, [&](std::ostream& o) { write_proportion_reports(o, reports); });
    return kExitOk;
  });
}

int cmd_gradcheck(const GradcheckOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded("gradcheck", err, [&] {
    const GradcheckReport r = finite_diff_check(opts.loss, opts.trials, opts.seed);
    const bool pass = r.max_rel_error < opts.tol;
    out << "trials=" << r.trials << " skipped=" << r.skipped
        << " max_rel_error=" << format_number(r.max_rel_error) << " tol=" << format_number(opts.tol)
        << (pass ? " ok" : " FAILED") << '\n';
    return pass ? kExitOk : kExitFailure;
  });
}

int cmd_toytrain(const ToytrainOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded("toytrain", err, [&] {
    const ToyDataset data = make_dataset(opts.n, opts.d, opts.seed);
    const TrainTrace trace = train(data, opts.train);
    with_output(opts.out, out, [&](std::ostream& o) { write_trace_csv(o, trace); });
    return kExitOk;
  });
}

namespace {

const std::map<std::string, FusionMode> kModes{
    {"product", FusionMode::Product}, {"multiply", FusionMode::PlainMultiply}, {"cls", FusionMode::ClsOnly}};
const std::map<std::string, RegressionLoss> kRegressionLosses{
    {"l1", RegressionLoss::L1}, {"l2", RegressionLoss::L2}, {"ce", RegressionLoss::CE}};
const std::map<std::string, ToyInit> kInits{{"zeros", ToyInit::Zeros},
                                            {"saturated", ToyInit::SaturatedPositive},
                                            {"saturated-neg", ToyInit::SaturatedNegative}};
const std::map<std::string, GradcheckLoss> kGradcheckLosses{
    {"l1", GradcheckLoss::L1},         {"l2", GradcheckLoss::L2},         {"ce", GradcheckLoss::CE},
    {"focal", GradcheckLoss::Focal},   {"gfocal", GradcheckLoss::GFocal}, {"wce", GradcheckLoss::WeightedCE}};

// A named-choice option that writes the mapped value into `target`.
template <typename T>
CLI::Option* add_choice(CLI::App* sub, const std::string& flag, T& target,
                        const std::map<std::string, T>& choices, const std::string& help) {
  std::vector<std::string> names;
  for (const auto& [name, value] : choices) names.push_back(name);
  return sub->add_option(flag, help)
      ->check(CLI::IsMember(names))
      ->each([&target, &choices](const std::string& v) { target = choices.at(v); });
}

CLI::App* subcommand(CLI::App& app, const std::string& name, const std::string& help) {
  CLI::App* sub = app.add_subcommand(name, help);
  // Lets the top-level --config follow the subcommand name.
  sub->fallthrough();
  return sub;
}

const CLI::Validator kImageSize(
    [](std::string& text) {
      try {
        parse_image_size(text);
      } catch (const std::invalid_argument& e) {
        return std::string(e.what());
      }
      return std::string();
    },
    "WxH");

const CLI::Validator kConditionText(
    [](std::string& text) {
      try {
        parse_condition(text);
      } catch (const std::invalid_argument& e) {
        return std::string(e.what());
      }
      return std::string();
    },
    "COND");

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Anchors, label assignment, score-fused NMS, misalignment statistics and loss checks."};
  app.name("objconf");
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.set_config("--config", "", "JSON object of flag values for the subcommand; explicit flags win");
  app.allow_config_extras(CLI::config_extras_mode::error);

  AnchorsOptions anchors;
  std::string anchors_size;
  {
    CLI::App* sub = subcommand(app, "anchors", "Write the anchor grid for an image size as JSON lines");
    sub->add_option("--anchors-config", anchors.config_path, "Anchor grid JSON (default: RetinaNet)")
        ->check(CLI::ExistingFile);
    sub->add_option("--image-size", anchors_size, "Image size as WIDTHxHEIGHT")->required()->check(kImageSize);
    sub->add_option("-o,--out", anchors.out, "Output path")->capture_default_str();
    sub->final_callback([&] { anchors.image_size = parse_image_size(anchors_size); });
  }

  AssignOptions assign_opts;
  std::string assign_size;
  bool no_force = false;
  {
    CLI::App* sub = subcommand(app, "assign", "Label anchors against ground truth and emit targets");
    sub->add_option("--anchors-config", assign_opts.anchors_config, "Anchor grid JSON (default: RetinaNet)")
        ->check(CLI::ExistingFile);
    sub->add_option("--image-size", assign_size, "Image size as WIDTHxHEIGHT")->required()->check(kImageSize);
    sub->add_option("--gts", assign_opts.gts, "Ground-truth JSON lines")->required()->check(CLI::ExistingFile);
    sub->add_option("--image-id", assign_opts.image_id, "Only this image (default: every image in --gts)");
    sub->add_option("--pos-iou", assign_opts.assigner.pos_iou, "Positive IoU threshold")->capture_default_str();
    sub->add_option("--neg-iou", assign_opts.assigner.neg_iou, "Negative IoU threshold")->capture_default_str();
    sub->add_option("--num-classes", assign_opts.assigner.num_classes, "Number of classes")->capture_default_str();
    sub->add_flag("--no-force-match", no_force, "Do not promote each ground truth's best anchor");
    sub->add_option("-o,--out", assign_opts.out, "Output path")->capture_default_str();
    sub->final_callback([&] {
      assign_opts.image_size = parse_image_size(assign_size);
      assign_opts.assigner.force_match = !no_force;
    });
  }

  NmsOptions nms_opts;
  std::optional<double> obj_gate;
  std::optional<std::size_t> topk;
  {
    CLI::App* sub = subcommand(app, "nms", "Fuse scores and run per-class NMS over detection dumps");
    sub->add_option("-i,--in", nms_opts.in, "Detection JSON lines")->capture_default_str();
    sub->add_option("-o,--out", nms_opts.out, "Output path")->capture_default_str();
    sub->add_option("--alpha", nms_opts.fusion.alpha, "Object-confidence exponent in the product")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    add_choice(sub, "--mode", nms_opts.fusion.mode, kModes, "Score that drives NMS")->default_str("product");
    sub->add_option("--iou-thresh", nms_opts.nms.iou_threshold, "Suppress above this IoU")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    sub->add_option("--score-thresh", nms_opts.nms.score_threshold, "Drop detections at or below this score")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    sub->add_option("--obj-gate", obj_gate, "Keep only detections with obj_score above this");
    sub->add_option("--topk", topk, "Cap on detections per image entering NMS")->check(CLI::PositiveNumber);
    sub->final_callback([&] {
      nms_opts.fusion.obj_gate = obj_gate;
      nms_opts.nms.top_k = topk;
    });
  }

  AnalyzeOptions analyze_opts;
  std::vector<std::string> condition_text;
  std::optional<std::string> analyze_size;
  {
    CLI::App* sub = subcommand(app, "analyze", "Box-count statistics and proportion shifts across NMS");
    auto* counts = sub->add_option("--counts", analyze_opts.counts, "Count table CSV")->check(CLI::ExistingFile);
    auto* before = sub->add_option("--before", analyze_opts.before, "Detections before NMS (JSON lines)")
                       ->check(CLI::ExistingFile);
    auto* after = sub->add_option("--after", analyze_opts.after, "Detections after NMS (JSON lines)")
                      ->check(CLI::ExistingFile);
    auto* gts = sub->add_option("--gts", analyze_opts.gts, "Ground truth (JSON lines)")->check(CLI::ExistingFile);
    counts->excludes(before)->excludes(after)->excludes(gts);
    before->needs(after);
    after->needs(before);
    sub->add_option("--conditions", condition_text, "Conditions to report, e.g. iou>0.5,cls>0.5")
        ->delimiter(',')
        ->check(kConditionText);
    auto* cfg = sub->add_option("--anchors-config", analyze_opts.anchors_config, "Anchor grid JSON for positive counts")
                    ->check(CLI::ExistingFile);
    auto* size = sub->add_option("--image-size", analyze_size, "Image size for positive anchor counts")
                     ->check(kImageSize);
    cfg->needs(size);
    size->excludes(counts);
    sub->add_option("--report", analyze_opts.report, "Proportion report JSON path")->capture_default_str();
    sub->add_option("--stats", analyze_opts.stats, "Count table CSV output");
    sub->add_option("--table", analyze_opts.table, "Wide per-image table CSV output");
    sub->add_option("--scatter", analyze_opts.scatter, "(max IoU, cls) pairs of before-NMS boxes, CSV")
        ->excludes(counts);
    sub->final_callback([&] {
      if (!analyze_opts.counts && !analyze_opts.before) {
        throw CLI::RequiredError("--counts or --before/--after");
      }
      for (const auto& t : condition_text) analyze_opts.conditions.push_back(parse_condition(t));
      if (analyze_size) analyze_opts.image_size = parse_image_size(*analyze_size);
    });
  }

  GradcheckOptions grad_opts;
  {
    CLI::App* sub = subcommand(app, "gradcheck", "Compare analytic gradients with finite differences");
    add_choice(sub, "--loss", grad_opts.loss, kGradcheckLosses, "Loss whose gradient is checked")->required();
    sub->add_option("--trials", grad_opts.trials, "Random points")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--tol", grad_opts.tol, "Pass when the max relative error is below this")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    sub->add_option("--seed", grad_opts.seed, "RNG seed")->capture_default_str();
  }

  ToytrainOptions toy_opts;
  {
    CLI::App* sub = subcommand(app, "toytrain", "Gradient descent on a sigmoid regression toy problem");
    add_choice(sub, "--loss", toy_opts.train.loss, kRegressionLosses, "Regression loss")->default_str("ce");
    add_choice(sub, "--init", toy_opts.train.init, kInits, "Initial theta; saturated puts +z0 on the intercept")
        ->default_str("saturated");
    sub->add_option("--z0", toy_opts.train.z0, "Intercept magnitude of the saturated inits")->capture_default_str();
    sub->add_option("--lr", toy_opts.train.learning_rate, "Learning rate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("--iters", toy_opts.train.max_iters, "Iterations")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--seed", toy_opts.seed, "Dataset seed")->capture_default_str();
    sub->add_option("--samples", toy_opts.n, "Dataset rows")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--features", toy_opts.d, "Features per row, intercept included")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    sub->add_option("-o,--out", toy_opts.out, "Trace CSV path")->capture_default_str();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (app.got_subcommand("anchors")) return cmd_anchors(anchors, out, err);
  if (app.got_subcommand("assign")) return cmd_assign(assign_opts, out, err);
  if (app.got_subcommand("nms")) return cmd_nms(nms_opts, out, err);
  if (app.got_subcommand("analyze")) return cmd_analyze(analyze_opts, out, err);
  if (app.got_subcommand("gradcheck")) return cmd_gradcheck(grad_opts, out, err);
  if (app.got_subcommand("toytrain")) return cmd_toytrain(toy_opts, out, err);
  return kExitUsage;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"objconf"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace objconf::cli

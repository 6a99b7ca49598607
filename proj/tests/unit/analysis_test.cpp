#include "objconf/analysis.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

#include "objconf/error.hpp"
#include "oracles.hpp"

namespace objconf {
namespace {

const std::string kTable1 = std::string(OBJCONF_DATA_DIR) + "/table1.csv";

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const ProportionRow* row_for(const ProportionReport& r, const std::string& id) {
  for (const auto& row : r.per_image) {
    if (row.image_id == id) return &row;
  }
  return nullptr;
}

TEST(Condition, ParseAndPrint) {
  EXPECT_EQ(parse_condition("cls>0.5"), Condition::cls_above(0.5));
  EXPECT_EQ(parse_condition(" iou>0.75 "), Condition::iou_above(0.75));
  EXPECT_EQ(to_string(Condition::cls_above(0.05)), "cls>0.05");
  EXPECT_EQ(to_string(Condition::iou_above(0.9)), "iou>0.9");
  for (const char* bad : {"iou>abc", "cls>", "cls<0.5", "iou>0.5x", "iou>1.5", "score>0.5"}) {
    EXPECT_THROW(parse_condition(bad), std::invalid_argument) << bad;
  }
}

TEST(CountFixture, ParsesIntoTenImages) {
  const auto stats = ingest_count_table(kTable1);
  ASSERT_EQ(stats.size(), 10u);
  EXPECT_EQ(stats[0].image_id, "Image1");
  EXPECT_EQ(stats[9].image_id, "Image10");
  EXPECT_EQ(stats[5].before_total, 364u);
  EXPECT_EQ(stats[5].after_total, 14u);
  EXPECT_EQ(stats[0].positive_num, 331u);
  for (const auto& s : stats) {
    EXPECT_EQ(s.before.size(), 11u);
    EXPECT_EQ(s.after.size(), 11u);
    EXPECT_TRUE(consistency_issues(s).empty()) << s.image_id;
  }
}

TEST(CountFixture, IouAboveHalfDeltas) {
  const auto stats = ingest_count_table(kTable1);
  const auto r = proportions_from_counts(stats, Condition::iou_above(0.5));
  ASSERT_EQ(r.per_image.size(), 10u);
  EXPECT_TRUE(r.rejected.empty());
  const ProportionRow* img6 = row_for(r, "Image6");
  ASSERT_NE(img6, nullptr);
  EXPECT_NEAR(img6->before_pct, 68.41, 0.01);
  EXPECT_NEAR(img6->after_pct, 28.57, 0.01);
  EXPECT_NEAR(img6->delta_pp, -39.84, 0.01);
  // The 31.5 drop sits in the second column; the first gives 11.34.
  EXPECT_NEAR(row_for(r, "Image2")->delta_pp, -31.50, 0.01);
  EXPECT_NEAR(row_for(r, "Image1")->delta_pp, -11.34, 0.01);
  EXPECT_NEAR(r.average_delta_pp, -19.52, 0.01);
  for (const auto& row : r.per_image) EXPECT_EQ(row.delta_pp, row.after_pct - row.before_pct);
}

TEST(CountFixture, ClsAboveHalfDeltas) {
  const auto stats = ingest_count_table(kTable1);
  const auto r = proportions_from_counts(stats, Condition::cls_above(0.5));
  std::vector<double> increases;
  for (const auto& row : r.per_image) {
    if (row.delta_pp > 0) increases.push_back(row.delta_pp);
  }
  ASSERT_EQ(increases.size(), 3u);
  EXPECT_NEAR(increases[0], 1.32, 0.01);
  EXPECT_NEAR(increases[1], 1.55, 0.01);
  EXPECT_NEAR(increases[2], 0.02, 0.01);
  EXPECT_NEAR(row_for(r, "Image3")->delta_pp, 1.55, 0.01);
  EXPECT_NEAR(r.average_delta_pp, -1.09, 0.01);
}

TEST(CountFixture, ByteIdenticalRoundTrip) {
  const auto stats = ingest_count_table(kTable1);
  std::ostringstream out;
  emit_count_table(out, stats);
  EXPECT_EQ(out.str(), slurp(kTable1));
}

TEST(CountFixture, WideLayoutHasOneRowPerStageCondition) {
  const auto stats = ingest_count_table(kTable1);
  std::ostringstream out;
  emit_table_layout(out, stats);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("stage,condition,Image1,Image2", 0), 0u);
  std::getline(in, line);
  EXPECT_EQ(line.rfind("Positive_NUM,iou>0.5,331,", 0), 0u);
  std::getline(in, line);
  EXPECT_EQ(line.rfind("Before NMS,cls>0.05,7213,", 0), 0u);
  std::size_t rows = 3;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 1u + 1u + 11u + 11u);
}

TEST(CountTable, ParseErrorsCarryLineNumbers) {
  std::istringstream in(
      "image_id,stage,condition,count\n"
      "a,before,cls>0.05,10\n"
      "a,before,iou>abc,3\n");
  try {
    parse_count_table(in);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(CountTable, MissingTotalRowIsRejected) {
  std::istringstream in(
      "image_id,stage,condition,count\n"
      "a,before,cls>0.05,10\n"
      "a,before,cls>0.5,3\n"
      "a,after,cls>0.5,1\n");
  EXPECT_THROW(parse_count_table(in), ParseError);
}

TEST(CountTable, OtherRejections) {
  auto fails = [](const std::string& body) {
    std::istringstream in(body);
    EXPECT_THROW(parse_count_table(in), ParseError) << body;
  };
  fails("");
  fails("id,stage,condition,count\n");
  fails("image_id,stage,condition,count\na,middle,cls>0.05,1\n");
  fails("image_id,stage,condition,count\na,before,cls>0.05,-1\n");
  fails("image_id,stage,condition,count\na,before,cls>0.05,1,2\n");
  fails("image_id,stage,condition,count\na,before,cls>0.05,1\na,before,cls>0.05,2\n");
  fails("image_id,stage,condition,count\na,positive,cls>0.5,1\n");
}

TEST(Proportions, ZeroTotalsAreRejectedWithReason) {
  ImageStats s;
  s.image_id = "empty";
  s.before_total = 5;
  s.after_total = 0;
  s.before[Condition::iou_above(0.5)] = 2;
  s.after[Condition::iou_above(0.5)] = 0;
  const auto r = proportions_from_counts(std::vector{s}, Condition::iou_above(0.5));
  EXPECT_TRUE(r.per_image.empty());
  ASSERT_EQ(r.rejected.size(), 1u);
  EXPECT_EQ(r.rejected[0].image_id, "empty");
  EXPECT_TRUE(std::isnan(r.average_delta_pp));
}

TEST(RoundPct, HalfUp) {
  EXPECT_EQ(round_pct(-39.8352), -39.84);
  EXPECT_EQ(round_pct(1.5517), 1.55);
  EXPECT_EQ(round_pct(0.125), 0.13);
  EXPECT_EQ(round_pct(-0.125), -0.12);
}

Detection scored(const std::string& id, Box b, double cls) {
  Detection d;
  d.image_id = id;
  d.box = b;
  d.cls_score = cls;
  return d;
}

TEST(ImageStats, CountsByMaxIou) {
  const GroundTruthBox gt{{0, 0, 10, 10}, 0};
  std::vector<Detection> dets;
  for (double target : {0.2, 0.6, 0.9}) dets.push_back(scored("x", {0, 0, 10.0 / target, 10}, 0.7));
  const std::vector<Condition> conds{Condition::iou_above(0.5), Condition::cls_above(0.0)};
  const auto s = compute_image_stats("x", dets, {}, std::vector{gt}, std::nullopt, conds);
  EXPECT_EQ(s.before.at(Condition::iou_above(0.5)), 2u);
  EXPECT_EQ(s.before.at(Condition::cls_above(0.0)), 3u);
  EXPECT_EQ(s.before_total, 3u);
  EXPECT_EQ(s.after_total, 0u);
  EXPECT_FALSE(s.positive_num);
}

TEST(ImageStats, IouIgnoresClass) {
  const std::vector<GroundTruthBox> gts{{{0, 0, 10, 10}, 5}};
  const std::vector<Detection> dets{scored("x", {0, 0, 10, 10}, 0.9)};
  const std::vector<Condition> conds{Condition::iou_above(0.9)};
  EXPECT_EQ(compute_image_stats("x", dets, dets, gts, std::nullopt, conds).after.at(conds[0]), 1u);
}

TEST(ImageStats, NoGroundTruthWarnsAndCountsZero) {
  const std::vector<Detection> dets{scored("x", {0, 0, 10, 10}, 0.9)};
  const std::vector<Condition> conds{Condition::iou_above(0.5)};
  std::vector<std::string> warnings;
  const auto s = compute_image_stats("x", dets, dets, {}, std::nullopt, conds, &warnings);
  EXPECT_EQ(s.before.at(conds[0]), 0u);
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(ImageStats, PositiveNumFromAnchors) {
  const std::vector<GroundTruthBox> gts{{{0, 0, 10, 10}, 0}};
  const std::vector<Anchor> anchors{{{0, 0, 10, 10}, 0, 0, 0}, {{0, 0, 10, 20}, 0, 0, 1}, {{0, 0, 25, 10}, 0, 0, 2}};
  const auto s = compute_image_stats("x", {}, {}, gts, std::span<const Anchor>(anchors), default_conditions());
  // IoUs 1, 0.5 (not strictly above), 0.4.
  EXPECT_EQ(s.positive_num, 1u);
}

TEST(ImageStats, RejectsForeignDetections) {
  const std::vector<Detection> dets{scored("y", {0, 0, 1, 1}, 0.5)};
  EXPECT_THROW(compute_image_stats("x", dets, {}, {}, std::nullopt, default_conditions()),
               std::invalid_argument);
}

struct RandomStage {
  std::vector<Detection> before, after;
  std::vector<GroundTruthBox> gts;
};

RandomStage random_stage(std::mt19937_64& rng) {
  RandomStage s;
  s.before = testing::random_detections(rng, 80, 3, "r");
  for (int i = 0; i < 3; ++i) s.gts.push_back({testing::random_box(rng), i});
  std::bernoulli_distribution keep(0.3);
  for (const auto& d : s.before) {
    if (keep(rng)) s.after.push_back(d);
  }
  return s;
}

TEST(ImageStatsProperties, AntiMonotoneAndSubsetBounded) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const auto st = random_stage(rng);
    const auto s = compute_image_stats("r", st.before, st.after, st.gts, std::nullopt, default_conditions());
    ASSERT_TRUE(consistency_issues(s).empty());
    for (const auto& [c, n] : s.after) ASSERT_LE(n, s.before.at(c));
  }
}

TEST(ImageStatsProperties, ProportionsInvariantUnderDuplication) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    auto st = random_stage(rng);
    const auto once = compute_image_stats("r", st.before, st.after, st.gts, std::nullopt, default_conditions());
    auto dup = [](std::vector<Detection> v) {
      const auto copy = v;
      v.insert(v.end(), copy.begin(), copy.end());
      return v;
    };
    const auto twice = compute_image_stats("r", dup(st.before), dup(st.after), st.gts, std::nullopt,
                                           default_conditions());
    if (once.after_total == 0) continue;
    for (const auto& c : default_conditions()) {
      const auto a = proportions_from_counts(std::vector{once}, c);
      const auto b = proportions_from_counts(std::vector{twice}, c);
      ASSERT_EQ(a.per_image.size(), 1u);
      ASSERT_NEAR(a.per_image[0].delta_pp, b.per_image[0].delta_pp, 1e-12);
    }
  }
}

TEST(ImageStatsProperties, EmitParseRoundTrip) {
  std::mt19937_64 rng(33);
  std::vector<ImageStats> all;
  for (int i = 0; i < 5; ++i) {
    auto st = random_stage(rng);
    for (auto* v : {&st.before, &st.after}) {
      for (auto& d : *v) d.image_id = "img" + std::to_string(i);
    }
    all.push_back(compute_image_stats("img" + std::to_string(i), st.before, st.after, st.gts,
                                      std::nullopt, default_conditions()));
  }
  std::ostringstream first;
  emit_count_table(first, all);
  std::istringstream in(first.str());
  const auto back = parse_count_table(in);
  std::ostringstream second;
  emit_count_table(second, back);
  EXPECT_EQ(first.str(), second.str());
  ASSERT_EQ(back.size(), all.size());
  EXPECT_EQ(back[2].before, all[2].before);
}

TEST(Scatter, PointsMatchPerDetectionLoop) {
  std::mt19937_64 rng(34);
  const auto dets = testing::random_detections(rng, 100, 2, "s");
  std::vector<GroundTruthBox> gts;
  for (int i = 0; i < 4; ++i) gts.push_back({testing::random_box(rng), 0});
  const auto pts = misalignment_summary(dets, gts);
  ASSERT_EQ(pts.size(), dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    double best = 0.0;
    for (const auto& g : gts) best = std::max(best, testing::oracle_iou(dets[i].box, g.box));
    ASSERT_NEAR(pts[i].iou, best, 1e-15);
    ASSERT_EQ(pts[i].cls, dets[i].cls_score);
  }
}

TEST(Scatter, ExactHitAndNoGroundTruth) {
  const GroundTruthBox gt{{1, 2, 3, 4}, 0};
  const std::vector<Detection> dets{scored("s", gt.box, 1.0)};
  const auto pts = misalignment_summary(dets, std::vector{gt});
  EXPECT_EQ(pts[0].iou, 1.0);
  EXPECT_EQ(pts[0].cls, 1.0);
  EXPECT_EQ(misalignment_summary(dets, {})[0].iou, 0.0);
  std::ostringstream out;
  write_scatter_csv(out, pts);
  EXPECT_EQ(out.str(), "image_id,iou,cls_score\ns,1,1\n");
}

}  // namespace
}  // namespace objconf

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "objconf/fusion.hpp"
#include "objconf/geometry.hpp"
#include "objconf/postprocess.hpp"

namespace {

using namespace objconf;

std::vector<Detection> random_dets(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, 800.0), size(8.0, 120.0), score(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, 9);
  std::vector<Detection> dets(n);
  for (auto& d : dets) {
    const double x = pos(rng), y = pos(rng);
    d.image_id = "bench";
    d.box = {x, y, x + size(rng), y + size(rng)};
    d.class_id = cls(rng);
    d.cls_score = score(rng);
    d.obj_score = score(rng);
  }
  return dets;
}

void BM_IouMatrix(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto dets = random_dets(n, 1);
  std::vector<Box> boxes;
  for (const auto& d : dets) boxes.push_back(d.box);
  const std::vector<Box> gts(boxes.begin(), boxes.begin() + std::min<std::size_t>(n, 20));
  for (auto _ : state) benchmark::DoNotOptimize(iou_matrix(boxes, gts));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n * gts.size()));
}
BENCHMARK(BM_IouMatrix)->Range(64, 16384);

void BM_GenerateAnchors(benchmark::State& state) {
  const auto cfg = AnchorGridConfig::retinanet();
  for (auto _ : state) benchmark::DoNotOptimize(generate_anchors(cfg, 1216, 800));
}
BENCHMARK(BM_GenerateAnchors);

void BM_InferencePipeline(benchmark::State& state) {
  const auto dets = random_dets(static_cast<std::size_t>(state.range(0)), 2);
  const FusionParams fusion{FusionMode::Product, 0.4, {}};
  for (auto _ : state) benchmark::DoNotOptimize(inference_pipeline(dets, fusion, NmsParams{}));
}
BENCHMARK(BM_InferencePipeline)->Range(100, 10000);

}  // namespace

// The distro benchmark_main archive carries LTO objects from another gcc.
BENCHMARK_MAIN();
